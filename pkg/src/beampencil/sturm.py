"""Second-order machinery: the admissible half-line, the positive Sturm
solution sigma and the change of variable it induces, and negative counts of
the associated second-order problems.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy import integrate, linalg

from . import kernels
from .assembly import assemble_model, free_dofs, integrate_form, end_value_index
from .problem import BoundaryKind, CoefficientField, Mesh, ProblemSpec

SIGMA_STEPS = 32000
LAMBDA_MARGIN = 1e-9


class NotAdmissibleError(ValueError):
    pass


class DisconjugacyError(RuntimeError):
    pass


_ONE = CoefficientField.constant(1.0)


def _dirichlet_forms(p: CoefficientField, mesh: Mesh):
    free = free_dofs(mesh, BoundaryKind.CLAMPED_CLAMPED, order=2)
    K = integrate_form(mesh, p, 1, 1)[np.ix_(free, free)]
    M = integrate_form(mesh, _ONE, 0, 0)[np.ix_(free, free)]
    return K, M


def form_min_eigenvalue(p: CoefficientField, lam, mesh: Mesh):
    """Smallest eigenvalue of ``int p|y'|^2 - lam|y|^2`` relative to the L2 mass."""
    K, M = _dirichlet_forms(p, mesh)
    return float(linalg.eigh(K - lam * M, M, eigvals_only=True, subset_by_index=[0, 0])[0])


@dataclass(frozen=True)
class AdmissibleSet:
    """Lambda(p) = (-inf, sup_lambda)."""

    sup_lambda: float
    n_elements: int

    def contains(self, lam, margin=LAMBDA_MARGIN):
        return lam < self.sup_lambda - margin * max(1.0, abs(self.sup_lambda))

    def to_json(self):
        return {"sup_lambda": self.sup_lambda, "n_elements": self.n_elements}


def admissible_sup(p: CoefficientField, mesh: Mesh, rel_tol=1e-6, max_doublings=4) -> AdmissibleSet:
    """First Dirichlet eigenvalue of ``-(p y')' = lam y``, refined by mesh doubling."""
    def first(m):
        K, M = _dirichlet_forms(p, m)
        return float(linalg.eigh(K, M, eigvals_only=True, subset_by_index=[0, 0])[0])

    cur = mesh
    val = first(cur)
    for _ in range(max_doublings):
        nxt = cur.refined()
        new = first(nxt)
        done = abs(new - val) <= rel_tol * abs(new)
        cur, val = nxt, new
        if done:
            break
    return AdmissibleSet(val, cur.n_elements)


@dataclass(frozen=True, eq=False)
class SigmaProfile:
    """Uniformly positive solution of ``-(p s')' = lam s`` built as ``u + w``.

    ``u`` starts at x=0 with ``u(0)=0, (p u')(0)=1``; ``w`` starts at x=1 with
    ``w(1)=0, (p w')(1)=-1``.  ``t`` is the normalised primitive of sigma.
    """

    lam: float
    xs: np.ndarray
    sigma: np.ndarray
    dsigma: np.ndarray
    flux: np.ndarray
    omega: float
    t: np.ndarray
    choice: str = "u+w"

    def ode_residual(self, points=1000):
        """Max of ``|-(p s')' - lam s|`` on an interior grid, relative to max|s|.

        ``(p s')'`` comes from a fourth-order central difference of the flux.
        """
        q, h = self.flux, self.xs[1] - self.xs[0]
        dq = (q[:-4] - 8 * q[1:-3] + 8 * q[3:-1] - q[4:]) / (12 * h)
        res = np.abs(-dq - self.lam * self.sigma[2:-2])
        idx = np.unique(np.linspace(0, res.size - 1, points).round().astype(int))
        return float(np.max(res[idx]) / np.max(np.abs(self.sigma)))


def sigma_solution(p: CoefficientField, lam, admissible: AdmissibleSet, steps=SIGMA_STEPS) -> SigmaProfile:
    if not admissible.contains(lam):
        raise NotAdmissibleError(
            f"lambda={lam!r} not in the admissible set (-inf, {admissible.sup_lambda!r})")
    n = int(steps)
    h = 1.0 / n
    half = np.linspace(0.0, 1.0, 2 * n + 1)
    inv_p = np.ascontiguousarray(1.0 / p(half))
    u, qu, iu = kernels.rk4_sturm(inv_p, float(lam), h, 0.0, 1.0)
    wb, qwb, iwb = kernels.rk4_sturm(np.ascontiguousarray(inv_p[::-1]), float(lam), -h, 0.0, -1.0)
    w, qw = wb[::-1], qwb[::-1]
    tail = -iwb[::-1]  # int_x^1 w
    if np.any(u[1:] <= 0.0) or np.any(w[:-1] <= 0.0):
        raise DisconjugacyError(f"disconjugacy violated at lambda={lam!r} (too close to the admissible boundary)")
    xs = half[::2].copy()
    sigma = u + w
    flux = qu + qw
    cum = iu + (tail[0] - tail)
    omega = float(cum[-1])
    t = cum / omega
    t[0], t[-1] = 0.0, 1.0
    return SigmaProfile(float(lam), xs, sigma, flux / p(xs), flux, omega, t)


@dataclass(frozen=True, eq=False)
class ModelProblem:
    p_hat: CoefficientField
    r_hat: CoefficientField
    alpha_term: float
    lam: float
    t: np.ndarray

    @functools.cached_property
    def quadrature(self):
        """Gauss points, weights and (p_hat, r_hat) values per table piece (both share the t knots)."""
        g, w = leggauss(4)
        a, b = self.t[:-1], self.t[1:]
        tt = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * g[None, :]
        ww = (0.5 * (b - a))[:, None] * w[None, :]
        return tt, ww, self.p_hat(tt), self.r_hat(tt)

    def to_json(self, stride=1):
        sl = slice(None, None, stride)
        return {"lambda": self.lam, "t": self.t[sl].tolist(),
                "p_hat": list(self.p_hat.values[sl]), "r_hat": list(self.r_hat.values[sl]),
                "alpha_term": self.alpha_term}


def transform_pencil(spec: ProblemSpec, lam, profile: SigmaProfile) -> ModelProblem:
    """Tabulate p_hat = p s^3/w^3 and r_hat = lam c r w/s on the image grid t(x)."""
    xs, s, om = profile.xs, profile.sigma, profile.omega
    p_hat = spec.p(xs) * s**3 / om**3
    r_hat = lam * spec.c * spec.r(xs) * om / s + 0.0  # no signed zeros in output
    return ModelProblem(CoefficientField.table(profile.t, p_hat).certify("p_hat"),
                        CoefficientField.table(profile.t, r_hat),
                        float(lam * spec.alpha) + 0.0, float(lam), profile.t)


def random_test_function(rng: np.random.Generator, bc: BoundaryKind, degree=4) -> Polynomial:
    """Random polynomial with y(0)=y'(0)=y'(1)=0, plus y(1)=0 for clamped-clamped."""
    q = Polynomial(rng.standard_normal(degree + 1))
    x = Polynomial([0.0, 1.0])
    if bc is BoundaryKind.CLAMPED_CLAMPED:
        return x**2 * (1 - x) ** 2 * q
    g = x**2 * q
    return g - g.deriv()(1.0) * (x**3 - x**2)


def _simpson(f, xs):
    return float(integrate.simpson(f, x=xs))


def congruence_defect(spec: ProblemSpec, model: ModelProblem, profile: SigmaProfile, y: Polynomial):
    """Relative gap between ``<T(lam) z, z>`` (z = y o t) and the model form of y.

    The T side is integrated in x, the model side in t from the tabulated
    coefficients.  Normalised by ``int p_hat |y''|^2 dt``.
    """
    lam = profile.lam
    xs, tt, s, ds, om = profile.xs, profile.t, profile.sigma, profile.dsigma, profile.omega
    d1, d2 = y.deriv(1), y.deriv(2)
    z = y(tt)
    z1 = d1(tt) * s / om
    z2 = d2(tt) * s**2 / om**2 + d1(tt) * ds / om
    lhs = _simpson(spec.p(xs) * z2**2 - lam * (z1**2 + spec.c * spec.r(xs) * z**2), xs)
    # tables are linear between knots, so Gauss per piece integrates them exactly
    tq, wq, pq, rq = model.quadrature
    energy = float(np.sum(wq * pq * d2(tq) ** 2))
    rhs = energy - float(np.sum(wq * rq * y(tq) ** 2))
    if spec.bc.mass_end:
        lhs -= lam * spec.alpha * z[-1] ** 2
        rhs -= model.alpha_term * y(1.0) ** 2
    return abs(lhs - rhs) / energy


def kernel_residual(model: ModelProblem, bc: BoundaryKind, mesh: Mesh):
    """Smallest singular value of the model matrix ``A_hat - B_hat`` in A_hat-energy scaling.

    The model carries lam*alpha in its end slot, so a pencil eigenvalue lam
    makes this matrix singular up to discretisation error.
    """
    mm = assemble_model(model.p_hat, model.r_hat, model.alpha_term, bc, mesh)
    L = linalg.cholesky(mm.A_hat, lower=True)
    X = linalg.solve_triangular(L, mm.B_hat, lower=True)
    S = linalg.solve_triangular(L, X.T, lower=True)
    nu = linalg.eigvalsh(0.5 * (S + S.T))
    return float(np.min(np.abs(1.0 - nu)))


def second_order_form(spec: ProblemSpec, mesh: Mesh):
    """Matrix of ``int |y'|^2 + c r |y|^2 (+ alpha |y(1)|^2)`` on the second-order space."""
    free = free_dofs(mesh, spec.bc, order=2)
    Q = integrate_form(mesh, _ONE, 1, 1)[np.ix_(free, free)]
    if spec.c != 0.0:
        Q = Q + spec.c * integrate_form(mesh, spec.r, 0, 0)[np.ix_(free, free)]
    if spec.bc.mass_end and spec.alpha != 0.0:
        k = end_value_index(free, mesh)
        Q[k, k] += spec.alpha
    return Q


def sl_negative_count(spec: ProblemSpec, mesh: Mesh, tau=1e-10) -> int:
    """Negative eigenvalue count of ``-y'' + c r y = lam y`` with the matching BCs.

    Clamped-clamped pairs with y(0)=y(1)=0; mass-end with y(0)=0, y'(1)+alpha y(1)=0.
    """
    ev = linalg.eigvalsh(second_order_form(spec, mesh))
    return int(np.count_nonzero(ev < -tau * np.max(np.abs(ev))))
