"""Zeros, sign changes and the disconjugacy cones of ``(p y'')'' = r y``."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from . import kernels
from .assembly import solve_model_bvp
from .problem import BoundaryKind, CoefficientField, Mesh

log = logging.getLogger(__name__)

VALUE_TOL = 1e-6
DERIV_TOL = 1e-5
RK4_STEP = 1e-4


def sign_pattern(samples, value_tol):
    """Signs of the samples outside the dead band ``|s| <= value_tol``."""
    s = np.asarray(samples, dtype=float)
    q = np.where(s > value_tol, 1, np.where(s < -value_tol, -1, 0))
    return q[q != 0]


def count_sign_changes(samples, value_tol=0.0) -> int:
    """Number of sign flips after quantising to {-, 0, +} and dropping zeros.

    Returns 0 when every sample lies in the dead band.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    q = sign_pattern(samples, value_tol)
    return int(np.count_nonzero(q[1:] != q[:-1]))


@dataclass(frozen=True)
class Zero:
    x: float
    simple: bool

    def to_json(self):
        return {"x": self.x, "simple": self.simple}


@dataclass(frozen=True)
class ZeroReport:
    zeros: tuple
    sign_changes: int
    value_tol: float
    deriv_tol: float
    degenerate: bool = False
    endpoint_zeros: tuple = field(default_factory=tuple)

    @property
    def count(self):
        return len(self.zeros)

    @property
    def all_simple(self):
        return all(z.simple for z in self.zeros)

    def to_json(self):
        return {"zeros": [z.to_json() for z in self.zeros], "count": self.count,
                "sign_changes": self.sign_changes, "all_simple": self.all_simple,
                "value_tol": self.value_tol, "deriv_tol": self.deriv_tol,
                "degenerate": self.degenerate, "endpoint_zeros": list(self.endpoint_zeros)}


def _bisect(fn, a, b, fa, tol=1e-12, maxit=200):
    for _ in range(maxit):
        m = 0.5 * (a + b)
        fm = float(fn(m))
        if abs(fm) <= tol or b - a <= 4e-16:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def locate_zeros(sample, value_tol=VALUE_TOL, deriv_tol=DERIV_TOL) -> ZeroReport:
    """Interior zeros of a sampled function with a Hermite interpolant.

    ``sample`` needs ``xs``, ``y``, ``dy`` and ``function`` (as produced by
    ``reconstruct_eigenfunction``).  ``value_tol`` and ``deriv_tol`` are relative
    to ``max|y|`` and ``max|y'|``.  Dead-band runs touching x=0 or x=1 are
    boundary values, not interior zeros; an interior dead-band run without a
    sign change is reported as a non-simple (touching) zero.
    """
    xs, y, dy = np.asarray(sample.xs), np.asarray(sample.y), np.asarray(sample.dy)
    fn = sample.function
    ymax = float(np.max(np.abs(y)))
    dmax = float(np.max(np.abs(dy)))
    vt = value_tol * ymax
    q = np.where(y > vt, 1, np.where(y < -vt, -1, 0))
    nz = np.nonzero(q)[0]
    if nz.size == 0:
        return ZeroReport((), 0, value_tol, deriv_tol, degenerate=True)
    endpoint = []
    if nz[0] > 0:
        endpoint.append(0.0)
    if nz[-1] < xs.size - 1:
        endpoint.append(1.0)
    found = []
    for i, j in zip(nz[:-1], nz[1:]):
        if q[i] != q[j]:
            found.append((_bisect(fn, xs[i], xs[j], y[i], tol=1e-12 * max(ymax, 1e-300)), True))
        elif j > i + 1:
            k = i + 1 + int(np.argmin(np.abs(y[i + 1:j])))
            found.append((float(xs[k]), False))
    zeros = []
    merge = 2.0 / xs.size
    for x0, is_cross in found:
        simple = is_cross and abs(float(fn(x0, 1))) >= deriv_tol * dmax
        if zeros and x0 - zeros[-1].x < merge:
            zeros[-1] = Zero(zeros[-1].x, False)
            continue
        zeros.append(Zero(float(x0), bool(simple)))
    if endpoint:
        log.debug("excluded endpoint zeros at %s", endpoint)
    sc = int(np.count_nonzero(q[nz][1:] != q[nz][:-1]))
    return ZeroReport(tuple(zeros), sc, value_tol, deriv_tol, False, tuple(endpoint))


@dataclass(frozen=True)
class ConeState:
    """Initial quadruple ``(y, y', p y'', (p y'')')`` at ``a``.

    Forward cone: all components >= 0, a in [0, 1).  Backward cone: signs
    (+, -, +, -) with non-strict inequalities, a in (0, 1].
    """

    a: float
    values: tuple
    direction: str = "forward"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (4,):
            raise ValueError("quadruple must have four components")
        if not np.any(v):
            raise ValueError("trivial solution: all-zero initial quadruple")
        if self.direction == "forward":
            if not 0.0 <= self.a < 1.0 or np.any(v < 0):
                raise ValueError("forward cone needs a in [0,1) and all components >= 0")
        elif self.direction == "backward":
            if not 0.0 < self.a <= 1.0 or np.any(v * _BACK_SIGNS < 0):
                raise ValueError("backward cone needs a in (0,1] and signs (+,-,+,-)")
        else:
            raise ValueError("direction must be 'forward' or 'backward'")


_BACK_SIGNS = np.array([1.0, -1.0, 1.0, -1.0])


def _integrate_beam(p: CoefficientField, r: CoefficientField, a, b, states, step=RK4_STEP):
    n = max(1, int(np.ceil(abs(b - a) / step - 1e-9)))
    h = (b - a) / n
    half = a + (b - a) * np.linspace(0.0, 1.0, 2 * n + 1)
    inv_p = np.ascontiguousarray(1.0 / p(half))
    rr = np.ascontiguousarray(r(half))
    return kernels.rk4_beam(inv_p, rr, h, np.ascontiguousarray(states, dtype=float))


def disconjugacy_batch(p, r, a, states, direction="forward", step=RK4_STEP):
    """Endpoint quadruples and strict-cone flags for many initial states at ``a``."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    far = 1.0 if direction == "forward" else 0.0
    end = _integrate_beam(p, r, a, far, states, step)
    if direction == "forward":
        ok = np.all(end > 0, axis=1)
    else:
        ok = np.all(end * _BACK_SIGNS > 0, axis=1)
    return end, ok


def disconjugacy_check(p: CoefficientField, r: CoefficientField, state: ConeState, step=RK4_STEP):
    """Integrate ``(p y'')'' = r y`` from the cone state to the far endpoint.

    Returns ``(quadruple, ok)`` where ``ok`` says the endpoint quadruple lies
    strictly inside the corresponding cone.
    """
    end, ok = disconjugacy_batch(p, r, state.a, [state.values], state.direction, step)
    return end[0], bool(ok[0])


@dataclass(frozen=True)
class SignChangeResult:
    k_in: int
    k_out: int

    @property
    def passed(self):
        return self.k_out <= self.k_in

    def __iter__(self):
        return iter((self.k_in, self.k_out, self.passed))


def signchange_noninc_check(p: CoefficientField, r: CoefficientField, alpha, bc: BoundaryKind, f,
                            mesh: Mesh, samples=2001, value_tol=1e-9) -> SignChangeResult:
    """Compare sign changes of ``f`` with those of the solution of ``(p y'')'' = r f``.

    ``f`` is a numpy Polynomial (or any vectorised callable); ``value_tol`` is
    relative to each function's sup-norm on the sample grid.
    """
    if alpha < 0:
        raise ValueError("the non-increase property needs alpha >= 0")
    xs = np.linspace(0.0, 1.0, samples)
    fv = np.asarray(f(xs), dtype=float)
    sol = solve_model_bvp(p, r, alpha, bc, f, mesh)
    yv = sol.function(xs)
    k_in = count_sign_changes(fv, value_tol * np.max(np.abs(fv)))
    k_out = count_sign_changes(yv, value_tol * max(np.max(np.abs(yv)), 1e-300))
    return SignChangeResult(k_in, k_out)


def sample_function(fn, samples=2001):
    """Sample record usable by :func:`locate_zeros`.

    ``fn`` is a HermiteFunction, a numpy Polynomial, or any ``fn(x, deriv)``.
    """
    if isinstance(fn, Polynomial):
        poly = fn
        fn = lambda x, deriv=0: poly.deriv(deriv)(x) if deriv else poly(x)  # noqa: E731
    xs = np.linspace(0.0, 1.0, samples)
    return _Sample(xs, np.asarray(fn(xs)), np.asarray(fn(xs, 1)), fn)


@dataclass(frozen=True, eq=False)
class _Sample:
    xs: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    function: object
