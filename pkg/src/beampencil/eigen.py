"""Spectrum of the matrix pencil ``A - lam*B`` through the compact reduction.

With ``A = L L^T`` the reduced matrix is ``R = -L^{-1} B L^{-T}``; every
nonzero eigenvalue ``mu`` of R gives the pencil eigenvalue ``lam = -1/mu``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .assembly import HermiteFunction, PencilMatrices, assemble_pencil, hermite_basis
from .problem import DEFAULT_SAMPLES, Mesh, ProblemSpec

MU_FLOOR = 1e-12
DRIFT_TOL = 1e-4
INERTIA_TAU = 1e-10


class ReductionError(linalg.LinAlgError):
    pass


class NotConvergedError(ValueError):
    pass


class NearSingularWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class ReducedMatrix:
    R: np.ndarray
    L: np.ndarray


def reduce(matrices: PencilMatrices | tuple) -> ReducedMatrix:
    """Cholesky-reduce ``(A, B)`` to the symmetric matrix ``R``."""
    A, B = (matrices.A, matrices.B) if isinstance(matrices, PencilMatrices) else matrices
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    try:
        L = linalg.cholesky(A, lower=True)
    except linalg.LinAlgError as exc:
        raise ReductionError("A is not positive definite; check the coefficient p") from exc
    X = linalg.solve_triangular(L, B, lower=True)
    R = -linalg.solve_triangular(L, X.T, lower=True)
    R = 0.5 * (R + R.T)
    nb = np.linalg.norm(B)
    recon = np.linalg.norm(L @ R @ L.T + B)
    if recon > 1e-10 * nb:
        raise ReductionError(f"reduction reconstruction error {recon:.3e}")
    return ReducedMatrix(R, L)


@dataclass(frozen=True)
class SpectrumEntry:
    index: int
    lam: float
    vector: np.ndarray
    converged: bool


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Signed-index spectrum.

    ``negatives`` runs ``lam_{-1} > lam_{-2} > ...`` (away from zero),
    ``positives`` runs ``lam_1 < lam_2 < ...``.  Eigenvector columns are
    A-normalised.  Convergence flags come from comparison with the doubled mesh.
    """

    negatives: np.ndarray
    positives: np.ndarray
    neg_vectors: np.ndarray
    pos_vectors: np.ndarray
    neg_converged: np.ndarray
    pos_converged: np.ndarray
    matrices: PencilMatrices

    @staticmethod
    def _leading(flags):
        bad = np.nonzero(~flags)[0]
        return int(bad[0]) if bad.size else int(flags.size)

    @property
    def converged_count(self):
        """Number of leading entries per branch that passed the mesh-doubling check."""
        return {"negative": self._leading(self.neg_converged),
                "positive": self._leading(self.pos_converged)}

    def entry(self, index: int) -> SpectrumEntry:
        if index == 0:
            raise IndexError("0 is never an eigenvalue")
        if index > 0:
            k = index - 1
            if k >= self.positives.size:
                raise IndexError(f"no eigenvalue with index {index}")
            return SpectrumEntry(index, float(self.positives[k]), self.pos_vectors[:, k],
                                 bool(self.pos_converged[k]))
        k = -index - 1
        if k >= self.negatives.size:
            raise IndexError(f"no eigenvalue with index {index}")
        return SpectrumEntry(index, float(self.negatives[k]), self.neg_vectors[:, k],
                             bool(self.neg_converged[k]))

    def to_json(self):
        return {
            "negatives": [float(v) for v in self.negatives],
            "positives": [float(v) for v in self.positives],
            "converged_count": self.converged_count,
            "n_elements": int(self.matrices.mesh.n_elements),
        }


def _raw_spectrum(matrices: PencilMatrices, mu_floor=MU_FLOOR):
    red = reduce(matrices)
    mu, W = linalg.eigh(red.R)
    norm_r = max(np.max(np.abs(mu)), np.finfo(float).tiny) if mu.size else 1.0
    keep = np.abs(mu) > mu_floor * norm_r
    mu, W = mu[keep], W[:, keep]
    lam = -1.0 / mu
    V = linalg.solve_triangular(red.L.T, W, lower=False)
    neg = lam < 0
    order_n = np.argsort(-lam[neg])  # closest to zero first
    order_p = np.argsort(lam[~neg])
    return (lam[neg][order_n], V[:, neg][:, order_n],
            lam[~neg][order_p], V[:, ~neg][:, order_p])


def _drift_flags(coarse, fine, tol):
    flags = np.zeros(coarse.size, dtype=bool)
    m = min(coarse.size, fine.size)
    flags[:m] = np.abs(coarse[:m] - fine[:m]) <= tol * np.abs(fine[:m])
    return flags


def pencil_spectrum(matrices: PencilMatrices, refined: PencilMatrices | None = None,
                    mu_floor=MU_FLOOR, drift_tol=DRIFT_TOL) -> Spectrum:
    """Eigen-decompose the reduced matrix and sort into signed branches.

    ``refined`` is the same problem on the doubled mesh; entries whose relative
    drift to it is at most ``drift_tol`` are flagged converged.  Without it no
    entry is flagged.
    """
    neg, nv, pos, pv = _raw_spectrum(matrices, mu_floor)
    if refined is not None:
        fneg, _, fpos, _ = _raw_spectrum(refined, mu_floor)
        nflag = _drift_flags(neg, fneg, drift_tol)
        pflag = _drift_flags(pos, fpos, drift_tol)
    else:
        nflag = np.zeros(neg.size, dtype=bool)
        pflag = np.zeros(pos.size, dtype=bool)
    return Spectrum(neg, pos, nv, pv, nflag, pflag, matrices)


def compute_spectrum(spec: ProblemSpec, mesh: Mesh, **kw) -> Spectrum:
    """Assemble on ``mesh`` and its refinement and return the flagged spectrum."""
    return pencil_spectrum(assemble_pencil(spec, mesh), assemble_pencil(spec, mesh.refined()), **kw)


def inertia_index(matrices: PencilMatrices | tuple, lam: float, tau=INERTIA_TAU) -> int:
    """Negative index of inertia of ``A - lam*B``.

    Eigenvalues below ``-tau*||A - lam*B||`` count as negative.  If an eigenvalue
    falls inside the dead band a NearSingularWarning is issued.
    """
    A, B = (matrices.A, matrices.B) if isinstance(matrices, PencilMatrices) else matrices
    ev = linalg.eigvalsh(A - lam * B)
    band = tau * np.max(np.abs(ev))
    if np.any(np.abs(ev) <= band):
        warnings.warn(f"A - lam*B is near-singular at lam={lam!r}", NearSingularWarning,
                      stacklevel=2)
    return int(np.count_nonzero(ev < -band))


def ldl_inertia(M):
    """Negative inertia of a symmetric matrix from its Bunch-Kaufman factorisation."""
    _, D, _ = linalg.ldl(M, lower=True)
    return int(np.count_nonzero(linalg.eigvalsh(D) < 0))


@dataclass(frozen=True, eq=False)
class EigenfunctionSample:
    xs: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    ddy: np.ndarray
    lam: float
    index: int
    residual: float
    function: HermiteFunction

    def to_json(self):
        return {"lambda": self.lam, "index": self.index, "xs": self.xs.tolist(),
                "y": self.y.tolist(), "dy": self.dy.tolist(), "ddy": self.ddy.tolist()}


def twice_integrated_residual(xs, y, ddy, lam, spec: ProblemSpec):
    """Distance of ``p y'' + lam*y - lam*c*int_0^x r y (x-t) dt`` from a linear function.

    For an exact eigenfunction this quantity is linear in x, so its deviation
    from the least-squares line (relative to max|p y''|) measures how far the
    sampled function is from a classical solution.
    """
    ry = spec.r(xs) * y
    # int_0^x r y (x - t) dt = x*int_0^x ry - int_0^x t ry
    from scipy.integrate import cumulative_trapezoid
    i0 = cumulative_trapezoid(ry, xs, initial=0.0)
    i1 = cumulative_trapezoid(xs * ry, xs, initial=0.0)
    m = spec.p(xs) * ddy
    w = m + lam * y - lam * spec.c * (xs * i0 - i1)
    coef = np.polyfit(xs, w, 1)
    dev = w - np.polyval(coef, xs)
    return float(np.max(np.abs(dev)) / max(np.max(np.abs(m)), np.finfo(float).tiny))


def reconstruct_eigenfunction(spectrum: Spectrum, index: int, samples=DEFAULT_SAMPLES,
                              require_converged=True) -> EigenfunctionSample:
    """Sample the eigenfunction of ``spectrum.entry(index)`` and its derivatives.

    Normalised to unit A-norm with ``y''(0) > 0``.
    """
    ent = spectrum.entry(index)
    if require_converged and not ent.converged:
        raise NotConvergedError(f"eigenvalue index {index} not converged under mesh doubling")
    pm = spectrum.matrices
    v = ent.vector / np.sqrt(ent.vector @ pm.A @ ent.vector)
    fn = pm.function(v)
    h0 = pm.mesh.h[0]
    ddy0 = float(hermite_basis(np.array(0.0), h0, 2) @ fn.coeffs[:4])
    if ddy0 < 0:
        fn = HermiteFunction(fn.nodes, -fn.coeffs)
    xs = np.linspace(0.0, 1.0, samples)
    y, dy, ddy = fn(xs), fn(xs, 1), fn(xs, 2)
    res = twice_integrated_residual(xs, y, ddy, ent.lam, pm.spec)
    return EigenfunctionSample(xs, y, dy, ddy, ent.lam, index, res, fn)


def b_orthogonality_defect(spectrum: Spectrum, which="negative"):
    """Largest ``|v_i^T B v_j|`` over distinct converged eigenvectors of one branch."""
    if which == "negative":
        V = spectrum.neg_vectors[:, spectrum.neg_converged]
    else:
        V = spectrum.pos_vectors[:, spectrum.pos_converged]
    if V.shape[1] < 2:
        return 0.0
    G = V.T @ spectrum.matrices.B @ V
    np.fill_diagonal(G, 0.0)
    return float(np.max(np.abs(G)))


def natural_condition_defect(sample: EigenfunctionSample, spec: ProblemSpec):
    """``|(p y'')'(1) + lam*alpha*y(1)|`` relative to max|y| for mass-end eigenfunctions."""
    from .assembly import end_shear

    fn = sample.function
    shear = end_shear(fn, spec.p)
    y1 = float(fn(np.array(1.0)))
    return abs(shear + sample.lam * spec.alpha * y1) / float(np.max(np.abs(sample.y)))
