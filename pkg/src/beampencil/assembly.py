"""Cubic Hermite (C1) finite elements for the quadratic forms of the pencils.

Global unknowns are nodal pairs ``(y(x_i), y'(x_i))``: index ``2*i`` holds the
value, ``2*i + 1`` the slope.  Essential conditions are imposed by deleting
rows and columns; natural conditions enter only through the forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from .problem import BoundaryKind, CoefficientField, ConfigError, Mesh, ProblemSpec


class AssemblyError(ValueError):
    pass


def hermite_basis(xi, h, deriv=0):
    """Cubic Hermite shape functions on an element of length ``h``.

    ``xi`` is the local coordinate in [0, 1]; returns an array of shape
    ``xi.shape + (4,)`` ordered (value left, slope left, value right, slope right),
    differentiated ``deriv`` times with respect to x.
    """
    xi = np.asarray(xi, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), xi.shape)
    if deriv == 0:
        cols = [1 - 3 * xi**2 + 2 * xi**3, h * (xi - 2 * xi**2 + xi**3),
                3 * xi**2 - 2 * xi**3, h * (xi**3 - xi**2)]
    elif deriv == 1:
        cols = [(-6 * xi + 6 * xi**2) / h, 1 - 4 * xi + 3 * xi**2,
                (6 * xi - 6 * xi**2) / h, 3 * xi**2 - 2 * xi]
    elif deriv == 2:
        cols = [(-6 + 12 * xi) / h**2, (-4 + 6 * xi) / h,
                (6 - 12 * xi) / h**2, (6 * xi - 2) / h]
    elif deriv == 3:
        one = np.ones_like(xi)
        cols = [12 * one / h**3, 6 * one / h**2, -12 * one / h**3, 6 * one / h**2]
    else:
        raise ValueError("deriv must be 0..3")
    return np.stack(cols, axis=-1)


def _quadrature_points(mesh: Mesh, breaks, nq):
    """Gauss points on every element, split at the given interior breakpoints."""
    nodes = mesh.nodes
    cuts = np.union1d(nodes, breaks[(breaks > 0.0) & (breaks < 1.0)]) if len(breaks) else nodes
    a, b = cuts[:-1], cuts[1:]
    elem = np.clip(np.searchsorted(nodes, 0.5 * (a + b), side="right") - 1, 0, mesh.n_elements - 1)
    g, w = leggauss(nq)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    x = (a[:, None] + (b - a)[:, None] * g[None, :]).ravel()
    wt = ((b - a)[:, None] * w[None, :]).ravel()
    e = np.repeat(elem, nq)
    return x, wt, e


def _n_gauss(extra_degree):
    return max(5, int(np.ceil((extra_degree + 1) / 2)))


def element_dofs(mesh: Mesh):
    e = np.arange(mesh.n_elements)
    return np.stack([2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3], axis=1)


def integrate_form(mesh: Mesh, coef, di, dj, nq=None):
    """Full matrix of ``int coef * phi_i^(di) * phi_j^(dj) dx`` over all Hermite functions.

    ``coef`` is a CoefficientField or a plain callable (then ``nq`` should be given).
    The result is symmetrised when ``di == dj``.
    """
    if isinstance(coef, CoefficientField):
        breaks = coef.breakpoints
        deg = coef.degree
    else:
        breaks = np.empty(0)
        deg = 6
    if nq is None:
        nq = _n_gauss((3 - di) + (3 - dj) + deg)
    x, wt, e = _quadrature_points(mesh, breaks, nq)
    h = mesh.h[e]
    xi = (x - mesh.nodes[e]) / h
    Di = hermite_basis(xi, h, di)
    Dj = Di if dj == di else hermite_basis(xi, h, dj)
    cw = wt * np.asarray(coef(x), dtype=float)
    outer = np.einsum("q,qi,qj->qij", cw, Di, Dj)
    ke = np.zeros((mesh.n_elements, 4, 4))
    np.add.at(ke, e, outer)
    ndof = 2 * mesh.nodes.size
    K = np.zeros((ndof, ndof))
    dofs = element_dofs(mesh)
    np.add.at(K, (dofs[:, :, None], dofs[:, None, :]), ke)
    if di == dj:
        K = 0.5 * (K + K.T)
    return K


def load_vector(mesh: Mesh, func, deriv=0, nq=8, breaks=()):
    """``int func * phi_i^(deriv) dx`` for every Hermite function."""
    x, wt, e = _quadrature_points(mesh, np.asarray(breaks, dtype=float), nq)
    h = mesh.h[e]
    D = hermite_basis((x - mesh.nodes[e]) / h, h, deriv)
    contrib = (wt * np.asarray(func(x), dtype=float))[:, None] * D
    b = np.zeros(2 * mesh.nodes.size)
    np.add.at(b, element_dofs(mesh)[e], contrib)
    return b


def fixed_dofs(mesh: Mesh, bc: BoundaryKind, order=4):
    """Indices removed by the essential conditions.

    ``order=4``: clamped at 0, and at 1 either clamped (y, y') or y' only.
    ``order=2``: y(0)=0, plus y(1)=0 for the clamped-clamped family.
    """
    last = 2 * mesh.n_elements
    if order == 4:
        fixed = [0, 1, last + 1] if bc.mass_end else [0, 1, last, last + 1]
    elif order == 2:
        fixed = [0] if bc.mass_end else [0, last]
    else:
        raise ValueError("order must be 2 or 4")
    return np.array(fixed)


def free_dofs(mesh: Mesh, bc: BoundaryKind, order=4):
    free = np.setdiff1d(np.arange(2 * mesh.nodes.size), fixed_dofs(mesh, bc, order))
    if free.size == 0:
        raise AssemblyError("mesh too coarse: zero free degrees of freedom")
    return free


def dof_map_for(free):
    """Rows ``(node, kind)`` with kind 0 = value, 1 = slope."""
    return np.stack([free // 2, free % 2], axis=1)


def end_value_index(free, mesh: Mesh):
    """Position of the y(1) unknown among ``free`` (None if it is fixed)."""
    hit = np.nonzero(free == 2 * mesh.n_elements)[0]
    return int(hit[0]) if hit.size else None


@dataclass(frozen=True, eq=False)
class HermiteFunction:
    """A C1 piecewise-cubic function given by its full nodal vector."""

    nodes: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def from_free(cls, mesh: Mesh, free, values):
        full = np.zeros(2 * mesh.nodes.size)
        full[free] = values
        return cls(mesh.nodes, full)

    def __call__(self, x, deriv=0):
        x = np.asarray(x, dtype=float)
        nodes = self.nodes
        e = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
        h = nodes[e + 1] - nodes[e]
        D = hermite_basis((x - nodes[e]) / h, h, deriv)
        c = self.coeffs[np.stack([2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3], axis=-1)]
        return np.sum(D * c, axis=-1)


@dataclass(frozen=True, eq=False)
class PencilMatrices:
    """Discrete forms: ``A ~ <T(0)y, y>`` and ``B ~ <-T'(lambda) y, y>``."""

    A: np.ndarray
    B: np.ndarray
    free: np.ndarray
    spec: ProblemSpec
    mesh: Mesh

    @property
    def dof_map(self):
        return dof_map_for(self.free)

    @property
    def size(self):
        return self.free.size

    def function(self, v):
        return HermiteFunction.from_free(self.mesh, self.free, v)

    def pencil(self, lam):
        return self.A - lam * self.B


@dataclass(frozen=True, eq=False)
class ModelMatrices:
    """Discrete forms of the model pencil: ``int p_hat |y''|^2`` and ``int r_hat |y|^2 + a|y(1)|^2``."""

    A_hat: np.ndarray
    B_hat: np.ndarray
    free: np.ndarray
    bc: BoundaryKind
    mesh: Mesh

    @property
    def dof_map(self):
        return dof_map_for(self.free)


def _sub(K, free):
    return K[np.ix_(free, free)]


def assemble_pencil(spec: ProblemSpec, mesh: Mesh) -> PencilMatrices:
    free = free_dofs(mesh, spec.bc)
    A = _sub(integrate_form(mesh, spec.p, 2, 2), free)
    one = CoefficientField.constant(1.0)
    B = _sub(integrate_form(mesh, one, 1, 1), free)
    if spec.c != 0.0:
        B = B + spec.c * _sub(integrate_form(mesh, spec.r, 0, 0), free)
    if spec.bc.mass_end and spec.alpha != 0.0:
        k = end_value_index(free, mesh)
        B[k, k] += spec.alpha
    return PencilMatrices(A, B, free, spec, mesh)


def assemble_model(p_hat: CoefficientField, r_hat: CoefficientField, alpha, bc: BoundaryKind,
                   mesh: Mesh) -> ModelMatrices:
    """``r_hat`` may take either sign; only ``p_hat`` needs to be positive."""
    free = free_dofs(mesh, bc)
    A_hat = _sub(integrate_form(mesh, p_hat, 2, 2), free)
    B_hat = _sub(integrate_form(mesh, r_hat, 0, 0), free)
    if bc.mass_end and alpha != 0.0:
        k = end_value_index(free, mesh)
        B_hat[k, k] += alpha
    return ModelMatrices(A_hat, B_hat, free, bc, mesh)


@dataclass(frozen=True, eq=False)
class BVPSolution:
    function: HermiteFunction
    values: np.ndarray
    residual: float
    mesh: Mesh


def solve_model_bvp(p: CoefficientField, r: CoefficientField, alpha, bc: BoundaryKind, f,
                    mesh: Mesh) -> BVPSolution:
    """Weak solution of ``(p y'')'' = r f`` with the BC family of ``bc``.

    For the mass-end family the natural condition is ``(p y'')'(1) + alpha f(1) = 0``,
    which shows up as the load ``alpha * f(1)`` on the y(1) unknown.
    ``f`` is a vectorised callable on [0, 1].
    """
    free = free_dofs(mesh, bc)
    A = _sub(integrate_form(mesh, p, 2, 2), free)
    breaks = np.asarray(r.breakpoints) if isinstance(r, CoefficientField) else ()
    b = load_vector(mesh, lambda x: r(x) * f(x), breaks=breaks)[free]
    if bc.mass_end and alpha != 0.0:
        b[end_value_index(free, mesh)] += alpha * float(f(np.array(1.0)))
    try:
        cf = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as exc:  # impossible for positive p
        raise AssertionError("model stiffness matrix is not positive definite") from exc
    y = linalg.cho_solve(cf, b)
    # normwise backward error of the linear solve
    scale = np.linalg.norm(A, np.inf) * np.max(np.abs(y), initial=0.0) + np.max(np.abs(b), initial=0.0)
    res = float(np.max(np.abs(A @ y - b)) / scale) if scale > 0 else 0.0
    return BVPSolution(HermiteFunction.from_free(mesh, free, y), y, res, mesh)


def end_shear(fn: HermiteFunction, p: CoefficientField, nodes_used=4):
    """Estimate ``(p y'')'(1)`` from the nodal data of the last few nodes.

    Fits the degree ``2*nodes_used - 1`` Hermite interpolant through the nodal
    values and slopes and differentiates it; independent of the element
    polynomials, so it recovers the natural condition from nodal data alone.
    """
    k = nodes_used
    xs = fn.nodes[-k:]
    vals = fn.coeffs[0::2][-k:]
    slopes = fn.coeffs[1::2][-k:]
    s = (xs - 1.0)
    # confluent Vandermonde in powers of (x - 1)
    deg = 2 * k
    powers = np.arange(deg)
    V = np.vstack([s[:, None] ** powers, powers * s[:, None] ** np.maximum(powers - 1, 0)])
    rhs = np.concatenate([vals, slopes])
    coef = np.linalg.solve(V, rhs)
    y2 = 2.0 * coef[2]
    y3 = 6.0 * coef[3]
    one = np.array(1.0)
    return float(p.derivative(one) * y2 + p(one) * y3)


def export_csv(matrix, path):
    """Write a full symmetric matrix as row-major CSV."""
    np.savetxt(path, np.asarray(matrix), delimiter=",", fmt="%.17g")


__all__ = [
    "AssemblyError", "BVPSolution", "ConfigError", "HermiteFunction", "ModelMatrices",
    "PencilMatrices", "assemble_model", "assemble_pencil", "end_shear", "export_csv",
    "free_dofs", "hermite_basis", "integrate_form", "load_vector", "solve_model_bvp",
]
