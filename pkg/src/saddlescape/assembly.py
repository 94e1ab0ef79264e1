"""P1 finite element operators on interior degrees of freedom.

All bilinear forms are integrated exactly: the integrands are polynomials on
each simplex, so the barycentric moment formula

    int_e l0^a0 ... ld^ad = |e| d! a0! ... ad! / (d + a0 + ... + ad)!

gives closed-form local matrices. Dirichlet conditions are imposed by
dropping boundary rows and columns.
"""
from __future__ import annotations

from itertools import product
from math import factorial

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FactorizationError
from .mesh import Mesh

__all__ = [
    "assemble_mass",
    "assemble_stiffness",
    "assemble_weighted_mass",
    "assemble_full",
    "elliptic_projection",
    "interpolate",
    "l2_inner",
    "l2_norm",
]


def _moment_tensor(d: int, order: int) -> np.ndarray:
    """Normalized integrals ``int_e prod(lambda_i) / |e|`` for all index tuples."""
    k = d + 1
    out = np.empty((k,) * order)
    for idx in product(range(k), repeat=order):
        counts = np.bincount(idx, minlength=k)
        num = factorial(d) * np.prod([factorial(c) for c in counts])
        out[idx] = num / factorial(d + order)
    return out


def _barycentric_gradients(mesh: Mesh) -> np.ndarray:
    """Constant gradients of the element hat functions, shape (n_el, d+1, d)."""
    verts = mesh.nodes[mesh.elements]
    B = np.transpose(verts[:, 1:] - verts[:, :1], (0, 2, 1))
    Binv = np.linalg.inv(B)
    grads = np.empty((len(verts), mesh.dim + 1, mesh.dim))
    grads[:, 1:] = Binv
    grads[:, 0] = -Binv.sum(axis=1)
    return grads


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_array:
    k = mesh.dim + 1
    rows = np.repeat(mesh.elements, k, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, k)).ravel()
    A = sp.coo_array((local.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()
    A.sum_duplicates()
    return A


def _symmetrize(A):
    return ((A + A.T) * 0.5).tocsr()


def _restrict(mesh: Mesh, A) -> sp.csr_array:
    ids = mesh.interior_ids
    return _symmetrize(A[ids][:, ids])


def assemble_full(mesh: Mesh, kind: str, weight: np.ndarray | None = None) -> sp.csr_array:
    """Assemble over all nodes, boundary included."""
    meas = mesh.element_measures()
    if kind == "mass":
        local = meas[:, None, None] * _moment_tensor(mesh.dim, 2)[None]
    elif kind == "stiffness":
        G = _barycentric_gradients(mesh)
        local = meas[:, None, None] * np.einsum("eik,ejk->eij", G, G)
    elif kind == "weighted-mass":
        w = np.asarray(weight, dtype=float)[mesh.elements]
        local = meas[:, None, None] * np.einsum("ijk,ek->eij", _moment_tensor(mesh.dim, 3), w)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return _scatter(mesh, local)


def assemble_mass(mesh: Mesh) -> sp.csr_array:
    return _restrict(mesh, assemble_full(mesh, "mass"))


def assemble_stiffness(mesh: Mesh) -> sp.csr_array:
    return _restrict(mesh, assemble_full(mesh, "stiffness"))


def assemble_weighted_mass(mesh: Mesh, w: np.ndarray) -> sp.csr_array:
    """Operator ``(I_h(w) phi_j, phi_i)``; ``w`` holds values at *all* mesh nodes."""
    w = np.asarray(w, dtype=float)
    if w.shape != (mesh.n_nodes,):
        raise ValueError(f"weight must have one value per node ({mesh.n_nodes}), got {w.shape}")
    return _restrict(mesh, assemble_full(mesh, "weighted-mass", w))


def interpolate(g, mesh: Mesh) -> np.ndarray:
    """Nodal values of ``g`` at all mesh nodes."""
    vals = g(*mesh.nodes.T)
    return np.broadcast_to(np.asarray(vals, dtype=float), (mesh.n_nodes,)).copy()


_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(3)
_GAUSS_T = 0.5 * (_GAUSS_T + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W


def _gradient_moments(g, mesh: Mesh) -> np.ndarray:
    """``int_e grad g`` per element, via the divergence theorem on element edges."""
    verts = mesh.nodes[mesh.elements]
    if mesh.dim == 1:
        x = verts[:, :, 0]
        gx = np.asarray(g(x), dtype=float) * np.ones_like(x)
        return (gx[:, 1] - gx[:, 0])[:, None]
    total = np.zeros((len(verts), 2))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        pa, pb = verts[:, a], verts[:, b]
        d = pb - pa
        # outward normal times edge length for counter-clockwise vertices
        nl = np.column_stack([d[:, 1], -d[:, 0]])
        pts = pa[:, None, :] + _GAUSS_T[None, :, None] * d[:, None, :]
        vals = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])
        total += nl * (vals @ _GAUSS_W)[:, None]
    return total


def elliptic_projection(g, mesh: Mesh, stiffness=None) -> np.ndarray:
    """Interior coefficients of ``Pg``: ``(grad(g - Pg), grad chi) = 0`` for all ``chi``.

    The load ``(grad g, grad phi_i)`` uses that hat-function gradients are
    elementwise constant, so only ``int_e grad g`` is needed; it is turned
    into edge integrals of ``g`` evaluated with 3-point Gauss-Legendre.
    This is exact in 1D, where ``Pg`` coincides with the nodal interpolant.
    """
    K = assemble_stiffness(mesh) if stiffness is None else stiffness
    G = _barycentric_gradients(mesh)
    moments = _gradient_moments(g, mesh)
    local = np.einsum("eik,ek->ei", G, moments)
    b = np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.n_nodes)
    rhs = b[mesh.interior_ids]
    try:
        x = spla.spsolve(sp.csc_array(K), rhs)
    except RuntimeError as exc:
        raise FactorizationError(f"elliptic projection solve failed: {exc}") from exc
    x = np.atleast_1d(x)
    if not np.all(np.isfinite(x)):
        raise FactorizationError("elliptic projection produced non-finite values")
    return x


def l2_inner(mass, a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.shape[0] != mass.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape}, {b.shape}, operator {mass.shape}")
    return float(a @ (mass @ b))


def l2_norm(mass, a: np.ndarray) -> float:
    return float(np.sqrt(max(l2_inner(mass, a, a), 0.0)))
