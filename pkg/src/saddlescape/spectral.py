"""Smallest eigenvalues of the discrete Hessian pencil ``(K - W(f'(U)), M)``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_mass, assemble_stiffness, assemble_weighted_mass
from .errors import SpectralFailureError
from .mesh import Mesh
from .model import ProblemModel, eval_fprime

__all__ = ["SpectralReport", "hessian_pencil", "smallest_eigs", "INDEX_TOL", "DENSE_LIMIT"]

INDEX_TOL = 1e-3
DENSE_LIMIT = 2000
RESIDUAL_TOL = 1e-8


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    tol: float = INDEX_TOL
    residuals: np.ndarray = field(default=None, repr=False)
    vectors: np.ndarray = field(default=None, repr=False)
    method: str = ""

    @property
    def index(self) -> int:
        return int(np.sum(self.eigenvalues < -self.tol))

    def to_dict(self) -> dict:
        return {"eigenvalues": [float(x) for x in self.eigenvalues], "index": self.index, "tol": self.tol}


def hessian_pencil(U: np.ndarray, mesh: Mesh, model: ProblemModel, mass=None, stiffness=None):
    """``(A, M)`` with ``A = K - W(f'(u_h))`` discretizing ``-Laplace - f'(u)``."""
    U = np.asarray(U, dtype=float)
    if not np.all(np.isfinite(U)):
        raise ValueError("state contains non-finite values")
    M = assemble_mass(mesh) if mass is None else mass
    K = assemble_stiffness(mesh) if stiffness is None else stiffness
    w = mesh.to_full(eval_fprime(model, U), float(eval_fprime(model, 0.0)))
    return (K - assemble_weighted_mass(mesh, w)).tocsr(), M


def _residuals(A, M, vals, vecs):
    R = A @ vecs - (M @ vecs) * vals
    mnorm = np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
    return np.linalg.norm(R, axis=0) / mnorm


def smallest_eigs(A, M, k: int = 2, method: str = "auto", tol: float = INDEX_TOL, maxiter: int | None = None) -> SpectralReport:
    """``k`` smallest eigenpairs of ``A x = lambda M x``.

    ``method`` is ``"dense"``, ``"shift-invert"`` or ``"auto"`` (dense below
    ``DENSE_LIMIT`` unknowns). The shift sits below a Gershgorin-type lower
    bound of the spectrum, so the eigenvalues nearest to it are the smallest.
    """
    n = A.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    if method == "auto":
        method = "dense" if n < DENSE_LIMIT or k >= n - 1 else "shift-invert"
    if method == "dense":
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
        Md = M.toarray() if sp.issparse(M) else np.asarray(M)
        vals, vecs = sla.eigh(Ad, Md, subset_by_index=[0, k - 1])
    elif method == "shift-invert":
        A = sp.csc_array(A)
        M = sp.csc_array(M)
        bound = _lower_bound(A, M)
        sigma = bound - 1.0 - 1e-3 * abs(bound)
        try:
            vals, vecs = spla.eigsh(A, k=k, M=M, sigma=sigma, which="LM", tol=1e-13, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            res = _residuals(A, M, exc.eigenvalues, exc.eigenvectors) if len(exc.eigenvalues) else None
            raise SpectralFailureError("shift-invert Lanczos did not converge", res) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    res = _residuals(A, M, vals, vecs)
    if np.any(res > RESIDUAL_TOL):
        raise SpectralFailureError(f"eigenpair residuals too large: {res}", res)
    return SpectralReport(np.asarray(vals), tol, res, vecs, method)


def _lower_bound(A, M) -> float:
    """Rigorous lower bound for the pencil spectrum when ``M`` is a P1 mass matrix.

    P1 mass matrices satisfy ``M >= diag(M) / 2``; with ``D = diag(M)`` the
    Gershgorin bound ``g`` of ``D^-1/2 A D^-1/2`` then gives ``lambda >= 2 g``.
    """
    d = 1.0 / np.sqrt(M.diagonal())
    S = sp.diags_array(d)
    At = sp.csr_array(S @ A @ S)
    diag = At.diagonal()
    off = np.asarray(abs(At).sum(axis=1)).ravel() - np.abs(diag)
    g = float(np.min(diag - off))
    return min(0.0, 2.0 * g)
