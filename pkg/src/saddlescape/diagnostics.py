"""Monitors computed from a finished run; none of them mutate the run."""
from __future__ import annotations

import csv

import numpy as np

from .mesh import Mesh
from .model import ProblemModel, eval_f

__all__ = [
    "fd_laplacian",
    "residual_fd",
    "norm_drift",
    "overlap_identity",
    "increment_identity",
    "gradient_ceiling",
    "write_residual_csv",
    "write_field_csv",
]


def fd_laplacian(U: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Second-order centred difference Laplacian on the interior grid, zero boundary."""
    n = mesh.M - 1
    g = np.zeros((mesh.M + 1,) * mesh.dim)
    inner = (slice(1, -1),) * mesh.dim
    g[inner] = np.asarray(U).reshape((n,) * mesh.dim)
    lap = np.zeros((n,) * mesh.dim)
    for ax in range(mesh.dim):
        fwd = [slice(1, -1)] * mesh.dim
        bwd = [slice(1, -1)] * mesh.dim
        fwd[ax] = slice(2, None)
        bwd[ax] = slice(None, -2)
        lap += g[tuple(fwd)] - 2.0 * g[inner] + g[tuple(bwd)]
    return lap.ravel() / mesh.h**2


def residual_fd(U: np.ndarray, mesh: Mesh, model: ProblemModel) -> tuple[np.ndarray, float]:
    """``F_i = (Delta_h U)_i + f(U_i)`` at interior grid points and its sup norm."""
    F = fd_laplacian(U, mesh) + eval_f(model, U)
    return F, float(np.max(np.abs(F), initial=0.0))


def norm_drift(result) -> float:
    """``max_n | ||V*^n|| - 1 |``; 0 for a run without steps."""
    v = result.diagnostics["vstar_norm"]
    return float(np.max(np.abs(v - 1.0), initial=0.0))


def overlap_identity(result) -> float:
    """``max_n |(V*^n, V^{n-1}) - 1|``."""
    v = result.diagnostics["overlap"]
    return float(np.max(np.abs(v - 1.0), initial=0.0))


def increment_identity(result) -> float:
    """``max_n | ||V*^n - V^{n-1}||^2 - (||V*^n||^2 - 1) |``."""
    v = result.diagnostics["increment_identity"]
    return float(np.max(np.abs(v), initial=0.0))


def gradient_ceiling(result) -> float:
    """Largest of ``U^T K U`` and ``V^T K V`` over the run."""
    d = result.diagnostics
    return float(max(np.max(d["grad_u_sq"], initial=0.0), np.max(d["grad_v_sq"], initial=0.0)))


def _coord_header(dim):
    return ["x"] if dim == 1 else ["x1", "x2"]


def write_field_csv(path, mesh: Mesh, columns: dict[str, np.ndarray]) -> None:
    """Interior node coordinates followed by the given interior-valued columns."""
    names = list(columns)
    data = [mesh.interior_nodes[:, k] for k in range(mesh.dim)] + [np.asarray(columns[c]) for c in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_coord_header(mesh.dim) + names)
        for row in zip(*data):
            w.writerow([f"{x:.16e}" for x in row])


def write_residual_csv(path, U: np.ndarray, mesh: Mesh, model: ProblemModel) -> float:
    F, sup = residual_fd(U, mesh, model)
    write_field_csv(path, mesh, {"U": U, "F": F})
    return sup
