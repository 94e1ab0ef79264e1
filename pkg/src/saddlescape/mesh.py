"""Uniform P1 meshes of (0, pi) and (0, pi)^2.

Nodes are ordered lexicographically by their grid indices ``(i, j)`` with the
last axis varying fastest. Interior degrees of freedom are a contiguous
reindexing of the non-boundary nodes in the same order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidMeshError

__all__ = ["Mesh", "build_interval_mesh", "build_square_mesh", "build_mesh"]

LENGTH = np.pi


@dataclass(frozen=True, eq=False)
class Mesh:
    dim: int
    M: int
    nodes: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.nodes, self.elements, self.boundary_mask):
            arr.setflags(write=False)

    @property
    def h(self) -> float:
        return LENGTH / self.M

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def interior_ids(self) -> np.ndarray:
        ids = np.flatnonzero(~self.boundary_mask)
        ids.setflags(write=False)
        return ids

    @property
    def n_interior(self) -> int:
        return self.interior_ids.size

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[self.interior_ids]

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.M + 1,) * self.dim

    def element_measures(self) -> np.ndarray:
        verts = self.nodes[self.elements]
        if self.dim == 1:
            return np.abs(verts[:, 1, 0] - verts[:, 0, 0])
        e1 = verts[:, 1] - verts[:, 0]
        e2 = verts[:, 2] - verts[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def element_diameters(self) -> np.ndarray:
        verts = self.nodes[self.elements]
        k = verts.shape[1]
        diam = np.zeros(len(verts))
        for a in range(k):
            for b in range(a + 1, k):
                diam = np.maximum(diam, np.linalg.norm(verts[:, a] - verts[:, b], axis=1))
        return diam

    def to_full(self, interior_values: np.ndarray, boundary_value: float = 0.0) -> np.ndarray:
        """Scatter interior values into a full nodal vector."""
        full = np.full(self.n_nodes, boundary_value, dtype=float)
        full[self.interior_ids] = interior_values
        return full

    def reflection(self, axis: int = 0) -> np.ndarray:
        """Permutation of interior indices induced by ``x_axis -> pi - x_axis``."""
        idx = np.arange(self.n_nodes).reshape(self.grid_shape)
        flipped = np.flip(idx, axis=axis).ravel()
        inverse = np.empty(self.n_nodes, dtype=int)
        inverse[self.interior_ids] = np.arange(self.n_interior)
        return inverse[flipped[self.interior_ids]]

    def evaluate(self, full_values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate the P1 function with nodal values ``full_values`` at ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim and self.dim == 1:
            points = points.reshape(-1, 1)
        s = np.clip(points / self.h, 0.0, self.M)
        cell = np.minimum(np.floor(s).astype(int), self.M - 1)
        loc = s - cell
        if self.dim == 1:
            i = cell[:, 0]
            t = loc[:, 0]
            return (1 - t) * full_values[i] + t * full_values[i + 1]
        grid = full_values.reshape(self.grid_shape)
        i, j = cell[:, 0], cell[:, 1]
        a, b = loc[:, 0], loc[:, 1]
        v00 = grid[i, j]
        v10 = grid[i + 1, j]
        v01 = grid[i, j + 1]
        v11 = grid[i + 1, j + 1]
        lower = a >= b
        return np.where(
            lower,
            (1 - a) * v00 + (a - b) * v10 + b * v11,
            (1 - b) * v00 + (b - a) * v01 + a * v11,
        )


def _check_subdivisions(M):
    if int(M) != M or M < 2:
        raise InvalidMeshError(f"need an integer M >= 2 for interior unknowns, got {M!r}")
    return int(M)


def build_interval_mesh(M: int) -> Mesh:
    M = _check_subdivisions(M)
    x = np.linspace(0.0, LENGTH, M + 1)
    x[-1] = LENGTH
    nodes = x.reshape(-1, 1)
    elements = np.column_stack([np.arange(M), np.arange(1, M + 1)])
    boundary = np.zeros(M + 1, dtype=bool)
    boundary[[0, M]] = True
    return Mesh(1, M, nodes, elements, boundary)


def build_square_mesh(M: int) -> Mesh:
    """Structured triangulation; each grid square is cut along its (0,0)-(1,1) diagonal."""
    M = _check_subdivisions(M)
    x = np.linspace(0.0, LENGTH, M + 1)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    nodes = np.column_stack([X1.ravel(), X2.ravel()])
    idx = np.arange((M + 1) ** 2).reshape(M + 1, M + 1)
    n00 = idx[:-1, :-1].ravel()
    n10 = idx[1:, :-1].ravel()
    n01 = idx[:-1, 1:].ravel()
    n11 = idx[1:, 1:].ravel()
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.empty((2 * M * M, 3), dtype=int)
    elements[0::2] = lower
    elements[1::2] = upper
    gi, gj = np.meshgrid(np.arange(M + 1), np.arange(M + 1), indexing="ij")
    boundary = ((gi == 0) | (gi == M) | (gj == 0) | (gj == M)).ravel()
    return Mesh(2, M, nodes, elements, boundary)


def build_mesh(dim: int, M: int) -> Mesh:
    if dim == 1:
        return build_interval_mesh(M)
    if dim == 2:
        return build_square_mesh(M)
    raise InvalidMeshError(f"dimension must be 1 or 2, got {dim!r}")
