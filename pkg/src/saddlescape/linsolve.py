"""Reusable SPD factorizations and Sherman-Morrison rank-one solves."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FactorizationError, SingularUpdateError

__all__ = ["Factorization", "factorize", "solve_rank_one", "FACTORIZE_CALLS"]

# per-process call counter, read by the tests
FACTORIZE_CALLS = {"count": 0}


class Factorization:
    """Sparse LU of an SPD matrix with symmetric pivoting only.

    With ``SymmetricMode`` and no row pivoting SuperLU computes ``L U`` of
    ``P A P^T``; the input is positive definite iff every pivot of ``U`` is
    positive, which is checked at construction.
    """

    def __init__(self, A):
        A = sp.csc_array(A)
        if A.shape[0] != A.shape[1]:
            raise FactorizationError(f"operator must be square, got {A.shape}")
        self.dimension = A.shape[0]
        self._A = A
        try:
            self._lu = spla.splu(
                A,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise FactorizationError(f"factorization broke down: {exc}") from exc
        pivots = self._lu.U.diagonal()
        if not np.array_equal(self._lu.perm_r, self._lu.perm_c) or not np.all(pivots > 0):
            raise FactorizationError("operator is not symmetric positive definite")
        self.solves = 0
        FACTORIZE_CALLS["count"] += 1

    @property
    def matrix(self):
        return self._A

    def solve(self, r: np.ndarray) -> np.ndarray:
        """Solve ``A x = r``; ``r`` may hold several right-hand sides as columns."""
        self.solves += 1
        return self._lu.solve(np.asarray(r, dtype=float))


def factorize(A) -> Factorization:
    return Factorization(A)


def solve_rank_one(fact: Factorization, a, b, c: float, rhs) -> np.ndarray:
    """Solve ``(A0 + c a b^T) x = rhs`` against a factorization of ``A0``."""
    rhs = np.asarray(rhs, dtype=float)
    if c == 0.0 or not np.any(a):
        return fact.solve(rhs)
    yz = fact.solve(np.column_stack([rhs, a]))
    y, z = yz[:, 0], yz[:, 1]
    denom = 1.0 + c * float(b @ z)
    if abs(denom) < 1e-12:
        raise SingularUpdateError(f"rank-one update is singular (1 + c b^T A0^-1 a = {denom:.3e})")
    return y - (c * float(b @ y) / denom) * z
