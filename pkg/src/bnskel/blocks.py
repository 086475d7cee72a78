"""Row-partitioned block matrices, their norms, and small dense linear algebra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .encoding import BlockIndexMap
from .errors import NotPositiveDefinite, NotSquare, ShapeMismatch, UnsupportedPair

INF = float("inf")
SUPPORTED_PAIRS = {(INF, 2), (INF, 1), (1, 2)}


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    values: np.ndarray
    partition: BlockIndexMap

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if values.shape[0] != self.partition.total:
            raise ShapeMismatch(
                f"{values.shape[0]} rows but partition covers {self.partition.total}"
            )
        object.__setattr__(self, "values", values)

    def blocks(self):
        for off, w in zip(self.partition.offsets, self.partition.widths):
            yield self.values[off : off + w]

    def block(self, node: int) -> np.ndarray:
        return self.values[self.partition.block(node)]

    def block_norms(self, b: float = 2) -> np.ndarray:
        """Vector norm of each flattened block."""
        return np.array([np.linalg.norm(blk.ravel(), b) for blk in self.blocks()])


def block_norm(A: BlockMatrix, a: float, b: float) -> float:
    """``(sum_i ||vec(A_i)||_b^a)^(1/a)``; ``a = inf`` reads as the max over blocks."""
    if (a, b) not in SUPPORTED_PAIRS:
        raise UnsupportedPair(f"block norm ({a}, {b}) is not supported")
    norms = A.block_norms(b)
    if norms.size == 0:
        return 0.0
    if a == INF:
        return float(norms.max())
    return float(norms.sum())


def op_norm(A: np.ndarray, kind: str) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.size == 0:
        return 0.0
    if kind == "inf_inf":
        return float(np.abs(A).sum(axis=1).max())
    if kind == "inf_2":
        return float(np.linalg.norm(A, axis=1).max())
    if kind == "spectral":
        return float(np.linalg.norm(A, 2))
    if kind == "frobenius":
        return float(np.linalg.norm(A, "fro"))
    raise ValueError(f"unknown operator norm {kind!r}")


def _square_symmetric(A: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


def min_eigenvalue(A: np.ndarray) -> float:
    A = _square_symmetric(A)
    if A.shape[0] == 0:
        return INF
    return float(np.linalg.eigvalsh(A)[0])


def max_eigenvalue(A: np.ndarray) -> float:
    A = _square_symmetric(A)
    if A.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(A)[-1])


def solve_spd(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` by Cholesky; failure to factor means ``A`` is not PD."""
    A = _square_symmetric(A)
    B = np.asarray(B, dtype=np.float64)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    return scipy.linalg.cho_solve(factor, B)


def group_soft_threshold(g: np.ndarray, tau: float) -> np.ndarray:
    """Proximal map of ``tau * ||vec(.)||_2``; blocks inside the ball become exact zeros."""
    g = np.asarray(g, dtype=np.float64)
    norm = np.linalg.norm(g)
    if norm <= tau:
        return np.zeros_like(g)
    return (1.0 - tau / norm) * g
