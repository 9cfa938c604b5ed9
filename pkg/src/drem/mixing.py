"""Scalar mixing: adjugate/determinant reduction of an extended regression.

Multiplying Y = Phi theta from the left by adj(Phi) (square case) or by
adj(Phi^T Phi) Phi^T (tall case) produces q decoupled scalar regressions
sharing the scalar regressor delta = det(Phi) resp. det(Phi^T Phi).

The determinant code targets small q.  Cofactor expansion is used through
q = 5 so that integer-valued inputs are handled exactly (products and sums
of small integers are exact in float64); an LU determinant takes over for
6 <= q <= 8, and larger systems are rejected.  The Gram determinant of a
tall matrix is evaluated as a sum of squared q-minors, which keeps it
nonnegative in floating point even deep in the decayed-excitation regime
where the cofactor form loses its sign to cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

__all__ = [
    "MixedRegression",
    "RankCheck",
    "determinant",
    "adjugate",
    "gram_determinant",
    "mix_square",
    "mix_tall",
    "rank_check",
]

_COFACTOR_MAX = 5      # exact on small-integer inputs up to here
_DIM_MAX = 8
# Gram-determinant values in (-GRAM_CLAMP, 0) are rounding noise of an
# exactly nonnegative quantity and are clamped to zero
GRAM_CLAMP = 1e-12
RANK_RTOL = 1e-10


def _det_cofactor(M: np.ndarray) -> float:
    n = M.shape[0]
    if n == 1:
        return M[0, 0]
    if n == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if n == 3:
        return (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
                - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
                + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))
    total = 0.0
    cols = np.arange(n)
    for j in range(n):
        minor = M[1:][:, cols != j]
        term = M[0, j] * _det_cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def determinant(M) -> float:
    """Determinant of a small square matrix (q <= 8)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n > _DIM_MAX:
        raise ValueError(
            f"determinant supports q <= {_DIM_MAX}; for larger systems use a "
            "least-squares estimator instead of mixing"
        )
    if n <= _COFACTOR_MAX:
        return float(_det_cofactor(M))
    return float(np.linalg.det(M))


def adjugate(M) -> np.ndarray:
    """Adjugate adj(M), satisfying adj(M) @ M = M @ adj(M) = det(M) I.

    Defined for singular matrices as well; the 1x1 adjugate is [[1]] by the
    empty-minor convention.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n > _DIM_MAX:
        raise ValueError(f"adjugate supports q <= {_DIM_MAX}")
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]])
    cof = np.empty((n, n))
    rows = np.arange(n)
    for i in range(n):
        ri = rows != i
        for j in range(n):
            minor = M[ri][:, rows != j]
            sign = 1.0 if (i + j) % 2 == 0 else -1.0
            cof[i, j] = sign * (_det_cofactor(minor) if n - 1 <= _COFACTOR_MAX
                                else np.linalg.det(minor))
    return cof.T


@lru_cache(maxsize=None)
def _row_subsets(rows: int, q: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(rows), q))


def _cb_sum(Phi: np.ndarray, subsets) -> float:
    """Sum of squared q-minors over the given row subsets (Cauchy-Binet)."""
    q = Phi.shape[1]
    total = 0.0
    if q == 2:
        for i, j in subsets:
            m = Phi[i, 0] * Phi[j, 1] - Phi[i, 1] * Phi[j, 0]
            total += m * m
    else:
        for sub in subsets:
            m = _det_cofactor(Phi[sub, :]) if q <= _COFACTOR_MAX else np.linalg.det(Phi[sub, :])
            total += m * m
    return float(total)


def gram_determinant(Phi) -> float:
    """det(Phi^T Phi) for a tall matrix, nonnegative by construction.

    Uses the sum of squared q-minors when the number of row subsets is small
    (always the case for rows = q + 1); falls back to the clamped determinant
    of the Gram matrix otherwise.
    """
    Phi = np.asarray(Phi, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] < Phi.shape[1]:
        raise ValueError(f"expected a tall (rows >= q) matrix, got shape {Phi.shape}")
    rows, q = Phi.shape
    if q > _DIM_MAX:
        raise ValueError(f"gram_determinant supports q <= {_DIM_MAX}")
    if comb(rows, q) <= 36:
        return _cb_sum(Phi, _row_subsets(rows, q))
    d = determinant(Phi.T @ Phi)
    if -GRAM_CLAMP < d < 0.0:
        return 0.0
    return d


@dataclass(frozen=True)
class MixedRegression:
    """One sample of the mixed scalar regressions: y_mixed = delta * theta."""

    delta: float
    y_mixed: np.ndarray
    t: float = 0.0


def _adj_times(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    """adj(G) @ v without validation; inlined for q <= 2 (hot path)."""
    n = G.shape[0]
    if n == 1:
        return v.copy()
    if n == 2:
        return np.array([G[1, 1] * v[0] - G[0, 1] * v[1],
                         G[0, 0] * v[1] - G[1, 0] * v[0]])
    return adjugate(G) @ v


def _raw_mix_tall(Phi: np.ndarray, Y: np.ndarray, subsets) -> tuple[float, np.ndarray]:
    """Unvalidated tall mix for simulation inner loops: (delta, y_mixed)."""
    G = Phi.T @ Phi
    return _cb_sum(Phi, subsets), _adj_times(G, Phi.T @ Y)


def _raw_mix_square(Phi: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """Unvalidated square mix for simulation inner loops: (delta, y_mixed)."""
    n = Phi.shape[0]
    d = _det_cofactor(Phi) if n <= _COFACTOR_MAX else float(np.linalg.det(Phi))
    return float(d), _adj_times(Phi, Y)


def mix_square(Phi, Y, t: float = 0.0) -> MixedRegression:
    """Mix a square extended regression: delta = det(Phi), y_mixed = adj(Phi) Y."""
    Phi = np.asarray(Phi, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != Phi.shape[1]:
        raise ValueError(f"mix_square expects a square matrix, got shape {Phi.shape}")
    if Y.shape != (Phi.shape[0],):
        raise ValueError(f"Y has shape {Y.shape}, expected ({Phi.shape[0]},)")
    return MixedRegression(delta=determinant(Phi), y_mixed=_adj_times(Phi, Y), t=t)


def mix_tall(Phi, Y, t: float = 0.0) -> MixedRegression:
    """Mix a tall extended regression through its normal form.

    delta = det(Phi^T Phi) >= 0 and y_mixed = adj(Phi^T Phi) Phi^T Y; when
    Y = Phi theta this gives y_mixed = delta * theta.
    """
    Phi = np.asarray(Phi, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] < Phi.shape[1]:
        raise ValueError(f"mix_tall expects rows >= q, got shape {Phi.shape}")
    if Y.shape != (Phi.shape[0],):
        raise ValueError(f"Y has shape {Y.shape}, expected ({Phi.shape[0]},)")
    G = Phi.T @ Phi
    return MixedRegression(delta=gram_determinant(Phi), y_mixed=_adj_times(G, Phi.T @ Y), t=t)


@dataclass(frozen=True)
class RankCheck:
    full_rank: bool
    smallest_singular_value: float


def rank_check(Phi, tol: float | None = None) -> RankCheck:
    """Full-column-rank test via the smallest singular value.

    The default tolerance is scale-relative: RANK_RTOL times the largest
    singular value.
    """
    Phi = np.asarray(Phi, dtype=float)
    if Phi.ndim != 2:
        raise ValueError("rank_check expects a matrix")
    svals = np.linalg.svd(Phi, compute_uv=False)
    smin = float(svals.min()) if Phi.shape[0] >= Phi.shape[1] else 0.0
    if tol is None:
        tol = RANK_RTOL * float(svals.max())
    elif tol <= 0.0:
        raise ValueError("tol must be positive")
    return RankCheck(full_rank=bool(smin > tol), smallest_singular_value=smin)
