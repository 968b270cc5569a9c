"""Black-box low-rank approximation from matrix entries.

:func:`maxvol` finds a dominant ``r x r`` submatrix of a tall matrix, and
:func:`aca_cross` builds a low-rank approximation of a matrix that is only
available through an entry evaluator (adaptive cross approximation with
partial pivoting).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import lowrank
from .lowrank import LowRankMatrix, TruncationPolicy

__all__ = ["CrossConfig", "CrossInfo", "ElementEvaluator", "aca_cross", "maxvol"]


@dataclass(frozen=True)
class ElementEvaluator:
    """Entry oracle for an implicit ``nrows x ncols`` matrix.

    ``func(I, J)`` takes broadcastable integer index arrays and returns the
    matching entries. It must be pure and re-entrant.
    """

    nrows: int
    ncols: int
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, i, j):
        return self.func(np.asarray(i), np.asarray(j))

    def row(self, i: int) -> np.ndarray:
        return np.asarray(self.func(np.asarray([i]), np.arange(self.ncols)), float).ravel()

    def col(self, j: int) -> np.ndarray:
        return np.asarray(self.func(np.arange(self.nrows), np.asarray([j])), float).ravel()

    def to_dense(self) -> np.ndarray:
        I, J = np.meshgrid(np.arange(self.nrows), np.arange(self.ncols), indexing="ij")
        return np.asarray(self.func(I, J), float)


@dataclass(frozen=True)
class CrossConfig:
    eps_rel: float = lowrank.DEFAULT_EPS
    rank_max: int = 512
    validation_samples: int = 64
    maxvol_delta: float = 1e-2
    # allowed ratio of the sampled max residual to the RMS error level
    validation_scale: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.eps_rel <= 0:
            raise ValueError("eps_rel must be positive")
        if self.rank_max < 1:
            raise ValueError("rank_max must be positive")
        if self.validation_samples < 25:
            raise ValueError("validation_samples must be at least 25")
        if self.maxvol_delta < 0:
            raise ValueError("maxvol_delta must be nonnegative")


@dataclass
class CrossInfo:
    """Diagnostics of one :func:`aca_cross` run."""

    rows: list[int] = field(default_factory=list)
    cols: list[int] = field(default_factory=list)
    evaluations: int = 0
    steps: int = 0
    rank_before_round: int = 0
    converged: bool = True
    residual_estimate: float = 0.0


def maxvol(A, delta: float = 1e-2, max_iter: int | None = None) -> np.ndarray:
    """Row indices of a dominant ``r x r`` submatrix of the ``n x r`` matrix A.

    On return every entry of ``A @ inv(A[I])`` is bounded by ``1 + delta`` in
    absolute value. The start set comes from LU with partial pivoting; then
    single-row swaps are made while some coefficient exceeds the bound, each
    swap growing ``|det A[I]|`` by that coefficient.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be 2-D")
    n, r = A.shape
    if r > n:
        raise ValueError(f"need at least as many rows as columns, got {A.shape}")
    if r == 0:
        return np.zeros(0, dtype=int)

    P, L, U = scipy.linalg.lu(A, p_indices=True)
    d = np.abs(np.diag(U))
    scale = np.max(np.abs(A))
    bad = np.nonzero(d <= n * np.finfo(float).eps * max(scale, np.finfo(float).tiny))[0]
    if bad.size:
        raise np.linalg.LinAlgError(
            f"matrix is rank deficient: column {int(bad[0])} depends on the previous ones"
        )
    # A = L[P] @ U: row k of A is row P[k] of the factored matrix
    I = np.argsort(P)[:r]
    B = np.linalg.solve(A[I].T, A.T).T

    if max_iter is None:
        max_iter = 100 * r
    for _ in range(max_iter):
        i, j = np.unravel_index(np.argmax(np.abs(B)), B.shape)
        if abs(B[i, j]) <= 1.0 + delta:
            break
        # swap row I[j] out for row i, rank-1 update of the coefficients
        bj = B[:, j].copy()
        bi = B[i, :].copy()
        bi[j] -= 1.0
        B -= np.outer(bj, bi / B[i, j])
        I[j] = i
    return I


def aca_cross(f: ElementEvaluator, cfg: CrossConfig | None = None, return_info: bool = False):
    """Adaptive cross approximation of the matrix behind ``f``.

    Each step evaluates one residual row and one residual column and appends
    their cross as a new dyad. The loop stops when the latest dyad is small
    relative to the running norm estimate and a batch of random residual
    entries confirms it; a failed check restarts the pivot search from the
    worst sampled entry. The factors are finally recompressed with
    :func:`lowrank.round`.
    """
    cfg = cfg or CrossConfig()
    m, n = f.nrows, f.ncols
    rng = np.random.default_rng(cfg.seed)
    info = CrossInfo()
    eps = cfg.eps_rel
    kmax = min(cfg.rank_max, m, n)

    U = np.zeros((m, kmax))
    V = np.zeros((n, kmax))
    k = 0
    norm2 = 0.0
    used_rows = np.zeros(m, dtype=bool)
    used_cols = np.zeros(n, dtype=bool)

    def residual_row(i):
        return f.row(i) - U[i, :k] @ V[:, :k].T

    def residual_col(j):
        return f.col(j) - U[:, :k] @ V[j, :k]

    def validate():
        # fresh uniform samples of the residual
        I = rng.integers(0, m, cfg.validation_samples)
        J = rng.integers(0, n, cfg.validation_samples)
        vals = np.asarray(f(I, J), float) - np.einsum("ij,ij->i", U[I, :k], V[J, :k])
        info.evaluations += cfg.validation_samples
        a = int(np.argmax(np.abs(vals)))
        return abs(vals[a]), int(I[a])

    i_next = 0
    while True:
        if k == kmax:
            break
        if used_rows[i_next]:
            free = np.nonzero(~used_rows)[0]
            if free.size == 0:
                break
            i_next = int(free[0])
        row = residual_row(i_next)
        info.evaluations += n
        row_abs = np.where(used_cols, -1.0, np.abs(row))
        j = int(np.argmax(row_abs))
        piv = row[j]
        if row_abs[j] <= 0.0:
            # zero residual row: fall back on random probing
            used_rows[i_next] = True
            worst, i_worst = validate()
            if worst == 0.0 or used_rows[i_worst]:
                if worst == 0.0:
                    break
                free = np.nonzero(~used_rows)[0]
                if free.size == 0:
                    break
                i_worst = int(free[0])
            i_next = i_worst
            continue

        col = residual_col(j)
        info.evaluations += m
        i = i_next
        U[:, k] = col
        V[:, k] = row / piv
        used_rows[i] = True
        used_cols[j] = True
        info.rows.append(i)
        info.cols.append(j)

        # running ||approximant||_F^2 update
        uu = U[:, k] @ U[:, k]
        vv = V[:, k] @ V[:, k]
        cross_terms = 2.0 * np.sum((U[:, :k].T @ U[:, k]) * (V[:, :k].T @ V[:, k]))
        norm2 = max(norm2 + uu * vv + cross_terms, 0.0)
        k += 1
        dyad = np.sqrt(uu * vv)

        col_abs = np.where(used_rows, -1.0, np.abs(U[:, k - 1]))
        i_next = int(np.argmax(col_abs))

        if dyad <= eps * np.sqrt(norm2):
            worst, i_worst = validate()
            level = cfg.validation_scale * eps * np.sqrt(norm2) / np.sqrt(m * n)
            info.residual_estimate = dyad / np.sqrt(norm2) if norm2 > 0 else 0.0
            if worst <= level:
                break
            if not used_rows[i_worst]:
                i_next = i_worst

    info.steps = k
    info.rank_before_round = k
    if k == kmax and k < min(m, n):
        # cap reached: decide convergence from a last validation
        worst, _ = validate()
        level = cfg.validation_scale * eps * np.sqrt(norm2) / np.sqrt(m * n)
        info.converged = bool(worst <= level)
        info.residual_estimate = (
            float(worst * np.sqrt(m * n) / np.sqrt(norm2)) if norm2 > 0 else float(worst)
        )

    A = LowRankMatrix(U[:, :k], V[:, :k])
    A = lowrank.round(A, TruncationPolicy(eps_rel=eps))
    A = lowrank.with_flags(A, info.converged, info.residual_estimate)
    if return_info:
        return A, info
    return A
