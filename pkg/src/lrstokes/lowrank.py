"""Low-rank matrix format ``M = U @ V.T`` and its arithmetic.

Every operation works on the factors only. Nothing here forms the dense
``nrows x ncols`` matrix except :meth:`LowRankMatrix.to_dense`, which exists
for testing and small problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

__all__ = [
    "DEFAULT_EPS",
    "LowRankMatrix",
    "TruncationPolicy",
    "add",
    "apply_factors",
    "dot",
    "frob_norm",
    "from_dense",
    "hadamard",
    "round",
    "zeros",
]

DEFAULT_EPS = 5e-9


@dataclass(frozen=True)
class TruncationPolicy:
    """Relative Frobenius-norm truncation tolerance with an optional rank cap.

    ``rank_max=None`` means no cap. ``eps_rel=0`` is only allowed with a
    finite cap (it then selects the best rank-``rank_max`` approximation).
    """

    eps_rel: float = DEFAULT_EPS
    rank_max: int | None = None

    def __post_init__(self):
        if self.eps_rel < 0:
            raise ValueError(f"eps_rel must be >= 0, got {self.eps_rel}")
        if self.rank_max is not None and self.rank_max < 1:
            raise ValueError(f"rank_max must be positive, got {self.rank_max}")
        if self.eps_rel == 0 and self.rank_max is None:
            raise ValueError("eps_rel=0 requires a finite rank_max")


def _as_policy(policy) -> TruncationPolicy:
    if policy is None:
        return TruncationPolicy()
    if isinstance(policy, TruncationPolicy):
        return policy
    return TruncationPolicy(eps_rel=float(policy))


@dataclass(frozen=True, eq=False)
class LowRankMatrix:
    """Matrix stored as ``U @ V.T`` with ``U`` of shape (nrows, r), ``V`` (ncols, r).

    ``tol_met`` is False when a truncation hit its rank cap before reaching
    the requested tolerance; ``err_estimate`` then holds the (relative)
    error estimate of that truncation.
    """

    U: np.ndarray
    V: np.ndarray
    tol_met: bool = field(default=True, compare=False)
    err_estimate: float = field(default=0.0, compare=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if U.ndim != 2 or V.ndim != 2:
            raise ValueError("factors must be 2-D arrays")
        if U.shape[1] != V.shape[1]:
            raise ValueError(
                f"factor ranks differ: U has {U.shape[1]} columns, V has {V.shape[1]}"
            )
        if U.shape[0] < 1 or V.shape[0] < 1:
            raise ValueError("matrix dimensions must be positive")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @property
    def nrows(self) -> int:
        return self.U.shape[0]

    @property
    def ncols(self) -> int:
        return self.V.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def T(self) -> LowRankMatrix:
        return LowRankMatrix(self.V, self.U)

    def to_dense(self) -> np.ndarray:
        return self.U @ self.V.T

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, -other)

    def __neg__(self):
        return LowRankMatrix(-self.U, self.V)

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return LowRankMatrix(alpha * self.U, self.V)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return self * (1.0 / alpha)

    def __repr__(self):
        return f"LowRankMatrix(shape={self.shape}, rank={self.rank})"


def zeros(nrows: int, ncols: int) -> LowRankMatrix:
    """The exact zero matrix (rank 0)."""
    return LowRankMatrix(np.zeros((nrows, 0)), np.zeros((ncols, 0)))


def outer(u, v) -> LowRankMatrix:
    """Rank-1 matrix ``u v^T``."""
    return LowRankMatrix(np.asarray(u, float)[:, None], np.asarray(v, float)[:, None])


def _truncation_rank(s: np.ndarray, policy: TruncationPolicy):
    """Smallest rank whose discarded tail is within tolerance, and the cap flag.

    Returns ``(rank, tol_met, rel_err)``.
    """
    total = np.sqrt(np.sum(s**2))
    if total == 0.0:
        return 0, True, 0.0
    # tails[k] = norm of s[k:]
    tails = np.sqrt(np.cumsum((s**2)[::-1])[::-1])
    tails = np.append(tails, 0.0)
    ok = np.nonzero(tails <= policy.eps_rel * total)[0]
    r = int(ok[0])
    if policy.rank_max is not None and r > policy.rank_max:
        r = policy.rank_max
        if policy.eps_rel > 0:
            return r, False, float(tails[r] / total)
    return r, True, float(tails[r] / total)


def from_dense(M, policy=None) -> LowRankMatrix:
    """Truncated SVD of a dense matrix."""
    policy = _as_policy(policy)
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    u, s, vt = scipy.linalg.svd(M, full_matrices=False)
    r, ok, err = _truncation_rank(s, policy)
    return LowRankMatrix(u[:, :r] * s[:r], vt[:r].T, tol_met=ok, err_estimate=err)


def _check_same_shape(A: LowRankMatrix, B: LowRankMatrix):
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")


def add(A: LowRankMatrix, B: LowRankMatrix) -> LowRankMatrix:
    """Exact sum by factor concatenation; rank(A) + rank(B), no truncation."""
    _check_same_shape(A, B)
    return LowRankMatrix(np.hstack([A.U, B.U]), np.hstack([A.V, B.V]))


def apply_factors(L, R, A: LowRankMatrix) -> LowRankMatrix:
    """Represent ``L @ A @ R.T`` by mapping each factor; the rank is unchanged.

    ``L`` and ``R`` may be dense arrays, sparse matrices, or callables acting
    on the columns of an ``(m, r)`` array.
    """
    return LowRankMatrix(_apply_one(L, A.U, "L"), _apply_one(R, A.V, "R"))


def _apply_one(op, X, name):
    if callable(op) and not hasattr(op, "shape"):
        return np.asarray(op(X))
    if op.shape[1] != X.shape[0]:
        raise ValueError(
            f"{name} has {op.shape[1]} columns but the factor has {X.shape[0]} rows"
        )
    if X.shape[1] == 0:
        return np.zeros((op.shape[0], 0))
    return np.asarray(op @ X)


def hadamard(A: LowRankMatrix, B: LowRankMatrix) -> LowRankMatrix:
    """Elementwise product, rank(A) * rank(B), via columnwise factor products."""
    _check_same_shape(A, B)
    U = (A.U[:, :, None] * B.U[:, None, :]).reshape(A.nrows, -1)
    V = (A.V[:, :, None] * B.V[:, None, :]).reshape(A.ncols, -1)
    return LowRankMatrix(U, V)


def _qr(X):
    # economic QR; for r > m the R factor is (m, r)
    return scipy.linalg.qr(X, mode="economic", check_finite=False)


def round(A: LowRankMatrix, policy=None) -> LowRankMatrix:
    """Recompress ``A`` to its truncated-SVD eps-rank.

    QR of both factors followed by an SVD of the small core, so the cost is
    O((nrows + ncols) r^2 + r^3). Singular values at roundoff level relative
    to the un-cancelled size ``sum_k |u_k| |v_k|`` count as zero, so exact
    cancellations such as ``A - A`` round to rank 0.
    """
    policy = _as_policy(policy)
    if A.rank == 0:
        return A
    Qu, Ru = _qr(A.U)
    Qv, Rv = _qr(A.V)
    W, s, Zt = scipy.linalg.svd(Ru @ Rv.T, full_matrices=False, check_finite=False)
    size = np.dot(np.linalg.norm(A.U, axis=0), np.linalg.norm(A.V, axis=0))
    s = np.where(s <= 8 * A.rank * np.finfo(float).eps * size, 0.0, s)
    r, ok, err = _truncation_rank(s, policy)
    return LowRankMatrix(
        Qu @ (W[:, :r] * s[:r]), Qv @ Zt[:r].T, tol_met=ok, err_estimate=err
    )


def frob_norm(A: LowRankMatrix) -> float:
    """Frobenius norm from the triangular factors of both sides."""
    if A.rank == 0:
        return 0.0
    # R factors instead of raw Gram matrices: same cost, no squared cancellation
    Ru = _qr(A.U)[1]
    Rv = _qr(A.V)[1]
    return float(np.linalg.norm(Ru @ Rv.T))


def dot(A: LowRankMatrix, B: LowRankMatrix) -> float:
    """Frobenius inner product ``sum(A * B)`` through rank x rank Gram matrices."""
    _check_same_shape(A, B)
    if A.rank == 0 or B.rank == 0:
        return 0.0
    return float(np.sum((A.U.T @ B.U) * (A.V.T @ B.V)))


def with_flags(A: LowRankMatrix, tol_met: bool, err_estimate: float) -> LowRankMatrix:
    return replace(A, tol_met=tol_met, err_estimate=err_estimate)
