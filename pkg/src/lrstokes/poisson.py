"""Low-rank Poisson solver on the velocity grid, and an exponential-sum baseline.

The Laplacian is diagonal in the 2D sine basis, so ``Lap f = g`` becomes an
elementwise division in frequency space. The transformed right-hand side
has the rank of ``g``, and any entry of the quotient costs O(rank), which is
all :func:`~lrstokes.cross.aca_cross` needs to rebuild the quotient in
low-rank form directly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import lowrank
from .cross import CrossConfig, ElementEvaluator, aca_cross
from .lowrank import LowRankMatrix, TruncationPolicy
from .operators import SpectrumTable, dst1, spectrum

__all__ = [
    "ExpSumQuadrature",
    "PoissonSolveStats",
    "apply_inverse_expsum",
    "bench_inverse",
    "build_expsum",
    "division_evaluator",
    "dst2",
    "solve_poisson_cross",
]


@dataclass
class PoissonSolveStats:
    rank_in: int = 0
    rank_freq: int = 0
    rank_out: int = 0
    evaluator_calls: int = 0
    elapsed: float = 0.0
    converged: bool = True
    # relative residual ||Lap f - g|| / ||g|| when it was computed
    residual: float = float("nan")
    refinements: int = 0
    eps_used: float = float("nan")


def dst2(A: LowRankMatrix) -> LowRankMatrix:
    """2D orthonormal DST-I applied through the factors (involutory)."""
    return lowrank.apply_factors(dst1, dst1, A)


def division_evaluator(ghat: LowRankMatrix, denom) -> ElementEvaluator:
    """Entries of ``ghat / denom(i, j)``, each in O(rank(ghat)) work."""
    U, V = ghat.U, ghat.V

    def func(I, J):
        I, J = np.broadcast_arrays(I, J)
        if U.shape[1] == 0:
            return np.zeros(I.shape)
        return np.einsum("...k,...k->...", U[I], V[J]) / denom(I, J)

    return ElementEvaluator(ghat.nrows, ghat.ncols, func)


def laplace_symbol(table: SpectrumTable) -> LowRankMatrix:
    """The eigenvalue table ``eval_D`` as an exact rank-2 matrix."""
    lam = table.lam
    return LowRankMatrix(
        table.scale * np.column_stack([lam, 4.0 - lam]), np.column_stack([4.0 - lam, lam])
    )


def frequency_residual(fhat: LowRankMatrix, ghat: LowRankMatrix, table: SpectrumTable) -> float:
    """``||D o fhat - ghat||_F``, equal to ``||Lap f - g||_F`` (orthonormal DST)."""
    return lowrank.frob_norm(lowrank.add(lowrank.hadamard(laplace_symbol(table), fhat), -ghat))


# relative tolerance never requested from the cross below this
EPS_FLOOR = 1e-14


def solve_poisson_cross(
    g: LowRankMatrix,
    policy=None,
    seed: int = 0,
    table: SpectrumTable | None = None,
    residual_factor: float | None = 10.0,
    max_refine: int = 4,
):
    """Solve ``Lap f = g`` for a low-rank right-hand side.

    DST both factors, cross-approximate the frequency-space quotient, DST
    back; no ``(n-1) x (n-1)`` array is formed. A tolerance of ``eps`` on
    the quotient only bounds the error in ``f``: the Laplacian can amplify
    high-frequency error by up to its condition number. With
    ``residual_factor`` set, the exact low-rank residual is computed and
    the cross is repeated with a tighter tolerance until
    ``||Lap f - g|| <= residual_factor * eps * ||g||``. Pass
    ``residual_factor=None`` to control the solution error only.

    Returns ``(f, stats)``; ``f.tol_met`` is False if the cross hit its
    rank cap.
    """
    policy = lowrank._as_policy(policy)
    t0 = time.perf_counter()
    m = g.nrows
    if g.shape != (m, m):
        raise ValueError(f"right-hand side must be square, got {g.shape}")
    stats = PoissonSolveStats(rank_in=g.rank)
    if g.rank == 0:
        stats.elapsed = time.perf_counter() - t0
        return lowrank.zeros(m, m), stats
    table = table or spectrum(m + 1)
    ghat = dst2(g)
    gnorm = lowrank.frob_norm(ghat)
    if gnorm == 0.0:
        # factors present but the matrix is exactly zero (e.g. B of a kernel mode)
        stats.elapsed = time.perf_counter() - t0
        return lowrank.zeros(m, m), stats
    eps = policy.eps_rel if policy.eps_rel > 0 else lowrank.DEFAULT_EPS
    evaluator = division_evaluator(ghat, table.eval_D)
    eps_k = eps
    for attempt in range(max_refine + 1):
        cfg = CrossConfig(eps_rel=eps_k, rank_max=policy.rank_max or m, seed=seed)
        fhat, info = aca_cross(evaluator, cfg, return_info=True)
        stats.evaluator_calls += info.evaluations
        if residual_factor is None:
            break
        target = residual_factor * eps
        stats.residual = frequency_residual(fhat, ghat, table) / gnorm
        if stats.residual <= target or eps_k <= EPS_FLOOR or not info.converged:
            break
        stats.refinements += 1
        eps_k = max(eps_k * 0.5 * target / stats.residual, EPS_FLOOR)

    f = dst2(fhat)
    stats.rank_freq = info.rank_before_round
    stats.rank_out = f.rank
    stats.converged = info.converged
    stats.eps_used = eps_k
    stats.elapsed = time.perf_counter() - t0
    return lowrank.with_flags(f, fhat.tol_met, fhat.err_estimate), stats


@dataclass(frozen=True)
class ExpSumQuadrature:
    """``1/x ~ sum_k w_k exp(-p_k x)`` on ``[a, b]`` with relative error ``eps_target``."""

    weights: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    interval: tuple[float, float]
    eps_target: float
    step: float

    @property
    def terms(self) -> list[tuple[float, float]]:
        return list(zip(self.weights.tolist(), self.nodes.tolist()))

    @property
    def nterms(self) -> int:
        return self.weights.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.multiply.outer(x, self.nodes)) @ self.weights

    def max_rel_error(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(1.0 - x * self(x))))


MAX_TERMS = 512


def _check_grid(a, b):
    # the error is smooth and periodic in log x; this grid resolves it finely
    return np.geomspace(a, b, max(2000, int(400 * math.log(b / a)) + 2))


def build_expsum(a: float, b: float, eps: float) -> ExpSumQuadrature:
    """Exponential sum for ``1/x`` on ``[a, b]`` from the trapezoidal rule in log p.

    With ``p = exp(t)``, ``1/x = int exp(t - x e^t) dt``. Sampling at
    ``t_k = k tau`` gives nodes ``exp(k tau)`` and weights ``tau exp(k tau)``.
    The step is set from the strip of analyticity and the index range from
    the two tails, then checked on a dense grid. The weights are finally
    refit by nonnegative least squares, which zeroes many of them; the
    reduced sum is kept only if it still meets the tolerance.
    """
    if not (0 < a < b):
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    if not (0 < eps < 1):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    xs = _check_grid(a, b)
    target = 0.8 * eps

    def make(tau, klo, khi):
        k = np.arange(klo, khi + 1)
        p = np.exp(k * tau)
        return p, tau * p

    def err(p, w):
        return np.max(np.abs(1.0 - xs * (np.exp(-np.multiply.outer(xs, p)) @ w)))

    tau = math.pi**2 / (math.log(1.0 / target) + 1.0)
    while True:
        # left tail ~ b e^{t}; right tail needs a e^{t} past log(1/eps)
        klo = math.floor((math.log(target / (4 * b))) / tau)
        khi = math.ceil(math.log((math.log(1.0 / target) + 4.0) / a) / tau)
        if khi - klo + 1 > MAX_TERMS:
            raise ValueError(f"accuracy {eps} on [{a}, {b}] needs more than {MAX_TERMS} terms")
        p, w = make(tau, klo, khi)
        if err(p, w) <= target:
            break
        tau *= 0.9

    # nonnegative least-squares refit of the weights on the relative error;
    # the solution is sparse, which removes about half of the terms
    M = xs[:, None] * np.exp(-np.multiply.outer(xs, p))
    w_fit, _ = scipy.optimize.nnls(M, np.ones(xs.size), maxiter=50 * p.size)
    keep = w_fit > 0
    if np.max(np.abs(1.0 - M[:, keep] @ w_fit[keep])) <= target:
        p, w = p[keep], w_fit[keep]
    else:
        # drop terms from either end while the bound holds
        for side in ("lo", "hi"):
            while khi > klo:
                lo2, hi2 = (klo + 1, khi) if side == "lo" else (klo, khi - 1)
                p2, w2 = make(tau, lo2, hi2)
                if err(p2, w2) > target:
                    break
                klo, khi = lo2, hi2
        p, w = make(tau, klo, khi)
    return ExpSumQuadrature(weights=w, nodes=p, interval=(a, b), eps_target=eps, step=tau)


def sum_spectrum_bounds(mu) -> tuple[float, float]:
    mu = np.asarray(mu)
    return 2.0 * float(mu.min()), 2.0 * float(mu.max())


def apply_inverse_expsum(
    q: ExpSumQuadrature, mu, ghat: LowRankMatrix, policy=None
) -> LowRankMatrix:
    """Divide ``ghat`` elementwise by ``mu_i + mu_j`` through the exponential sum.

    Builds ``sum_k w_k (e^{-p_k mu} e^{-p_k mu}^T) o ghat`` with rank
    ``nterms * rank(ghat)`` and rounds it.
    """
    policy = lowrank._as_policy(policy)
    mu = np.asarray(mu, dtype=float)
    if ghat.shape != (mu.size, mu.size):
        raise ValueError(f"ghat has shape {ghat.shape}, expected {(mu.size, mu.size)}")
    if np.any(mu <= 0):
        raise ValueError("mu must be positive")
    a, b = q.interval
    lo, hi = sum_spectrum_bounds(mu)
    slack = 1e-12
    if lo < a * (1 - slack) or hi > b * (1 + slack):
        raise ValueError(f"spectrum [{lo}, {hi}] outside quadrature interval [{a}, {b}]")
    if ghat.rank == 0:
        return ghat
    # E[:, k] = exp(-p_k mu); sqrt(w_k) on both sides keeps the factors balanced
    Ex = np.exp(-np.multiply.outer(mu, q.nodes)) * np.sqrt(q.weights)
    r = ghat.rank
    U = (Ex[:, :, None] * ghat.U[:, None, :]).reshape(mu.size, -1)
    V = (Ex[:, :, None] * ghat.V[:, None, :]).reshape(mu.size, -1)
    return lowrank.round(LowRankMatrix(U, V), policy)


@dataclass
class InverseBench:
    n: int
    rank: int
    eps: float
    nterms: int
    time_cross: float
    time_expsum: float
    rank_cross: int
    rank_expsum: int
    err_cross: float
    err_expsum: float

    @property
    def speedup(self) -> float:
        return self.time_expsum / self.time_cross


def synthetic_frequency_rhs(n: int, rank: int, seed: int = 0) -> LowRankMatrix:
    """Frequency image of a smooth rank-``rank`` field on the interior vertices.

    Each factor column is a random combination of a few low sine modes
    times a random Gaussian bump, so spectra decay the way they do for
    smooth Krylov vectors.
    """
    rng = np.random.default_rng(seed)
    x = np.arange(1, n) / n

    def smooth_cols():
        cols = []
        for _ in range(rank):
            c = rng.uniform(0.2, 0.8)
            w = rng.uniform(0.05, 0.3)
            k = rng.integers(1, 6, size=3)
            amp = rng.standard_normal(3)
            col = np.exp(-((x - c) ** 2) / (2 * w * w)) * (amp @ np.sin(np.pi * np.outer(k, x)))
            cols.append(col)
        return np.column_stack(cols)

    g = LowRankMatrix(smooth_cols(), smooth_cols())
    return dst2(g)


def bench_inverse(n: int, rank: int, eps: float, seed: int = 0, samples: int = 2000) -> InverseBench:
    """Time frequency-space division by ``mu_i + mu_j``: cross versus exponential sums.

    Both paths receive the same input and the same separable denominator.
    Accuracy is the relative Frobenius error against direct division (dense
    for ``n <= 2048``, at ``samples`` random entries beyond).
    """
    table = spectrum(n)
    mu = table.mu
    ghat = synthetic_frequency_rhs(n, rank, seed)
    a, b = sum_spectrum_bounds(mu)
    q = build_expsum(a, b, eps)
    policy = TruncationPolicy(eps_rel=eps)

    def denom(I, J):
        return mu[I] + mu[J]

    t0 = time.perf_counter()
    fe = apply_inverse_expsum(q, mu, ghat, policy)
    t_exp = time.perf_counter() - t0

    t0 = time.perf_counter()
    fc = aca_cross(division_evaluator(ghat, denom), CrossConfig(eps_rel=eps, rank_max=n - 1, seed=seed))
    t_cross = time.perf_counter() - t0

    if n <= 2048:
        exact = ghat.to_dense() / (mu[:, None] + mu[None, :])
        scale = np.linalg.norm(exact)

        def err(F):
            return float(np.linalg.norm(F.to_dense() - exact) / scale)

    else:
        # sampled entries only; normalised by the sampled exact values
        rng = np.random.default_rng(seed + 1)
        I = rng.integers(0, n - 1, samples)
        J = rng.integers(0, n - 1, samples)
        exact = np.einsum("ij,ij->i", ghat.U[I], ghat.V[J]) / denom(I, J)
        scale = np.linalg.norm(exact)

        def err(F):
            return float(np.linalg.norm(np.einsum("ij,ij->i", F.U[I], F.V[J]) - exact) / scale)

    return InverseBench(
        n=n,
        rank=rank,
        eps=eps,
        nterms=q.nterms,
        time_cross=t_cross,
        time_expsum=t_exp,
        rank_cross=fc.rank,
        rank_expsum=fe.rank,
        err_cross=err(fc),
        err_expsum=err(fe),
    )
