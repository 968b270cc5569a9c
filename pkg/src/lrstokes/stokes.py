"""Uzawa solver for the discrete Stokes system in low-rank arithmetic.

The velocity is eliminated and the pressure Schur complement
``S = B^T Lap^{-1} B`` is solved with an inexact GMRES whose matvec and
orthogonalization tolerances loosen as the residual drops. Pressure is only
defined up to the kernel of ``B`` (constant and checkerboard modes), which
is projected out of every iterate.

The GMRES loop is written against a tiny arithmetic interface so that the
dense reference solver runs exactly the same outer iteration.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import lowrank
from .lowrank import LowRankMatrix, TruncationPolicy
from .operators import COMPONENTS, Grid2D, BoundaryData, apply_B, apply_BT
from .poisson import PoissonSolveStats, solve_poisson_cross

__all__ = [
    "GmresConfig",
    "LowRankArith",
    "SolveReport",
    "StokesProblem",
    "deflate",
    "inexact_gmres",
    "kernel_basis",
    "schur_apply",
    "schur_rhs",
    "uzawa_solve",
]

log = logging.getLogger(__name__)


@dataclass
class StokesProblem:
    """Right-hand sides of ``[Lap B; B^T 0] [u; p] = [f; g]`` on a grid.

    ``f_x``, ``f_y`` already contain the boundary corrections. ``p_scale``
    converts the discrete pressure unknown into the physical pressure.
    """

    grid: Grid2D
    f_x: LowRankMatrix
    f_y: LowRankMatrix
    g: LowRankMatrix
    bc: BoundaryData | None = None
    p_scale: float = 1.0

    def __post_init__(self):
        n = self.grid.n
        for name in ("f_x", "f_y"):
            if getattr(self, name).shape != self.grid.velocity_shape:
                raise ValueError(f"{name} must have shape {self.grid.velocity_shape}")
        if self.g.shape != self.grid.pressure_shape:
            raise ValueError(f"g must have shape {(n, n)}")

    @property
    def f(self) -> dict:
        return {"x": self.f_x, "y": self.f_y}


@dataclass(frozen=True)
class GmresConfig:
    tol: float = 5e-9
    max_iter: int = 60
    base_eps: float = 5e-9
    relax_floor: float = 1e-14
    # upper bound on the relaxed per-iteration tolerance
    relax_cap: float = 1e-2

    def __post_init__(self):
        if not (0 < self.relax_floor <= self.base_eps <= self.relax_cap):
            raise ValueError("need 0 < relax_floor <= base_eps <= relax_cap")
        if self.base_eps > self.tol:
            raise ValueError("base_eps must not exceed tol")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    def matvec_eps(self, residual: float) -> float:
        """Relaxed truncation tolerance given the current relative residual."""
        eps = self.base_eps / max(residual, self.tol)
        return float(min(max(eps, self.relax_floor), self.relax_cap))


@dataclass
class SolveReport:
    residuals: list[float] = field(default_factory=list)
    krylov_ranks: list[int] = field(default_factory=list)
    matvec_eps: list[float] = field(default_factory=list)
    poisson_stats: list[list[PoissonSolveStats]] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    wall_time: float = 0.0
    solution_rank: int = 0

    @property
    def max_rank(self) -> int:
        return max(self.krylov_ranks, default=0)

    def trace_rows(self):
        for k, (r, rk, e) in enumerate(
            zip(self.residuals[1:], self.krylov_ranks, self.matvec_eps), start=1
        ):
            yield {"iter": k, "residual": r, "krylov_rank": rk, "matvec_eps": e}


def kernel_basis(n: int) -> tuple[LowRankMatrix, LowRankMatrix]:
    """Orthonormal kernel of B: the constant and the checkerboard pressure."""
    ones = np.ones(n) / np.sqrt(n)
    alt = (-1.0) ** np.arange(n) / np.sqrt(n)
    return lowrank.outer(ones, ones), lowrank.outer(alt, alt)


def deflate(p: LowRankMatrix) -> LowRankMatrix:
    """Remove the kernel components of a pressure field."""
    n = p.nrows
    if p.shape != (n, n):
        raise ValueError(f"pressure must be square, got {p.shape}")
    if p.rank == 0:
        return p
    out = p
    for q in kernel_basis(n):
        c = lowrank.dot(p, q)
        if c != 0.0:
            out = lowrank.add(out, -c * q)
    if out is p:
        return p
    return lowrank.round(out, 1e-14)


class LowRankArith:
    """Vector-space operations on low-rank fields with truncation."""

    @staticmethod
    def dot(a, b):
        return lowrank.dot(a, b)

    @staticmethod
    def norm(a):
        return lowrank.frob_norm(a)

    @staticmethod
    def scale(a, alpha):
        return a * alpha

    @staticmethod
    def axpy(alpha, x, y, eps):
        """``round(y + alpha x)``."""
        return lowrank.round(lowrank.add(y, alpha * x), eps)

    @staticmethod
    def combine(coeffs, vecs, eps):
        acc = coeffs[0] * vecs[0]
        for c, v in zip(coeffs[1:], vecs[1:]):
            acc = lowrank.add(acc, c * v)
        return lowrank.round(acc, eps)

    @staticmethod
    def rank(a):
        return a.rank

    @staticmethod
    def deflate(a):
        return deflate(a)


def inexact_gmres(matvec, b, arith, cfg: GmresConfig, report: SolveReport | None = None):
    """Unrestarted GMRES with relaxed matvec accuracy, started from zero.

    ``matvec(v, eps)`` must return ``S v`` to relative accuracy ``eps``.
    Modified Gram-Schmidt truncates after every update. Returns ``(x, report)``.
    """
    report = report or SolveReport()
    beta = arith.norm(b)
    report.residuals.append(1.0)
    if beta == 0.0:
        report.converged = True
        return arith.scale(b, 0.0), report

    V = [arith.scale(b, 1.0 / beta)]
    m = cfg.max_iter
    Hm = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    rhs = np.zeros(m + 1)
    rhs[0] = beta
    res = 1.0
    k = 0
    for k in range(m):
        eps = cfg.matvec_eps(res)
        report.matvec_eps.append(eps)
        report.krylov_ranks.append(arith.rank(V[k]))
        w = matvec(V[k], eps)
        for j in range(k + 1):
            Hm[j, k] = arith.dot(w, V[j])
            w = arith.axpy(-Hm[j, k], V[j], w, eps)
        Hm[k + 1, k] = arith.norm(w)

        # Givens update of the projected least-squares problem
        for j in range(k):
            t = cs[j] * Hm[j, k] + sn[j] * Hm[j + 1, k]
            Hm[j + 1, k] = -sn[j] * Hm[j, k] + cs[j] * Hm[j + 1, k]
            Hm[j, k] = t
        r = np.hypot(Hm[k, k], Hm[k + 1, k])
        cs[k], sn[k] = Hm[k, k] / r, Hm[k + 1, k] / r
        Hm[k, k] = r
        Hm[k + 1, k] = 0.0
        rhs[k + 1] = -sn[k] * rhs[k]
        rhs[k] = cs[k] * rhs[k]
        res = abs(rhs[k + 1]) / beta
        report.residuals.append(res)
        log.debug("gmres it %d: res %.3e rank %d eps %.1e", k + 1, res, report.krylov_ranks[-1], eps)

        if res <= cfg.tol:
            report.converged = True
            break
        w_norm = arith.norm(w)
        if w_norm == 0.0:
            report.converged = True
            break
        V.append(arith.deflate(arith.scale(w, 1.0 / w_norm)))

    nk = k + 1
    y = np.linalg.solve(np.triu(Hm[:nk, :nk]), rhs[:nk])
    x = arith.deflate(arith.combine(list(y), V[:nk], cfg.base_eps))
    report.iterations = nk
    return x, report


def _policy(eps):
    return TruncationPolicy(eps_rel=eps)


def schur_apply(p: LowRankMatrix, eps_mv: float, stats: list | None = None) -> LowRankMatrix:
    """``deflate(B^T Lap^{-1} B p)`` with all steps truncated at ``eps_mv``."""
    terms = []
    for c in COMPONENTS:
        v = apply_B(c, p)
        f, st = solve_poisson_cross(v, _policy(eps_mv))
        if stats is not None:
            stats.append(st)
        terms.append(apply_BT(c, f))
    return deflate(lowrank.round(lowrank.add(*terms), eps_mv))


def schur_rhs(prob: StokesProblem, eps: float) -> LowRankMatrix:
    """``deflate(B^T Lap^{-1} f - g)``, the pressure equation's right-hand side."""
    acc = -prob.g
    for c in COMPONENTS:
        f, _ = solve_poisson_cross(prob.f[c], _policy(eps))
        acc = lowrank.add(acc, apply_BT(c, f))
    return deflate(lowrank.round(acc, eps))


def recover_velocity(prob: StokesProblem, p: LowRankMatrix, eps: float):
    """``u_c = Lap^{-1} (f_c - B_c p)`` for both components."""
    out = []
    for c in COMPONENTS:
        r = lowrank.round(lowrank.add(prob.f[c], -apply_B(c, p)), eps)
        u, _ = solve_poisson_cross(r, _policy(eps))
        out.append(u)
    return tuple(out)


def uzawa_solve(prob: StokesProblem, cfg: GmresConfig | None = None):
    """Solve the Stokes system; returns ``(p, u_x, u_y, report)``.

    ``p`` is the discrete pressure unknown with kernel modes removed
    (multiply by ``prob.p_scale`` for physical units).
    """
    cfg = cfg or GmresConfig()
    t0 = time.perf_counter()
    report = SolveReport()
    b = schur_rhs(prob, cfg.base_eps)

    def matvec(v, eps):
        st = []
        out = schur_apply(v, eps, st)
        report.poisson_stats.append(st)
        return out

    p, report = inexact_gmres(matvec, b, LowRankArith, cfg, report)
    u_x, u_y = recover_velocity(prob, p, cfg.base_eps)
    report.wall_time = time.perf_counter() - t0
    report.solution_rank = p.rank
    if not report.converged:
        log.warning("GMRES stopped after %d iterations at residual %.3e",
                    report.iterations, report.residuals[-1])
    return p, u_x, u_y, report
