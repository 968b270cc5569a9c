"""Dense full-format reference solvers.

Same outer Uzawa-GMRES as :mod:`lrstokes.stokes`, but on plain arrays with
FFT-based Poisson solves, so low-rank versus full comparisons only differ
in the low-rank arithmetic. Also the dense Schur spectrum oracle.
"""

from __future__ import annotations

import time

import numpy as np

from .operators import assemble_dense, dst1, one_dim_ops, spectrum
from .stokes import GmresConfig, SolveReport, StokesProblem, inexact_gmres

__all__ = [
    "DenseArith",
    "dense_deflate",
    "dense_poisson",
    "dense_schur_apply",
    "dense_stokes",
    "schur_spectrum",
]


def dense_poisson(g: np.ndarray) -> np.ndarray:
    """Solve ``Lap f = g`` on the interior vertices by sine diagonalization."""
    g = np.asarray(g, dtype=float)
    m = g.shape[0]
    if g.shape != (m, m):
        raise ValueError(f"expected a square field, got {g.shape}")
    if m + 1 > 4096:
        raise ValueError("dense Poisson limited to n <= 4096")
    D = spectrum(m + 1).dense_D()
    ghat = dst1(dst1(g, axis=0), axis=1)
    return dst1(dst1(ghat / D, axis=0), axis=1)


def _b_ops(n):
    o = one_dim_ops(n)
    return o.G, o.H, n / 4.0


def dense_apply_B(c, P):
    G, H, s = _b_ops(P.shape[0])
    if c == "x":
        return s * (G @ (H @ P.T).T)
    return s * (H @ (G @ P.T).T)


def dense_apply_BT(c, V):
    G, H, s = _b_ops(V.shape[0] + 1)
    if c == "x":
        return s * (G.T @ (H.T @ V.T).T)
    return s * (H.T @ (G.T @ V.T).T)


def dense_deflate(p: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    ones = np.ones(n) / np.sqrt(n)
    alt = (-1.0) ** np.arange(n) / np.sqrt(n)
    out = p.copy()
    for q in (np.outer(ones, ones), np.outer(alt, alt)):
        out -= np.sum(p * q) * q
    return out


def dense_schur_apply(p: np.ndarray) -> np.ndarray:
    out = sum(dense_apply_BT(c, dense_poisson(dense_apply_B(c, p))) for c in "xy")
    return dense_deflate(out)


class DenseArith:
    """Exact (untruncated) counterpart of :class:`lrstokes.stokes.LowRankArith`."""

    @staticmethod
    def dot(a, b):
        return float(np.vdot(a, b))

    @staticmethod
    def norm(a):
        return float(np.linalg.norm(a))

    @staticmethod
    def scale(a, alpha):
        return a * alpha

    @staticmethod
    def axpy(alpha, x, y, eps):
        return y + alpha * x

    @staticmethod
    def combine(coeffs, vecs, eps):
        return sum(c * v for c, v in zip(coeffs, vecs))

    @staticmethod
    def rank(a):
        return int(np.linalg.matrix_rank(a))

    @staticmethod
    def deflate(a):
        return dense_deflate(a)


def dense_stokes(prob: StokesProblem, cfg: GmresConfig | float | None = None):
    """Full-format Uzawa-GMRES; returns ``(p, (u_x, u_y), report)``."""
    if prob.grid.n > 1024:
        raise ValueError("dense Stokes limited to n <= 1024")
    if cfg is None:
        cfg = GmresConfig()
    elif not isinstance(cfg, GmresConfig):
        cfg = GmresConfig(tol=float(cfg), base_eps=float(cfg))
    t0 = time.perf_counter()
    f = {"x": prob.f_x.to_dense(), "y": prob.f_y.to_dense()}
    g = prob.g.to_dense()
    b = dense_deflate(sum(dense_apply_BT(c, dense_poisson(f[c])) for c in "xy") - g)
    report = SolveReport()
    p, report = inexact_gmres(lambda v, eps: dense_schur_apply(v), b, _NoRank, cfg, report)
    u = tuple(dense_poisson(f[c] - dense_apply_B(c, p)) for c in "xy")
    report.wall_time = time.perf_counter() - t0
    return p, u, report


class _NoRank(DenseArith):
    # rank tracking of dense Krylov vectors is an O(n^3) SVD; not needed
    @staticmethod
    def rank(a):
        return a.shape[0]


def schur_spectrum(n: int) -> np.ndarray:
    """Sorted eigenvalues of the dense ``B^T Lap^{-1} B`` (n <= 24)."""
    if n > 24:
        raise ValueError("dense Schur spectrum limited to n <= 24")
    return np.linalg.eigvalsh(assemble_dense(n).schur())
