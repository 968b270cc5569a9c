"""Semi-staggered grid operators in Kronecker form.

Pressure lives at the ``n x n`` cell centers, each velocity component at the
``(n-1) x (n-1)`` interior vertices. Fields are stored as 2-D arrays (or
:class:`LowRankMatrix`) indexed ``[ix, iy]``; a Kronecker operator ``C (x) D``
acts as ``X -> C @ X @ D.T``, the first factor acting along x.

The one-dimensional blocks are ``E`` (drop the first entry), ``Z`` (drop the
last entry), ``G = E - Z`` and ``H = E + Z``. With them

    B_x = G (x) H / (4h),    B_y = H (x) G / (4h),
    Lap = B_x B_x^T + B_y B_y^T = (A1 (x) A2 + A2 (x) A1) / (16 h^2),

where ``A1 = G G^T = tridiag(-1, 2, -1)`` and ``A2 = H H^T = 4I - A1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import lowrank
from .lowrank import LowRankMatrix

__all__ = [
    "BoundaryData",
    "DenseOperators",
    "Grid2D",
    "OneDimOps",
    "SpectrumTable",
    "apply_B",
    "apply_BT",
    "apply_laplace",
    "assemble_dense",
    "boundary_corrections",
    "dst1",
    "lid_driven_cavity",
    "one_dim_ops",
    "spectrum",
]

COMPONENTS = ("x", "y")


@dataclass(frozen=True)
class Grid2D:
    """Uniform ``n x n`` cell grid on the unit square."""

    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"need n >= 4 cells, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        """Interior vertex coordinates ``i h``, i = 1..n-1."""
        return np.arange(1, self.n) / self.n

    @property
    def centers(self) -> np.ndarray:
        """Cell center coordinates ``(i - 1/2) h``, i = 1..n."""
        return (np.arange(self.n) + 0.5) / self.n

    @property
    def pressure_shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def velocity_shape(self) -> tuple[int, int]:
        return (self.n - 1, self.n - 1)


@dataclass(frozen=True)
class OneDimOps:
    E: sp.csr_matrix
    Z: sp.csr_matrix
    G: sp.csr_matrix
    H: sp.csr_matrix
    A1: sp.csr_matrix
    A2: sp.csr_matrix


_ops_cache: dict[int, OneDimOps] = {}


def one_dim_ops(n: int) -> OneDimOps:
    """Sparse ``(n-1) x n`` selection blocks and their products."""
    ops = _ops_cache.get(n)
    if ops is None:
        E = sp.eye(n - 1, n, k=1, format="csr")
        Z = sp.eye(n - 1, n, k=0, format="csr")
        G = (E - Z).tocsr()
        H = (E + Z).tocsr()
        ops = OneDimOps(E, Z, G, H, (G @ G.T).tocsr(), (H @ H.T).tocsr())
        _ops_cache[n] = ops
    return ops


def _full_ops(n: int):
    """Node-to-cell difference and sum, ``n x (n+1)``, over all vertices.

    Restricted to the interior columns they equal ``G.T`` and ``H.T``.
    """
    Gf = sp.eye(n, n + 1, k=0, format="csr") - sp.eye(n, n + 1, k=1, format="csr")
    Hf = sp.eye(n, n + 1, k=0, format="csr") + sp.eye(n, n + 1, k=1, format="csr")
    return Gf.tocsr(), Hf.tocsr()


@dataclass(frozen=True)
class SpectrumTable:
    """Eigenvalues of the 1D blocks and the elementwise spectrum of the Laplacian.

    ``lam[i]`` is the eigenvalue of ``A1`` for the sine mode ``i + 1``.
    """

    n: int
    lam: np.ndarray = field(repr=False)
    scale: float

    def eval_D(self, i, j):
        """Eigenvalue of the Laplacian for the sine mode pair (i+1, j+1)."""
        li = self.lam[i]
        lj = self.lam[j]
        return self.scale * (li * (4.0 - lj) + (4.0 - li) * lj)

    def dense_D(self) -> np.ndarray:
        return self.eval_D(np.arange(self.n - 1)[:, None], np.arange(self.n - 1)[None, :])

    @cached_property
    def mu(self) -> np.ndarray:
        """Diagonal terms ``scale * lam (4 - lam)`` of the sum-separable form."""
        return self.scale * self.lam * (4.0 - self.lam)


def spectrum(n: int) -> SpectrumTable:
    k = np.arange(1, n)
    lam = 4.0 * np.sin(k * np.pi / (2 * n)) ** 2
    return SpectrumTable(n=n, lam=lam, scale=n * n / 16.0)


def dst1(x, axis: int = 0) -> np.ndarray:
    """Orthonormal DST-I along ``axis``: ``y_k = sqrt(2/n) sum_j sin(jk pi/n) x_j``.

    ``n - 1`` is the transform length. Computed from a real FFT of the odd
    extension of length ``2n``; the transform is its own inverse.
    """
    x = np.asarray(x, dtype=float)
    x = np.moveaxis(x, axis, 0)
    N = x.shape[0]
    n = N + 1
    ext = np.zeros((2 * n,) + x.shape[1:])
    ext[1:n] = x
    ext[n + 1 :] = -x[::-1]
    Y = np.fft.rfft(ext, axis=0)
    y = -Y[1:n].imag * np.sqrt(0.5 / n)
    return np.moveaxis(y, 0, axis)


def _check_shape(A: LowRankMatrix, shape, what):
    if A.shape != shape:
        raise ValueError(f"{what} must have shape {shape}, got {A.shape}")


def apply_B(component: str, P: LowRankMatrix) -> LowRankMatrix:
    """Discrete gradient component applied to a pressure field (n x n)."""
    n = P.nrows
    _check_shape(P, (n, n), "pressure")
    o = one_dim_ops(n)
    c = n / 4.0
    if component == "x":
        return lowrank.apply_factors(c * o.G, o.H, P)
    if component == "y":
        return lowrank.apply_factors(c * o.H, o.G, P)
    raise ValueError(f"unknown component {component!r}")


def apply_BT(component: str, V: LowRankMatrix) -> LowRankMatrix:
    """Adjoint of :func:`apply_B`, velocity (n-1 x n-1) to pressure."""
    n = V.nrows + 1
    _check_shape(V, (n - 1, n - 1), "velocity")
    o = one_dim_ops(n)
    c = n / 4.0
    if component == "x":
        return lowrank.apply_factors(c * o.G.T, o.H.T, V)
    if component == "y":
        return lowrank.apply_factors(c * o.H.T, o.G.T, V)
    raise ValueError(f"unknown component {component!r}")


def apply_laplace(V: LowRankMatrix) -> LowRankMatrix:
    """Exact 9-point Laplacian; the result has rank 2 * rank(V)."""
    n = V.nrows + 1
    _check_shape(V, (n - 1, n - 1), "velocity")
    o = one_dim_ops(n)
    c = n * n / 16.0
    return lowrank.add(
        lowrank.apply_factors(c * o.A1, o.A2, V),
        lowrank.apply_factors(c * o.A2, o.A1, V),
    )


@dataclass(frozen=True)
class DenseOperators:
    """Explicit matrices acting on row-major flattened fields."""

    n: int
    Bx: np.ndarray
    By: np.ndarray
    Lap: np.ndarray

    @property
    def B(self) -> np.ndarray:
        return np.vstack([self.Bx, self.By])

    def schur(self) -> np.ndarray:
        """Dense ``B^T A^{-1} B`` with ``A = I_2 (x) Lap``."""
        S = self.Bx.T @ np.linalg.solve(self.Lap, self.Bx)
        S += self.By.T @ np.linalg.solve(self.Lap, self.By)
        return 0.5 * (S + S.T)


def assemble_dense(n: int, max_n: int = 64) -> DenseOperators:
    """Dense B_x, B_y and Laplacian from explicit E, Z products (oracle use)."""
    if n > max_n:
        raise ValueError(f"dense assembly limited to n <= {max_n}, got {n}")
    E = np.eye(n - 1, n, k=1)
    Z = np.eye(n - 1, n)
    G = E - Z
    H = E + Z
    h = 1.0 / n
    Bx = np.kron(G, H) / (4 * h)
    By = np.kron(H, G) / (4 * h)
    return DenseOperators(n=n, Bx=Bx, By=By, Lap=Bx @ Bx.T + By @ By.T)


_SIDES = ("bottom", "top", "left", "right")


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet velocity values on the boundary vertices, one profile per side.

    ``u`` and ``v`` map a side name to a length ``n + 1`` array of vertex
    values along that side (ordered by increasing coordinate). Bottom and top
    profiles own the corner vertices; the corner entries of left and right
    profiles are ignored.
    """

    n: int
    u: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        for comp in (self.u, self.v):
            for side, prof in comp.items():
                if side not in _SIDES:
                    raise ValueError(f"unknown side {side!r}")
                prof = np.asarray(prof, dtype=float)
                if prof.ndim != 1:
                    raise ValueError(
                        f"side {side!r}: boundary data must be a 1D profile (separable)"
                    )
                if prof.shape[0] != self.n + 1:
                    raise ValueError(
                        f"side {side!r}: expected {self.n + 1} vertex values, got {prof.shape[0]}"
                    )

    def field(self, component: str) -> LowRankMatrix:
        """Full ``(n+1) x (n+1)`` vertex field, zero at interior vertices."""
        data = self.u if component == "x" else self.v
        n = self.n
        U, V = [], []
        first = np.zeros(n + 1)
        first[0] = 1.0
        last = np.zeros(n + 1)
        last[-1] = 1.0
        inner = np.ones(n + 1)
        inner[[0, -1]] = 0.0
        for side, prof in data.items():
            prof = np.asarray(prof, dtype=float)
            if side == "bottom":
                U.append(prof), V.append(first)
            elif side == "top":
                U.append(prof), V.append(last)
            elif side == "left":
                U.append(first), V.append(prof * inner)
            else:
                U.append(last), V.append(prof * inner)
        if not U:
            return lowrank.zeros(n + 1, n + 1)
        return LowRankMatrix(np.column_stack(U), np.column_stack(V))


def lid_driven_cavity(n: int, speed: float = 1.0) -> BoundaryData:
    """Lid moving with ``u = speed`` along the top; corners and other walls at rest."""
    lid = np.full(n + 1, float(speed))
    lid[[0, -1]] = 0.0
    return BoundaryData(n=n, u={"top": lid})


def boundary_corrections(bc: BoundaryData):
    """Right-hand side contributions of nonzero boundary velocities.

    Returns ``(f_x, f_y, g)``: the momentum corrections ``-Lap_ext u_b`` on
    the interior vertices and the divergence correction ``-B_ext^T u_b`` on
    the cells, where ``u_b`` is the boundary-only vertex field and the
    ``_ext`` operators are the same stencils over all vertices.
    """
    n = bc.n
    Gf, Hf = _full_ops(n)
    o = one_dim_ops(n)
    # interior rows of Gf^T Gf and Hf^T Hf
    GG = (o.G @ Gf).tocsr()
    HH = (o.H @ Hf).tocsr()
    c2 = n * n / 16.0
    c1 = n / 4.0

    f = []
    g = lowrank.zeros(n, n)
    for comp in COMPONENTS:
        ub = bc.field(comp)
        lap_b = lowrank.add(
            lowrank.apply_factors(c2 * GG, HH, ub),
            lowrank.apply_factors(c2 * HH, GG, ub),
        )
        f.append(lowrank.round(-lap_b, 1e-14))
        if comp == "x":
            div_b = lowrank.apply_factors(c1 * Gf, Hf, ub)
        else:
            div_b = lowrank.apply_factors(c1 * Hf, Gf, ub)
        g = lowrank.add(g, -div_b)
    return f[0], f[1], lowrank.round(g, 1e-14)
