"""Model problems: the analytic sine test and the lid-driven cavity.

The operators of :mod:`lrstokes.operators` carry the factors ``1/(4h)`` and
``1/(16h^2)``, so they approximate ``grad/2`` and ``-lap/4``. A continuous
problem ``-lap u + grad p = f``, ``-div u = g`` therefore maps to the
discrete system with right-hand sides ``f/4`` and ``g/2`` and pressure
unknown ``p/2``; ``StokesProblem.p_scale = 2`` undoes the last step.
"""

from __future__ import annotations

import numpy as np

from . import lowrank
from .lowrank import LowRankMatrix
from .operators import Grid2D, boundary_corrections, lid_driven_cavity
from .refsolver import dense_deflate
from .stokes import StokesProblem, deflate

__all__ = ["cavity_problem", "pressure_error", "sine_pressure", "sine_problem", "sine_velocity"]

TWO_PI = 2.0 * np.pi
P_SCALE = 2.0


def sine_problem(n: int) -> StokesProblem:
    """Forcing ``f = (sin 2 pi y, sin 2 pi x)``, ``g = -sin 2 pi x sin 2 pi y / pi``.

    Samples f at the interior vertices and g at the cell centers. Every
    field is rank 1.
    """
    grid = Grid2D(n)
    xn = grid.nodes
    xc = grid.centers
    ones = np.ones(n - 1)
    f_x = lowrank.outer(ones, np.sin(TWO_PI * xn) / 4.0)
    f_y = lowrank.outer(np.sin(TWO_PI * xn) / 4.0, ones)
    g = lowrank.outer(-np.sin(TWO_PI * xc) / (2.0 * np.pi), np.sin(TWO_PI * xc))
    return StokesProblem(grid=grid, f_x=f_x, f_y=f_y, g=g, p_scale=P_SCALE)


def sine_pressure(n: int) -> LowRankMatrix:
    """Exact pressure ``sin 2 pi x sin 2 pi y / pi`` at the cell centers."""
    xc = Grid2D(n).centers
    s = np.sin(TWO_PI * xc)
    return lowrank.outer(s / np.pi, s)


def sine_velocity(n: int) -> tuple[LowRankMatrix, LowRankMatrix]:
    """Exact velocity of the sine test at the interior vertices.

    ``u = (1 - cos 2 pi x) sin 2 pi y / (4 pi^2)`` and
    ``v = sin 2 pi x (1 - cos 2 pi y) / (4 pi^2)``; this pair satisfies both
    equations with the forcing of :func:`sine_problem`.
    """
    xn = Grid2D(n).nodes
    c = 1.0 / (4 * np.pi**2)
    u = lowrank.outer(c * (1 - np.cos(TWO_PI * xn)), np.sin(TWO_PI * xn))
    v = lowrank.outer(c * np.sin(TWO_PI * xn), 1 - np.cos(TWO_PI * xn))
    return u, v


def cavity_problem(n: int, speed: float = 1.0) -> StokesProblem:
    """Lid-driven cavity: no forcing, lid velocity folded into the right-hand sides."""
    bc = lid_driven_cavity(n, speed)
    f_x, f_y, g = boundary_corrections(bc)
    return StokesProblem(grid=Grid2D(n), f_x=f_x, f_y=f_y, g=g, bc=bc, p_scale=P_SCALE)


def pressure_error(p, p_ref) -> float:
    """Relative Frobenius distance after removing kernel modes from both.

    Low-rank inputs stay low-rank; if either side is dense, both are compared
    densely.
    """
    if isinstance(p, LowRankMatrix) and isinstance(p_ref, LowRankMatrix):
        a, b = deflate(p), deflate(p_ref)
        return lowrank.frob_norm(lowrank.add(a, -b)) / lowrank.frob_norm(b)
    a, b = (x.to_dense() if isinstance(x, LowRankMatrix) else np.asarray(x) for x in (p, p_ref))
    a, b = dense_deflate(a), dense_deflate(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
