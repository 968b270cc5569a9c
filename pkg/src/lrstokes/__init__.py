"""Low-rank Poisson and Stokes solvers on semi-staggered grids.

The Poisson solver works in sine-transform space and rebuilds the quotient
of the right-hand side by the Laplacian symbol with adaptive cross
approximation. The Stokes solver wraps it in an Uzawa iteration with
inexact GMRES. A dense reference implementation is included for checking.
"""

from .lowrank import LowRankMatrix, TruncationPolicy
from .operators import Grid2D
from .poisson import solve_poisson_cross
from .problems import cavity_problem, sine_problem
from .refsolver import dense_stokes
from .stokes import GmresConfig, StokesProblem, uzawa_solve

__version__ = "0.1.0"

__all__ = [
    "GmresConfig",
    "Grid2D",
    "LowRankMatrix",
    "StokesProblem",
    "TruncationPolicy",
    "cavity_problem",
    "dense_stokes",
    "sine_problem",
    "solve_poisson_cross",
    "uzawa_solve",
]
