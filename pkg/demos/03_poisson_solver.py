"""Fast Poisson solve in low-rank format.

The right-hand side is moved to frequency space by the sine transform, the
division by the Laplacian symbol is done by cross approximation, and the
result is transformed back. The residual is certified in low-rank arithmetic.
"""
import time

import numpy as np

from lrstokes import lowrank
from lrstokes.operators import apply_laplace
from lrstokes.poisson import solve_poisson_cross

for n in (256, 1024, 4096, 16384):
    x = np.arange(1, n) / n
    # a smooth rank-2 source
    g = lowrank.add(lowrank.outer(np.sin(np.pi * x) * x, np.exp(x)),
                    lowrank.outer(np.ones(n - 1), x * (1 - x)))
    t = time.perf_counter()
    f, st = solve_poisson_cross(g, 1e-9)
    t = time.perf_counter() - t
    res = lowrank.frob_norm(lowrank.add(apply_laplace(f), -g)) / lowrank.frob_norm(g)
    print(f"n={n:5d}: {t:.3f}s, ranks in/freq/out {st.rank_in}/{st.rank_freq}/{st.rank_out}, "
          f"residual {res:.1e}")
