"""Low-rank arithmetic: sums grow the rank, rounding brings it back.

Adds a few smooth separable fields, shows the formal rank of the sum, then
rounds it at several tolerances and compares the error against the SVD tail.
"""
import math

import numpy as np

from lrstokes import lowrank

n = 2000
x = np.linspace(0, 1, n)

# exp(-(x-y)^2) written as a sum of 12 separable terms (Taylor in x*y)
terms = []
for k in range(12):
    c = 2.0**k / math.factorial(k)
    terms.append(lowrank.outer(c * np.exp(-x**2) * x**k, np.exp(-x**2) * x**k))
A = terms[0]
for t in terms[1:]:
    A = lowrank.add(A, t)
print(f"formal rank of the sum: {A.rank}")

dense = A.to_dense()
s = np.linalg.svd(dense, compute_uv=False)
for eps in (1e-3, 1e-6, 1e-9, 1e-12):
    R = lowrank.round(A, eps)
    err = np.linalg.norm(R.to_dense() - dense) / np.linalg.norm(dense)
    svd_rank = int(np.sum(np.sqrt(np.cumsum(s[::-1] ** 2))[::-1] > eps * np.linalg.norm(s)))
    print(f"eps={eps:.0e}: rank {R.rank:2d} (SVD eps-rank {svd_rank:2d}), rel. error {err:.1e}")

# an exact cancellation rounds to rank zero
print("rank of round(A - A):", lowrank.round(lowrank.add(A, -A), 1e-12).rank)
