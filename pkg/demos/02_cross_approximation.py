"""Cross approximation of a matrix known only through its entries.

A 4000 x 4000 Cauchy-like matrix is approximated from a few rows and
columns; the number of entries touched is tiny compared with n^2.
"""
import numpy as np

from lrstokes.cross import CrossConfig, ElementEvaluator, aca_cross, maxvol

n = 4000
x = np.linspace(1.0, 2.0, n)
y = np.linspace(3.0, 5.0, n)
f = ElementEvaluator(n, n, lambda I, J: 1.0 / (x[I] + y[J]))

for eps in (1e-4, 1e-8, 1e-12):
    A, info = aca_cross(f, CrossConfig(eps_rel=eps), return_info=True)
    # check on a random 300 x 300 block
    rng = np.random.default_rng(0)
    I, J = np.sort(rng.choice(n, 300, replace=False)), np.sort(rng.choice(n, 300, replace=False))
    block = f(I[:, None], J[None, :])
    approx = A.U[I] @ A.V[J].T
    err = np.linalg.norm(approx - block) / np.linalg.norm(block)
    print(f"eps={eps:.0e}: rank {A.rank:2d}, {info.evaluations} entries "
          f"({info.evaluations / n**2:.2%} of the matrix), block error {err:.1e}")

# maxvol picks rows whose submatrix dominates all others
B = np.random.default_rng(1).standard_normal((500, 6))
rows = maxvol(B)
print("maxvol rows:", rows, " max |B inv(B[rows])| =", f"{np.abs(B @ np.linalg.inv(B[rows])).max():.3f}")
