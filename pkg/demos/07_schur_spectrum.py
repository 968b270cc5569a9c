"""Spectrum of the pressure Schur complement on small grids.

Two zero eigenvalues (constant and checkerboard pressure), (n-2)^2 eigenvalues
exactly one, and the rest in (0, 1) with a lower bound that does not
degenerate as the grid is refined -- which is why Uzawa iteration counts do
not grow with n.
"""
import numpy as np

from lrstokes.refsolver import schur_spectrum

for n in (8, 12, 16, 20, 24):
    ev = schur_spectrum(n)
    zero = np.sum(np.abs(ev) <= 1e-10)
    one = np.sum(np.abs(ev - 1) <= 1e-10)
    print(f"n={n:2d}: {zero} zero, {one:3d} unit (= (n-2)^2 = {(n - 2) ** 2:3d}), "
          f"smallest nonzero {ev[ev > 1e-10].min():.4f}")
