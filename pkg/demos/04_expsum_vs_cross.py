"""Two ways to divide by a sum-separable spectrum.

Exponential sums approximate 1/x on the spectrum interval by a short sum of
exponentials, which turns the division into Hadamard products with rank-1
matrices followed by rounding. Cross approximation samples the quotient
directly. Both are run on the same frequency-space input.
"""
from lrstokes.operators import spectrum
from lrstokes.poisson import bench_inverse, build_expsum, sum_spectrum_bounds

a, b = sum_spectrum_bounds(spectrum(1024).mu)
q = build_expsum(a, b, 1e-7)
print(f"spectrum interval [{a:.3g}, {b:.3g}] needs {q.nterms} exponentials for 1e-7")

for n in (256, 1024, 2048):
    r = bench_inverse(n, 30, 1e-7)
    print(f"n={n:4d}: cross {r.time_cross:.4f}s (rank {r.rank_cross}, err {r.err_cross:.1e}); "
          f"expsum {r.time_expsum:.3f}s (rank {r.rank_expsum}, err {r.err_expsum:.1e}); "
          f"speedup {r.speedup:.0f}x")
