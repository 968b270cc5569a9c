"""Stokes sine test: low-rank Uzawa solver against the dense reference.

The pressure error against the analytic solution drops by 4 per refinement
(second order). Low-rank and dense paths give the same error; the low-rank
solver keeps scaling once the dense one is out of reach.
"""
from lrstokes.problems import pressure_error, sine_pressure, sine_problem
from lrstokes.refsolver import dense_stokes
from lrstokes.stokes import GmresConfig, uzawa_solve

cfg = GmresConfig(tol=5e-9, base_eps=5e-9)
prev = None
print("    n | LR time | LR err   | full time | full err | ratio | max rank")
for n in (64, 128, 256, 512, 1024, 2048):
    prob = sine_problem(n)
    exact = sine_pressure(n)
    p, _, _, rep = uzawa_solve(prob, cfg)
    err = pressure_error(p * prob.p_scale, exact)
    if n <= 512:
        pd, _, repd = dense_stokes(prob, cfg)
        full = f"{repd.wall_time:8.2f}s | {pressure_error(pd * prob.p_scale, exact):.2e}"
    else:
        full = "       - |    -    "
    ratio = f"{prev / err:5.2f}" if prev else "    -"
    print(f"{n:5d} | {rep.wall_time:6.2f}s | {err:.2e} | {full} | {ratio} | {rep.max_rank}")
    prev = err
