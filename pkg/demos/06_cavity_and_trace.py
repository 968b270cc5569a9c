"""Lid-driven cavity and the GMRES trace.

Boundary data for a moving lid enters through low-rank corrections of the
right-hand sides. The low-rank pressure matches the dense one to well below
the truncation level. The per-iteration trace shows the residual falling and
the per-matvec truncation tolerance being relaxed as it does.
"""
from lrstokes.problems import cavity_problem, pressure_error
from lrstokes.refsolver import dense_stokes
from lrstokes.stokes import GmresConfig, uzawa_solve

cfg = GmresConfig(tol=5e-9, base_eps=5e-9)
prob = cavity_problem(256)
p, ux, uy, rep = uzawa_solve(prob, cfg)
pd, _, _ = dense_stokes(prob, cfg)
print(f"cavity n=256: {rep.iterations} iterations, LR vs full pressure difference "
      f"{pressure_error(p, pd):.1e}, velocity ranks {ux.rank}/{uy.rank}")

print("\niter  residual   matvec eps  Krylov rank")
for row in rep.trace_rows():
    print(f"{row['iter']:4d}  {row['residual']:.2e}   {row['matvec_eps']:.1e}     {row['krylov_rank']}")
