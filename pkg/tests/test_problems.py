import numpy as np
import pytest

from lrstokes import lowrank
from lrstokes.operators import apply_B, apply_BT, apply_laplace
from lrstokes.problems import (
    cavity_problem,
    pressure_error,
    sine_pressure,
    sine_problem,
    sine_velocity,
)


def test_sine_fields_rank_one():
    prob = sine_problem(32)
    assert prob.f_x.rank == prob.f_y.rank == prob.g.rank == 1
    assert prob.p_scale == 2.0


@pytest.mark.parametrize("n", [64, 128, 256])
def test_sine_consistency(n):
    """The exact solution satisfies the discrete equations up to O(h^2)."""
    prob = sine_problem(n)
    u, v = sine_velocity(n)
    p = sine_pressure(n) / prob.p_scale
    res = []
    for comp, vel, f in (("x", u, prob.f_x), ("y", v, prob.f_y)):
        r = lowrank.add(lowrank.add(apply_laplace(vel), apply_B(comp, p)), -f)
        res.append(lowrank.frob_norm(r) / lowrank.frob_norm(f))
    div = lowrank.add(lowrank.add(apply_BT("x", u), apply_BT("y", v)), -prob.g)
    res.append(lowrank.frob_norm(div) / lowrank.frob_norm(prob.g))
    # second order: each residual is a small multiple of h^2
    assert max(res) <= 20.0 / n**2


def test_pressure_error_mixed_inputs():
    n = 16
    p = sine_pressure(n)
    q = p + 1e-3 * lowrank.outer(np.ones(n), np.ones(n))  # kernel shift only
    assert pressure_error(q, p) <= 1e-13
    assert pressure_error(q.to_dense(), p) <= 1e-13
    assert pressure_error(2 * p, p.to_dense()) == pytest.approx(1.0)


def test_cavity_rhs():
    prob = cavity_problem(16)
    assert prob.f_y.rank == 0
    assert prob.f_x.rank <= 1 and prob.g.rank <= 1
    assert prob.bc is not None
