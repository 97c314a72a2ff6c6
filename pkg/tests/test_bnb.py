import itertools
import math

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

import oracles
from ucpd.bnb import NODE_LIMIT, OPTIMAL, TIME_LIMIT, solve_ilp
from ucpd.compact import build_compact
from ucpd.lp import GE, INFEASIBLE, LE, ModelBuilder, SolverError
from ucpd.model import generate_instance


def knapsack(values, weights, cap):
    b = ModelBuilder()
    xs = [b.add_var(-v, 0, 1, True) for v in values]
    b.add_row({x: w for x, w in zip(xs, weights)}, LE, cap)
    return b.build()


def test_knapsack_matches_enumeration():
    values, weights, cap = [10, 13, 7, 8], [5, 7, 4, 3], 11
    best = max(sum(v for v, s in zip(values, pick) if s)
               for pick in itertools.product((0, 1), repeat=4)
               if sum(w for w, s in zip(weights, pick) if s) <= cap)
    res = solve_ilp(knapsack(values, weights, cap))
    assert res.status == OPTIMAL
    assert -res.objective == pytest.approx(best)
    assert res.bound == pytest.approx(res.objective)
    assert res.root_bound <= res.objective + 1e-9


def test_pure_lp_needs_one_node():
    b = ModelBuilder()
    x = b.add_var(-1, 0, 2.5)
    y = b.add_var(-1, 0, 1.5)
    b.add_row({x: 1, y: 1}, LE, 3)
    res = solve_ilp(b.build())
    assert res.nodes == 1 and res.objective == pytest.approx(-3.0)


def test_infeasible_integer_program():
    b = ModelBuilder()
    x = b.add_var(0, 0, 10, True)
    b.add_row({x: 2}, GE, 3)
    b.add_row({x: 2}, LE, 3.5)
    assert solve_ilp(b.build()).status == INFEASIBLE


def test_unbounded_root_raises():
    b = ModelBuilder()
    b.add_var(-1, 0, np.inf, True)
    with pytest.raises(SolverError):
        solve_ilp(b.build())


@pytest.mark.parametrize("seed", range(8))
def test_random_integer_programs_match_scipy(seed):
    rng = np.random.default_rng(seed)
    n, m = 6, 4
    A = rng.integers(-3, 6, size=(m, n)).astype(float)
    rhs = rng.integers(5, 15, m).astype(float)
    c = -rng.integers(1, 9, n).astype(float)
    b = ModelBuilder()
    xs = [b.add_var(c[j], 0, 4, j % 2 == 0) for j in range(n)]
    for r in range(m):
        b.add_row({xs[j]: A[r, j] for j in range(n)}, LE, rhs[r])
    ours = solve_ilp(b.build())
    ref = milp(c, constraints=LinearConstraint(A, -np.inf, rhs),
               integrality=np.array([j % 2 == 0 for j in range(n)], int), bounds=Bounds(0, 4))
    assert ours.objective == pytest.approx(ref.fun, rel=1e-9, abs=1e-9)


def test_limits_report_status_and_valid_bound():
    rng = np.random.default_rng(7)
    values = rng.integers(20, 40, 25)
    weights = rng.integers(20, 40, 25)
    model = knapsack(values, weights, int(weights.sum() / 2) + 0.5)
    res = solve_ilp(model, node_limit=5)
    assert res.status == NODE_LIMIT
    full = solve_ilp(model)
    assert res.bound <= full.objective + 1e-9
    if res.x is not None:
        assert res.objective >= full.objective - 1e-9
    assert solve_ilp(model, time_limit=0.0).status == TIME_LIMIT
    assert math.isfinite(full.gap()) and full.gap() <= 1e-9


@pytest.mark.parametrize("seed", [3, 8])
def test_compact_ilp_matches_plan_enumeration(seed):
    inst = generate_instance(seed, n_units=2, horizon=6, points_per_unit=2)
    model, _ = build_compact(inst)
    assert solve_ilp(model).objective == pytest.approx(oracles.fleet_optimum(inst), rel=1e-9)
