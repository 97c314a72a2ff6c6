import numpy as np
import pytest
from scipy.optimize import linprog

import oracles
from ucpd.colgen import (CONVERGED, INFEASIBLE, CgConfig, CgError, Column, build_rmp, cg_solve,
                         compare_bounds, extract_duals, initialize_columns,
                         integer_rmp_heuristic, reduced_cost, write_log_csv)
from ucpd.compact import build_compact
from ucpd.lp import solve_lp
from ucpd.model import (InitialCondition, Instance, OperatingPoint, Plan, Unit, generate_instance,
                        plan_vectors, validate_plan)
from ucpd.subproblem import DualPrices, plan_reduced_cost


def full_master_value(instance):
    """LP over every feasible plan of every unit, built by hand and solved with HiGHS."""
    T = instance.horizon
    cols, costs, owner = [], [], []
    for k, u in enumerate(instance.units):
        for pts in oracles.all_plans(u, T):
            cols.append(oracles.vectors(u, pts).ravel())
            costs.append(oracles.cost(u, pts))
            owner.append(k)
    V = np.array(cols).T
    conv = np.zeros((len(instance.units), len(cols)))
    conv[owner, np.arange(len(cols))] = 1.0
    demand = np.array([instance.demand_power, instance.demand_r1, instance.demand_r2]).ravel()
    res = linprog(costs, A_ub=-V, b_ub=-demand, A_eq=conv, b_eq=np.ones(len(instance.units)),
                  bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


@pytest.mark.parametrize("seed", [1, 2, 5])
def test_bound_equals_explicit_master(seed):
    inst = generate_instance(seed, n_units=2, horizon=6, points_per_unit=2)
    res = cg_solve(inst)
    assert res.status == CONVERGED
    assert res.lower_bound == pytest.approx(full_master_value(inst), rel=1e-8)
    assert res.lagrangian_bound <= res.rmp_value + 1e-6


def test_bound_dominates_compact_lp_and_is_below_integer_optimum():
    inst = generate_instance(4, n_units=3, horizon=6, points_per_unit=2)
    model, _ = build_compact(inst, integer=False)
    lp = solve_lp(model).objective
    res = cg_solve(inst)
    assert lp <= res.lower_bound + 1e-6 * (1 + abs(lp))
    assert res.lower_bound <= oracles.fleet_optimum(inst) + 1e-6


def test_pool_columns_are_valid_plans():
    inst = generate_instance(6, n_units=3, horizon=8, points_per_unit=3)
    res = cg_solve(inst)
    units = {u.id: u for u in inst.units}
    keys = set()
    for c in res.pool:
        assert validate_plan(units[c.unit_id], c.plan, inst.horizon).ok
        assert c.key not in keys
        keys.add(c.key)


def test_converged_duals_price_out():
    inst = generate_instance(9, n_units=3, horizon=8, points_per_unit=2)
    res = cg_solve(inst)
    for c in res.pool:
        assert reduced_cost(c, res.duals) >= -1e-6 * max(1.0, max(p.cost for p in res.pool))


def test_reduced_cost_agrees_with_plan_form():
    inst = generate_instance(3, n_units=2, horizon=5, points_per_unit=3)
    rng = np.random.default_rng(0)
    for u in inst.units:
        d = DualPrices(rng.uniform(0, 50, 5), rng.uniform(0, 5, 5), rng.uniform(0, 5, 5),
                       {u.id: 12.5})
        for c in initialize_columns(inst):
            if c.unit_id == u.id:
                assert reduced_cost(c, d) == pytest.approx(plan_reduced_cost(u, c.plan, d))


def test_purge_does_not_change_bound():
    inst = generate_instance(12, n_units=4, horizon=12, points_per_unit=3)
    plain = cg_solve(inst)
    purged = cg_solve(inst, CgConfig(purge=True, purge_window=2))
    assert purged.status == CONVERGED
    assert purged.lower_bound == pytest.approx(plain.lower_bound, rel=1e-7)
    assert sum(r.columns_purged for r in purged.log) > 0


@pytest.mark.parametrize("cfg", [CgConfig(columns_per_unit=3), CgConfig(smoothing=0.0),
                                 CgConfig(init_strategy="heuristic"), CgConfig(threads=3),
                                 CgConfig(lp_method="highs")])
def test_variants_reach_same_bound(cfg):
    inst = generate_instance(21, n_units=4, horizon=10, points_per_unit=3)
    base = cg_solve(inst)
    res = cg_solve(inst, cfg)
    assert res.status == CONVERGED
    assert res.lower_bound == pytest.approx(base.lower_bound, rel=1e-7)


def test_deterministic_logs(tmp_path):
    inst = generate_instance(33, n_units=4, horizon=12, points_per_unit=3)
    logs = []
    for k, threads in enumerate((1, 1, 2)):
        res = cg_solve(inst, CgConfig(threads=threads))
        path = tmp_path / f"log{k}.csv"
        write_log_csv(res.log, path, timing=False)
        logs.append(path.read_bytes())
    assert logs[0] == logs[1] == logs[2]
    assert logs[0].startswith(b"iteration,rmp_value,min_rc")


def test_rmp_values_never_increase():
    inst = generate_instance(8, n_units=5, horizon=12, points_per_unit=3)
    res = cg_solve(inst)
    vals = [r.rmp_value for r in res.log]
    assert all(b <= a + 1e-7 * (1 + abs(a)) for a, b in zip(vals, vals[1:]))
    assert 0.0 <= res.mean_dual_zero_fraction() <= 1.0


def test_infeasible_instance():
    u = Unit("a", (OperatingPoint(5.0),), init=InitialCondition(0, 3, 1, 3))
    inst = Instance((u,), 3, (9.0, 9.0, 9.0), (0.0,) * 3, (0.0,) * 3)
    assert cg_solve(inst).status == INFEASIBLE
    assert compare_bounds(inst)["status"] == "infeasible"


def test_zero_demand_bounds_are_zero():
    u = Unit("a", (OperatingPoint(5.0), OperatingPoint(9.0)), 2, 2, 4.0, 1.0, 1.0,
             InitialCondition(0, 3, 1, 3))
    inst = Instance((u, Unit("b", u.points, 1, 1, 1.0, 1.0, 1.0)), 4, (0.0,) * 4, (0.0,) * 4,
                    (0.0,) * 4)
    rep = compare_bounds(inst)
    assert rep["compact_lp"] == pytest.approx(0.0, abs=1e-9)
    assert rep["cg_bound"] == pytest.approx(0.0, abs=1e-9)
    assert rep["compact_ilp"] == pytest.approx(0.0, abs=1e-9)


def test_extract_duals_sign_handling():
    inst = generate_instance(1, n_units=2, horizon=2)
    y = np.array([1.0, 0.0, 0.0, 2.0, -1e-9, 0.0, -3.0, 4.0])
    d = extract_duals(inst, y)
    assert list(d.pi_p) == [1.0, 0.0] and d.pi_r2[0] == 0.0
    assert d.sigma_of(inst.units[0].id) == 3.0 and d.sigma_of(inst.units[1].id) == -4.0
    y[0] = -1.0
    with pytest.raises(CgError):
        extract_duals(inst, y)


def test_rmp_layout():
    inst = generate_instance(2, n_units=2, horizon=3, points_per_unit=2)
    pool = initialize_columns(inst)
    model = build_rmp(inst, pool)
    assert model.n_rows == 3 * 3 + 2 and model.n_cols == len(pool)
    col = pool[0]
    dense = model.A.toarray()
    np.testing.assert_allclose(dense[:3, 0], col.power)
    assert dense[9:, 0].sum() == 1.0


def test_heuristic_gives_feasible_upper_bound():
    inst = generate_instance(14, n_units=3, horizon=8, points_per_unit=2)
    res = cg_solve(inst)
    heur = integer_rmp_heuristic(res.pool, inst)
    assert heur.plans is not None and len(heur.plans) == 3
    out = np.zeros((3, inst.horizon))
    for u, p in zip(inst.units, heur.plans):
        assert p.unit_id == u.id
        out += np.array(plan_vectors(u, p))
    assert np.all(out >= inst.demands() - 1e-9)
    assert heur.upper_bound >= res.lower_bound - 1e-6
    assert heur.upper_bound >= oracles.fleet_optimum(inst) - 1e-6


def test_column_from_plan():
    u = Unit("a", (OperatingPoint(5.0, 1.0, 0.5),), cost_startup=3.0, cost_fixed=1.0,
             cost_prop=2.0)
    c = Column.from_plan(u, Plan("a", (0, 1, 1)))
    assert c.cost == pytest.approx(3.0 + 2 * 11.0)
    assert list(c.power) == [0.0, 5.0, 5.0] and c.key == ("a", (0, 1, 1))
