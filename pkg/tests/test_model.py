import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ucpd.compact import build_compact, encode_plans
from ucpd.lp import EQ, GE, LE
from ucpd.model import (InitialCondition, Instance, InstanceError, OperatingPoint, Plan,
                        PlanInputError, Unit, fleet_summary, generate_instance, instance_from_dict,
                        instance_to_dict, max_plan, plan_cost, plan_vectors, read_instance,
                        validate_plan, write_instance)


@st.composite
def units(draw, max_points=3, max_dwell=4):
    n = draw(st.integers(1, max_points))
    pts = tuple(
        OperatingPoint(float(draw(st.integers(1, 50)) + 50 * k), float(draw(st.integers(0, 5))),
                       float(draw(st.integers(0, 5))), draw(st.integers(1, max_dwell)),
                       draw(st.integers(1, max_dwell)))
        for k in range(n))
    p0 = draw(st.integers(0, n))
    dwell = draw(st.integers(1, 6))
    init = InitialCondition(p0, dwell, dwell + draw(st.integers(0, 4)), draw(st.integers(1, 6)))
    return Unit("g", pts, draw(st.integers(1, max_dwell)), draw(st.integers(1, max_dwell)),
                float(draw(st.integers(0, 30))), float(draw(st.integers(0, 20))),
                float(draw(st.integers(0, 3))), init)


@st.composite
def unit_and_plan(draw, horizon=None):
    u = draw(units())
    T = horizon or draw(st.integers(1, 8))
    # random walk keeps most plans near-feasible so both verdicts are exercised
    pts, cur = [], u.init.point
    for _ in range(T):
        cur = min(u.n_points, max(0, cur + draw(st.sampled_from((-1, 0, 0, 1)))))
        pts.append(cur)
    return u, tuple(pts)


def simple_unit(**kw):
    args = dict(points=(OperatingPoint(5.0, 1.0, 2.0),), min_up=1, min_down=1,
                cost_startup=0.0, cost_fixed=10.0, cost_prop=2.0,
                init=InitialCondition(0, 5, 1, 5))
    args.update(kw)
    return Unit("a", **args)


def test_all_offline_ok():
    u = simple_unit()
    assert validate_plan(u, Plan("a", (0, 0, 0)), 3).ok


def test_min_stop_up_violation():
    u = Unit("a", (OperatingPoint(10.0, min_dwell_up=3), OperatingPoint(20.0)),
             init=InitialCondition(1, 1, 1))
    rep = validate_plan(u, (1, 2, 2, 2), 4)
    assert [(v.period, v.constraint) for v in rep.violations] == [(2, "min_stop_up")]
    assert validate_plan(u, (1, 1, 2, 2), 4).ok


def test_plan_input_errors():
    u = simple_unit()
    with pytest.raises(PlanInputError):
        validate_plan(u, (0, 0), 3)
    with pytest.raises(PlanInputError):
        validate_plan(u, (0, 2, 0), 3)


def test_plan_cost_examples():
    u = simple_unit(init=InitialCondition(1, 1, 1))
    assert plan_cost(u, (1, 1)) == pytest.approx(40.0)
    assert plan_cost(simple_unit(), (0, 0, 0)) == 0.0
    u2 = simple_unit(cost_startup=7.0)
    assert plan_cost(u2, (1, 0, 1)) == pytest.approx(2 * 7.0 + 2 * 20.0)


def test_plan_vectors_constant_and_offline():
    u = Unit("a", (OperatingPoint(5.0, 1.0, 2.0), OperatingPoint(9.0, 3.0, 4.0)))
    p, r1, r2 = plan_vectors(u, (0, 0, 0))
    assert not p.any() and not r1.any() and not r2.any()
    p, r1, r2 = plan_vectors(u, (2, 2))
    assert list(p) == [9.0, 9.0] and list(r1) == [3.0, 3.0] and list(r2) == [4.0, 4.0]


def test_invariant_errors():
    with pytest.raises(InstanceError):
        OperatingPoint(0.0)
    with pytest.raises(InstanceError):
        OperatingPoint(1.0, min_dwell_up=0)
    with pytest.raises(InstanceError):
        InitialCondition(0, 0)
    with pytest.raises(InstanceError):
        Unit("a", (OperatingPoint(1.0),), init=InitialCondition(2, 1, 1))
    with pytest.raises(InstanceError):
        Instance((simple_unit(),), 2, (1.0,), (0.0, 0.0), (0.0, 0.0))
    with pytest.raises(InstanceError):
        Instance((simple_unit(),), 1, (-1.0,), (0.0,), (0.0,))


@settings(max_examples=300, deadline=None)
@given(unit_and_plan())
def test_validate_matches_literal_rules(case):
    u, pts = case
    got = sorted((v.period, v.constraint) for v in validate_plan(u, pts, len(pts)).violations)
    assert got == sorted(oracles.violations(u, pts))


@settings(max_examples=150, deadline=None)
@given(unit_and_plan())
def test_validate_matches_compact_rows(case):
    """A plan is valid exactly when its binary encoding satisfies every compact row."""
    u, pts = case
    T = len(pts)
    inst = Instance((u,), T, (0.0,) * T, (0.0,) * T, (0.0,) * T)
    model, index = build_compact(inst)
    x = encode_plans(index, inst, [Plan(u.id, pts)])
    ax = model.A @ x
    tol = 1e-9
    ok_rows = np.where(model.sense == LE, ax <= model.rhs + tol,
                       np.where(model.sense == GE, ax >= model.rhs - tol,
                                np.abs(ax - model.rhs) <= tol))
    assert model.sense[0] in (LE, GE, EQ)
    assert bool(ok_rows.all()) == validate_plan(u, pts, T).ok
    if ok_rows.all():
        assert float(model.c @ x) + model.offset == pytest.approx(oracles.cost(u, pts))


@settings(max_examples=200, deadline=None)
@given(unit_and_plan())
def test_plan_cost_and_vectors_match_oracle(case):
    u, pts = case
    assert plan_cost(u, pts) == pytest.approx(oracles.cost(u, pts))
    np.testing.assert_allclose(np.array(plan_vectors(u, pts)), oracles.vectors(u, pts))


@settings(max_examples=100, deadline=None)
@given(unit_and_plan(), st.integers(1, 6))
def test_plan_cost_additive_over_offline_gap(case, gap):
    u, pts = case
    u = Unit(u.id, u.points, u.min_up, 1, u.cost_startup, u.cost_fixed, u.cost_prop,
             InitialCondition(0, 1, 1, 1))
    first = tuple(pts)
    joined = first + (0,) * gap + first
    total = plan_cost(u, joined)
    assert total == pytest.approx(2 * plan_cost(u, first))


def test_round_trip(tmp_path):
    inst = generate_instance(7, n_units=3, horizon=6, points_per_unit=2)
    path = tmp_path / "i.json"
    write_instance(inst, path)
    again = read_instance(path)
    assert again == inst
    write_instance(again, tmp_path / "j.json")
    assert (tmp_path / "j.json").read_bytes() == path.read_bytes()


def test_minimal_file_schema(tmp_path):
    doc = {"horizon": 2, "demand_power": [1, 2], "demand_r1": [0, 0], "demand_r2": [0, 0],
           "units": [{"id": "a", "points": [{"power": 5, "r1": 0, "r2": 0, "dwell_up": 1,
                                             "dwell_down": 1}],
                      "min_up": 1, "min_down": 1, "cost_startup": 3, "cost_fixed": 1,
                      "cost_prop": 2,
                      "init": {"point": 0, "dwell": 1, "since_startup": 1,
                               "offline_elapsed": 1}}]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    inst = read_instance(path)
    assert inst.horizon == 2 and inst.units[0].point(1).power == 5.0
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_malformed_file_reports_context(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"horizon": 2,\n "units": [}')
    with pytest.raises(InstanceError, match="line 2"):
        read_instance(path)
    path.write_text(json.dumps({"horizon": 1, "demand_power": [1], "demand_r1": [0],
                                "demand_r2": [0], "units": [{"id": "a"}]}))
    with pytest.raises(InstanceError, match=r"units\[0\]"):
        read_instance(path)


def test_generator_deterministic_and_feasible():
    a = generate_instance(1, n_units=6, horizon=24, points_per_unit=3)
    b = generate_instance(1, n_units=6, horizon=24, points_per_unit=3)
    assert a == b
    assert generate_instance(2, n_units=6, horizon=24) != a
    for seed in range(10):
        inst = generate_instance(seed, n_units=4, horizon=12, points_per_unit=1 + seed % 4)
        cover = sum(np.array(plan_vectors(u, max_plan(u, inst.horizon))) for u in inst.units)
        assert np.all(cover >= inst.demands() - 1e-9)
        assert np.all(cover[0] >= 1.1 * np.array(inst.demand_power) - 1e-6)
        assert fleet_summary(inst)["min_slack"] >= 0.1 - 1e-6


def test_generator_full_scale_shape():
    inst = generate_instance(1, n_units=80, horizon=96, points_per_unit=3)
    assert len(inst.units) == 80 and inst.horizon == 96
    assert all(u.n_points == 3 for u in inst.units)


def test_generator_rejects_bad_parameters():
    with pytest.raises(InstanceError):
        generate_instance(1, n_units=0)
    with pytest.raises(InstanceError):
        generate_instance(1, horizon=0)
