"""
Pricing one unit
================

The pricing problem asks for the plan of least reduced cost under given
dual prices.  The dynamic program walks a small graph of dwell states; here
it is compared with full enumeration and with the single-unit ILP.
"""

import time

import numpy as np

from ucpd import build_subproblem_ilp, enumerate_plans, price_unit_dp, price_unit_enum, solve_ilp
from ucpd.model import generate_instance
from ucpd.subproblem import build_state_graph, price_unit_dp_k, random_duals

inst = generate_instance(seed=3, n_units=3, horizon=9, points_per_unit=3)
rng = np.random.default_rng(1)
unit = inst.units[1]
duals = random_duals(unit, inst.horizon, rng)

g = build_state_graph(unit)
print(f"{len(g.states)} dwell states, {sum(1 for _ in enumerate_plans(unit, 9))} feasible plans")

t = time.perf_counter()
plan, rc = price_unit_dp(unit, duals)
print("dp  ", plan.points, round(rc, 6), f"{1e3 * (time.perf_counter() - t):.2f} ms")

t = time.perf_counter()
plan_e, rc_e = price_unit_enum(unit, duals, 9)
print("enum", plan_e.points, round(rc_e, 6), f"{1e3 * (time.perf_counter() - t):.2f} ms")

res = solve_ilp(build_subproblem_ilp(unit, duals))
print("ilp ", round(res.objective, 6), "nodes", res.nodes)

# several good columns per call
for p, v in price_unit_dp_k(unit, duals, 4):
    print("   ", p.points, round(v, 3))
