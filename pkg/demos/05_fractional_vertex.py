"""
A fractional single-unit vertex
===============================

One unit, four periods, two operating points.  Under these prices the LP
relaxation of the single-unit model is cheaper than every feasible plan,
so its polytope is not integral, and the column generation bound can sit
strictly above the compact LP bound.
"""

import numpy as np

from ucpd import build_subproblem_ilp, solve_ilp, solve_lp
from ucpd.model import InitialCondition, OperatingPoint, Unit, generate_instance
from ucpd.subproblem import DualPrices, check_conjecture, compare_lp_ilp, price_unit_dp

unit = Unit("u", (OperatingPoint(100.0, 0, 0, 1, 1), OperatingPoint(200.0, 0, 0, 3, 1)),
            min_up=2, min_down=5, cost_startup=20.0, cost_fixed=10.0, cost_prop=1.0,
            init=InitialCondition(0, 9, 1, 9))
duals = DualPrices(np.array([0.0, 0.0, 2.0, 0.0]), np.zeros(4), np.zeros(4))

model = build_subproblem_ilp(unit, duals)
lp = solve_lp(model, method="simplex")
print("LP ", lp.objective)
print("ILP", solve_ilp(model).objective, " DP", price_unit_dp(unit, duals)[1])
frac = np.flatnonzero(np.abs(lp.x - np.round(lp.x)) > 1e-6)
print("fractional:", {model.col_names[j]: float(lp.x[j]) for j in frac})

# dropping min up to 1 closes the gap
short = Unit("u", unit.points, 1, 5, 20.0, 10.0, 1.0, unit.init)
print("min_up=1:", compare_lp_ilp(short, duals))

# random duals find more of these on generated units
found = trials = 0
for u in generate_instance(seed=4, n_units=6, horizon=10, points_per_unit=3).units:
    rep = check_conjecture(u, 10, 40, seed=1)
    found += len(rep.counter_examples)
    trials += rep.trials
print(f"{found} fractional optima in {trials} random trials")
