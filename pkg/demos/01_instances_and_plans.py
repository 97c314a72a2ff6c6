"""
Instances, plans and the compact model
======================================

Generate a small fleet, check a few hand-written plans against the
operating rules, and look at the size of the compact integer program.
"""

import numpy as np

from ucpd import build_compact, generate_instance, plan_cost, plan_vectors, validate_plan
from ucpd.model import fleet_summary, max_plan

inst = generate_instance(seed=7, n_units=4, horizon=12, points_per_unit=3)
print(fleet_summary(inst))

unit = inst.units[0]
for p in unit.points:
    print(f"  power {p.power:7.1f}  dwell up {p.min_dwell_up}  dwell down {p.min_dwell_down}")
print("min up", unit.min_up, "min down", unit.min_down, "initial", unit.init)

# the greedy "climb as fast as allowed" plan is always valid
plan = max_plan(unit, inst.horizon)
print(plan.points, validate_plan(unit, plan, inst.horizon).ok, plan_cost(unit, plan))

# jumping two points at once is not
bad = [unit.init.point] * (inst.horizon - 1) + [min(unit.init.point + 2, unit.n_points)]
report = validate_plan(unit, bad, inst.horizon)
for v in report.violations:
    print("  ", v)

power, r1, r2 = plan_vectors(unit, plan)
print("power", np.round(power, 1))

# the compact model: state and move binaries per unit, period and point
model, index = build_compact(inst)
print(f"compact ILP: {model.n_cols} columns, {model.n_rows} rows, "
      f"{int(model.integer.sum())} integer")
