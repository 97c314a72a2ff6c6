"""
Column generation
=================

Solve the master LP over whole-horizon plans by column generation and set
its bound against the compact LP relaxation and the integer optimum.
"""

import numpy as np

from ucpd import CgConfig, build_compact, cg_solve, compare_bounds, solve_lp
from ucpd.colgen import integer_rmp_heuristic
from ucpd.model import generate_instance

inst = generate_instance(seed=11, n_units=6, horizon=24, points_per_unit=3)

res = cg_solve(inst, CgConfig(columns_per_unit=2))
print(res.status, "after", res.iterations, "iterations with", len(res.pool), "columns")
print("bound", res.lower_bound, "lagrangian", res.lagrangian_bound)
for r in res.log[::max(1, len(res.log) // 8)]:
    print(f"  it {r.iteration:4d}  rmp {r.rmp_value:14.3f}  min rc {r.min_rc:12.3f}")

# how sparse are the demand duals along the way
print("zero fraction of power duals", round(res.mean_dual_zero_fraction(), 3))

lp = solve_lp(build_compact(inst, integer=False)[0])
print("compact LP", lp.objective)

# an integer solution from the final pool gives an upper bound
heur = integer_rmp_heuristic(res.pool, inst)
print("pool heuristic", heur.upper_bound,
      f"gap {(heur.upper_bound - res.lower_bound) / abs(res.lower_bound):.2%}")

# everything at once, including the compact ILP with a time limit
print(compare_bounds(generate_instance(seed=2, n_units=3, horizon=10, points_per_unit=2)))
