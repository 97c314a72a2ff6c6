"""
The in-house LP and ILP solvers
===============================

A bounded revised simplex and a best-first branch-and-bound, checked here
against scipy on a small knapsack.
"""

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ucpd import solve_ilp, solve_lp
from ucpd.lp import LE, ModelBuilder

rng = np.random.default_rng(0)
values = rng.integers(10, 40, 15)
weights = rng.integers(10, 40, 15)
cap = weights.sum() // 3

b = ModelBuilder()
xs = [b.add_var(-v, 0, 1, integer=True, name=f"take_{j}") for j, v in enumerate(values)]
b.add_row({x: w for x, w in zip(xs, weights)}, LE, cap)
model = b.build()

# LP relaxation: one fractional item at most
lp = solve_lp(model, method="simplex")
print("LP", lp.status, -lp.objective, "iterations", lp.iterations)
print("fractional items", np.flatnonzero((lp.x > 1e-9) & (lp.x < 1 - 1e-9)))
print("capacity dual", lp.duals[0])

ilp = solve_ilp(model)
print("ILP", ilp.status, -ilp.objective, "nodes", ilp.nodes, "root bound", -ilp.root_bound)

ref = milp(-values, constraints=LinearConstraint(weights[None, :], -np.inf, cap),
           integrality=np.ones(15), bounds=Bounds(0, 1))
print("scipy milp", -ref.fun)

# warm start: tighten the capacity and resolve from the previous basis
b2 = ModelBuilder()
xs = [b2.add_var(-v, 0, 1) for v in values]
b2.add_row({x: w for x, w in zip(xs, weights)}, LE, cap - 25)
warm = solve_lp(b2.build(), warm_basis=lp.basis, method="simplex")
print("after tightening", -warm.objective, "in", warm.iterations, "iterations")
