"""Discretized unit commitment with min-stop ramping: compact ILP, column generation
and a small in-house LP/ILP toolchain."""

from .bnb import IlpResult, solve_ilp
from .colgen import CgConfig, CgResult, Column, cg_solve, compare_bounds
from .compact import build_compact, decode_integer_solution, decode_solution
from .lp import Basis, LpModel, LpSolution, solve_lp, write_lp
from .model import (InitialCondition, Instance, OperatingPoint, Plan, Unit, generate_instance,
                    plan_cost, plan_vectors, read_instance, validate_plan, write_instance)
from .subproblem import (DualPrices, build_subproblem_ilp, check_conjecture, enumerate_plans,
                         price_unit_dp, price_unit_enum)

__all__ = [
    "Basis", "CgConfig", "CgResult", "Column", "DualPrices", "IlpResult", "InitialCondition",
    "Instance", "LpModel", "LpSolution", "OperatingPoint", "Plan", "Unit", "build_compact",
    "build_subproblem_ilp", "cg_solve", "check_conjecture", "compare_bounds",
    "decode_integer_solution", "decode_solution", "enumerate_plans", "generate_instance",
    "plan_cost", "plan_vectors", "price_unit_dp", "price_unit_enum", "read_instance",
    "solve_ilp", "solve_lp", "validate_plan", "write_instance", "write_lp",
]
