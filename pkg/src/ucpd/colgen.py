"""Column generation for the plan-based (extended) formulation.

The restricted master problem (RMP) chooses a convex combination of known
plans per unit so that power and reserve demands are covered.  Its duals
price new plans through the single-unit dynamic program.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .bnb import solve_ilp
from .compact import build_compact
from .lp import BASIC, EQ, GE, Basis, LpModel, solve_lp
from .model import Instance, Plan, Unit, max_plan, min_plan, plan_cost, plan_vectors
from .subproblem import DualPrices, build_state_graph, price_unit_dp_k

log = logging.getLogger(__name__)

CONVERGED = "converged"
LIMIT = "limit"
INFEASIBLE = "infeasible"
STALLED = "stalled"


class CgError(RuntimeError):
    """Broken column-generation invariant."""


@dataclass(frozen=True)
class Column:
    unit_id: str
    plan: Plan
    cost: float
    power: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    @classmethod
    def from_plan(cls, unit: Unit, plan: Plan) -> "Column":
        p, r1, r2 = plan_vectors(unit, plan)
        return cls(unit.id, plan, plan_cost(unit, plan), p, r1, r2)

    @property
    def key(self) -> tuple[str, tuple[int, ...]]:
        return self.unit_id, self.plan.points


def reduced_cost(column: Column, duals: DualPrices) -> float:
    priced = float(duals.pi_p @ column.power + duals.pi_r1 @ column.r1 + duals.pi_r2 @ column.r2)
    return column.cost + duals.sigma_of(column.unit_id) - priced


@dataclass
class CgConfig:
    eps: float = 1e-6
    max_iterations: int = 5000
    time_limit: float | None = None
    columns_per_unit: int = 1
    purge: bool = False
    purge_window: int = 5
    smoothing: float = 0.7
    init_strategy: str = "min_max"
    threads: int = 1
    gate_shutdown: bool = True
    lp_method: str = "auto"
    keep_duals: bool = False


@dataclass
class IterationRecord:
    iteration: int
    rmp_value: float
    min_rc: float
    columns_added: int
    columns_purged: int
    dual_zero_fraction: float
    wall_ms: float


LOG_FIELDS = ("iteration", "rmp_value", "min_rc", "columns_added", "columns_purged",
              "dual_zero_fraction", "wall_ms")


@dataclass
class CgResult:
    status: str
    lower_bound: float
    rmp_value: float
    lagrangian_bound: float
    pool: list[Column]
    iterations: int
    log: list[IterationRecord] = field(default_factory=list)
    duals: DualPrices | None = None
    rmp_solution: np.ndarray | None = None
    harvested: list[DualPrices] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def mean_dual_zero_fraction(self) -> float:
        return float(np.mean([r.dual_zero_fraction for r in self.log])) if self.log else math.nan


# ---------------------------------------------------------------------------
# initialization

def _greedy_cover(instance: Instance, gate_shutdown: bool) -> list[Plan] | None:
    T = instance.horizon
    need = instance.demands()
    plans = {u.id: min_plan(u, T, gate_shutdown) for u in instance.units}
    have = sum(np.array(plan_vectors(u, plans[u.id])) for u in instance.units)

    def merit(u: Unit) -> float:
        top = u.point(u.n_points).power
        return u.cost_prop + u.cost_fixed / top

    for u in sorted(instance.units, key=lambda v: (merit(v), v.id)):
        if np.all(have >= need - 1e-9):
            break
        hi = max_plan(u, T, gate_shutdown)
        have = have - np.array(plan_vectors(u, plans[u.id])) + np.array(plan_vectors(u, hi))
        plans[u.id] = hi
    if not np.all(have >= need - 1e-9):
        return None
    return [plans[u.id] for u in instance.units]


def initialize_columns(instance: Instance, strategy: str = "min_max",
                       gate_shutdown: bool = True) -> list[Column]:
    """Starting pool: per-unit maximal and minimal plans, or one greedy covering plan set.

    The ``heuristic`` strategy falls back to ``min_max`` when the greedy pass
    cannot cover demand.
    """
    T = instance.horizon
    plans: list[tuple[Unit, Plan]] = []
    if strategy == "heuristic":
        cover = _greedy_cover(instance, gate_shutdown)
        if cover is not None:
            plans = list(zip(instance.units, cover))
        else:
            strategy = "min_max"
    if strategy == "min_max":
        for u in instance.units:
            plans.append((u, max_plan(u, T, gate_shutdown)))
            plans.append((u, min_plan(u, T, gate_shutdown)))
    elif strategy != "heuristic":
        raise ValueError(f"unknown init strategy {strategy!r}")
    out, seen = [], set()
    for u, p in plans:
        col = Column.from_plan(u, p)
        if col.key not in seen:
            seen.add(col.key)
            out.append(col)
    return out


# ---------------------------------------------------------------------------
# restricted master

def build_rmp(instance: Instance, pool: Sequence[Column], integer: bool = False) -> LpModel:
    """Rows: power, reserve-1, reserve-2 demand (``T`` each), then one convexity row per unit."""
    T = instance.horizon
    uid = {u.id: k for k, u in enumerate(instance.units)}
    n = len(pool)
    top = np.column_stack([np.concatenate([c.power, c.r1, c.r2]) for c in pool]) if n else \
        np.zeros((3 * T, 0))
    conv = sp.csr_matrix((np.ones(n), ([uid[c.unit_id] for c in pool], np.arange(n))),
                         shape=(len(instance.units), n))
    A = sp.vstack([sp.csr_matrix(top), conv], format="csr")
    m = 3 * T + len(instance.units)
    sense = np.array([GE] * (3 * T) + [EQ] * len(instance.units), dtype="<U2")
    rhs = np.concatenate([instance.demands().ravel(), np.ones(len(instance.units))])
    upper = np.ones(n) if integer else np.full(n, np.inf)
    return LpModel(c=np.array([c.cost for c in pool], float), A=A, sense=sense, rhs=rhs,
                   lower=np.zeros(n), upper=upper, integer=np.full(n, integer),
                   row_names=tuple(f"r{i}" for i in range(m)))


def extract_duals(instance: Instance, y: np.ndarray, tol: float = 1e-6) -> DualPrices:
    """Split RMP row duals into demand prices and convexity terms.

    Demand duals within ``tol`` of zero on the wrong side are clipped.
    """
    T = instance.horizon
    pis = y[:3 * T].reshape(3, T)
    if np.any(pis < -tol):
        raise CgError(f"negative demand dual {pis.min():.3g}")
    pis = np.maximum(pis, 0.0)
    sigma = {u.id: -float(y[3 * T + k]) for k, u in enumerate(instance.units)}
    return DualPrices(pis[0], pis[1], pis[2], sigma)


# ---------------------------------------------------------------------------
# main loop

def cg_solve(instance: Instance, config: CgConfig | None = None,
             initial: Sequence[Column] | None = None) -> CgResult:
    """Solve the LP relaxation of the plan-based formulation by column generation."""
    cfg = config or CgConfig()
    start = time.monotonic()
    units = {u.id: u for u in instance.units}
    graphs = {u.id: build_state_graph(u, cfg.gate_shutdown) for u in instance.units}
    pool = list(initial) if initial is not None else \
        initialize_columns(instance, cfg.init_strategy, cfg.gate_shutdown)
    seen = {c.key for c in pool}
    zero_streak = np.zeros(len(pool), dtype=int)
    basis: Basis | None = None
    records: list[IterationRecord] = []
    harvested: list[DualPrices] = []
    best_lag = -math.inf
    center: DualPrices | None = None
    prev_value = math.inf
    executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None

    def price_all(duals: DualPrices):
        work = lambda u: price_unit_dp_k(u, duals, cfg.columns_per_unit, graph=graphs[u.id])  # noqa: E731
        if executor is None:
            return [work(u) for u in instance.units]
        return list(executor.map(work, instance.units))

    try:
        it = 0
        while True:
            it += 1
            t_iter = time.monotonic()
            model = build_rmp(instance, pool)
            sol = solve_lp(model, warm_basis=basis, method=cfg.lp_method)
            if not sol.optimal:
                if it == 1:
                    return CgResult(INFEASIBLE, math.nan, math.nan, math.nan, pool, 0, records)
                raise CgError(f"RMP became {sol.status} at iteration {it}")
            value = sol.objective
            # reduced costs are compared in the LP solver's normalized cost units
            eps = cfg.eps * max(1.0, float(np.abs(model.c).max(initial=0.0)))
            if value > prev_value + 1e-7 * (1.0 + abs(prev_value)):
                raise CgError(f"RMP value increased from {prev_value} to {value}")
            prev_value = value
            duals = extract_duals(instance, sol.duals, eps)
            if cfg.keep_duals:
                harvested.append(duals)

            used = duals
            if cfg.smoothing > 0 and center is not None:
                a = cfg.smoothing
                used = DualPrices(a * center.pi_p + (1 - a) * duals.pi_p,
                                  a * center.pi_r1 + (1 - a) * duals.pi_r1,
                                  a * center.pi_r2 + (1 - a) * duals.pi_r2,
                                  {k: a * center.sigma_of(k) + (1 - a) * duals.sigma_of(k)
                                   for k in units})
            priced = price_all(used)
            new = _collect(priced, used, units, seen, eps)
            if not new and used is not duals:
                used = duals
                priced = price_all(duals)
                new = _collect(priced, duals, units, seen, eps)
            min_rc = min(r[0][1] for r in priced)
            if used is duals:
                lag = value + sum(min(0.0, r[0][1]) for r in priced)
                best_lag = max(best_lag, lag)
            center = used

            # purge zero-valued nonbasic columns
            purged = 0
            if cfg.purge:
                zero = sol.x <= 1e-9
                if sol.basis is not None:
                    zero &= sol.basis.cols != BASIC
                zero_streak = np.where(zero, zero_streak + 1, 0)
                keep = _purge_mask(pool, zero_streak, cfg.purge_window)
                purged = int((~keep).sum())
                if purged:
                    for c in np.flatnonzero(~keep):
                        seen.discard(pool[c].key)
                    pool = [c for c, k in zip(pool, keep) if k]
                    zero_streak = zero_streak[keep]
                    basis = sol.basis.take_cols(keep) if sol.basis is not None else None
                else:
                    basis = sol.basis
            else:
                basis = sol.basis

            converged = not new and used is duals and min_rc >= -eps
            if not converged:
                pool.extend(new)
                zero_streak = np.concatenate([zero_streak, np.zeros(len(new), int)])
                if basis is not None:
                    basis = basis.extended(len(new))
            records.append(IterationRecord(it, value, min_rc, len(new), purged,
                                           duals.zero_fraction(),
                                           (time.monotonic() - t_iter) * 1000.0))
            log.debug("cg it=%d rmp=%.9g min_rc=%.3g added=%d pool=%d", it, value, min_rc,
                      len(new), len(pool))
            if converged:
                return CgResult(CONVERGED, value, value, max(best_lag, value), pool, it, records,
                                duals, sol.x, harvested)
            if not new:
                # negative plans exist but are already pooled: numerical stall
                log.warning("cg stalled at iteration %d with min_rc %.3g", it, min_rc)
                return CgResult(STALLED, best_lag, value, best_lag, pool, it, records, duals,
                                sol.x, harvested)
            out_of_time = cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit
            if it >= cfg.max_iterations or out_of_time:
                return CgResult(LIMIT, best_lag, value, best_lag, pool, it, records, duals,
                                sol.x, harvested)
    finally:
        if executor is not None:
            executor.shutdown()


def _collect(priced, duals: DualPrices, units: dict, seen: set, eps: float) -> list[Column]:
    new = []
    for results in priced:
        for plan, rc in results:
            if rc >= -eps:
                continue
            col = Column.from_plan(units[plan.unit_id], plan)
            if col.key in seen:
                continue
            check = reduced_cost(col, duals)
            if check >= -eps:
                raise CgError(f"priced column has reduced cost {check} >= -eps (DP said {rc})")
            seen.add(col.key)
            new.append(col)
    return new


def _purge_mask(pool: Sequence[Column], streak: np.ndarray, window: int) -> np.ndarray:
    keep = streak < window
    by_unit: dict[str, list[int]] = {}
    for k, c in enumerate(pool):
        by_unit.setdefault(c.unit_id, []).append(k)
    for idx in by_unit.values():
        kept = [k for k in idx if keep[k]]
        if len(kept) < 2:
            # restore the least stale columns up to the floor of two per unit
            for k in sorted((k for k in idx if not keep[k]), key=lambda k: (streak[k], k)):
                if len(kept) >= 2:
                    break
                keep[k] = True
                kept.append(k)
    return keep


def write_log_csv(records: Sequence[IterationRecord], path: str | Path,
                  timing: bool = True) -> None:
    fields = LOG_FIELDS if timing else LOG_FIELDS[:-1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in records:
            row = [r.iteration, f"{r.rmp_value:.10g}", f"{r.min_rc:.10g}", r.columns_added,
                   r.columns_purged, f"{r.dual_zero_fraction:.6f}"]
            if timing:
                row.append(f"{r.wall_ms:.3f}")
            w.writerow(row)


# ---------------------------------------------------------------------------
# primal heuristic and bound comparison

@dataclass
class HeuristicResult:
    status: str
    plans: list[Plan] | None
    upper_bound: float


def integer_rmp_heuristic(pool: Sequence[Column], instance: Instance,
                          time_limit: float | None = 30.0) -> HeuristicResult:
    """Pick one pooled plan per unit by solving the RMP with binary variables."""
    model = build_rmp(instance, pool, integer=True)
    res = solve_ilp(model, time_limit=time_limit, lp_method="auto")
    if res.x is None:
        return HeuristicResult(res.status, None, math.inf)
    chosen = np.flatnonzero(res.x > 0.5)
    plans = [pool[k].plan for k in chosen]
    order = {u.id: k for k, u in enumerate(instance.units)}
    plans.sort(key=lambda p: order[p.unit_id])
    return HeuristicResult(res.status, plans, res.objective)


class BoundError(AssertionError):
    """Bound dominance chain violated."""


ILP_SIZE_LIMIT = 3000


def compare_bounds(instance: Instance, config: CgConfig | None = None, ilp: bool | None = None,
                   ilp_time_limit: float | None = 120.0, tol: float = 1e-6) -> dict:
    """Compact LP, column-generation bound and (small instances) compact ILP optimum."""
    cfg = config or CgConfig()
    t0 = time.monotonic()
    model, _ = build_compact(instance, gate_shutdown=cfg.gate_shutdown)
    lp = solve_lp(model, method="highs" if model.n_cols * model.n_rows > 400_000 else "auto")
    t1 = time.monotonic()
    if not lp.optimal:
        return {"status": "infeasible", "compact_lp": math.nan, "cg_bound": math.nan}
    cg = cg_solve(instance, cfg)
    t2 = time.monotonic()
    if cg.status == INFEASIBLE:
        return {"status": "infeasible", "compact_lp": lp.objective, "cg_bound": math.nan}
    scale = 1.0 + abs(lp.objective)
    report = {
        "status": cg.status,
        "compact_lp": lp.objective,
        "cg_bound": cg.lower_bound,
        "rel_diff": abs(cg.lower_bound - lp.objective) / scale,
        "cg_iterations": cg.iterations,
        "cg_columns": len(cg.pool),
        "dual_zero_fraction": cg.mean_dual_zero_fraction(),
        "compact_lp_s": t1 - t0,
        "cg_s": t2 - t1,
        "compact_ilp": math.nan,
        "compact_ilp_status": "skipped",
    }
    if cg.lower_bound < lp.objective - tol * scale:
        raise BoundError(f"cg bound {cg.lower_bound} below compact LP {lp.objective}")
    if ilp is None:
        ilp = model.n_cols <= ILP_SIZE_LIMIT
    if ilp:
        res = solve_ilp(model, time_limit=ilp_time_limit, lp_method="auto")
        report["compact_ilp"] = res.objective
        report["compact_ilp_status"] = res.status
        report["compact_ilp_bound"] = res.bound
        if res.x is not None and res.objective < cg.lower_bound - tol * scale:
            raise BoundError(f"integer solution {res.objective} below cg bound {cg.lower_bound}")
    return report
