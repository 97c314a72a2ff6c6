"""Single-unit pricing: reduced-cost minimization over all feasible plans.

:func:`price_unit_dp` is the exact dynamic program used by column
generation.  :func:`enumerate_plans` and :func:`build_subproblem_ilp` give two
independent ways to reach the same optimum, and :func:`check_conjecture`
compares the single-unit LP relaxation with its integer optimum.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .bnb import solve_ilp
from .compact import add_unit_rows, add_unit_vars, state_costs
from .lp import LpModel, ModelBuilder, solve_lp
from .model import Instance, Plan, Tracker, Unit, advance, blocked_by, dumps_instance

ENUMERATION_LIMIT = 10**7


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class DualPrices:
    """Master duals. ``sigma`` follows the sign in ``RC = c + sigma - pi . v``."""

    pi_p: np.ndarray
    pi_r1: np.ndarray
    pi_r2: np.ndarray
    sigma: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("pi_p", "pi_r1", "pi_r2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if np.any(arr < -1e-9):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, np.maximum(arr, 0.0))
        object.__setattr__(self, "sigma", dict(self.sigma))

    @classmethod
    def zeros(cls, horizon: int, sigma: Mapping[str, float] | None = None) -> "DualPrices":
        z = np.zeros(horizon)
        return cls(z, z.copy(), z.copy(), sigma or {})

    @property
    def horizon(self) -> int:
        return len(self.pi_p)

    def sigma_of(self, unit_id: str) -> float:
        return float(self.sigma.get(unit_id, 0.0))

    def zero_fraction(self, tol: float = 1e-9) -> float:
        """Share of power-demand duals that are zero."""
        return float(np.mean(np.abs(self.pi_p) <= tol)) if len(self.pi_p) else 1.0

    def to_dict(self) -> dict:
        return {"pi_p": self.pi_p.tolist(), "pi_r1": self.pi_r1.tolist(),
                "pi_r2": self.pi_r2.tolist(), "sigma": dict(self.sigma)}

    @classmethod
    def from_dict(cls, d: dict) -> "DualPrices":
        return cls(np.array(d["pi_p"], float), np.array(d["pi_r1"], float),
                   np.array(d["pi_r2"], float), {k: float(v) for k, v in d.get("sigma", {}).items()})


def period_costs(unit: Unit, duals: DualPrices) -> np.ndarray:
    """Reduced per-period cost of every point, shape ``(T, N+1)``; offline is 0."""
    p, r1, r2 = unit.levels()
    own = unit.cost_fixed + unit.cost_prop * p
    priced = (np.outer(duals.pi_p, p) + np.outer(duals.pi_r1, r1) + np.outer(duals.pi_r2, r2))
    pc = own[None, :] - priced
    pc[:, 0] = 0.0
    return pc


def plan_reduced_cost(unit: Unit, plan: Plan | Sequence[int], duals: DualPrices) -> float:
    """Reduced cost accumulated period by period (the DP's summation order)."""
    points = plan.points if isinstance(plan, Plan) else tuple(plan)
    pc = period_costs(unit, duals)
    total = 0.0
    prev = unit.init.point
    for t, cur in enumerate(points):
        arc = (unit.cost_startup if (prev == 0 and cur == 1) else 0.0) + pc[t, cur]
        total = total + arc
        prev = cur
    return duals.sigma_of(unit.id) + total


# ---------------------------------------------------------------------------
# dynamic program

@dataclass(frozen=True)
class StateGraph:
    """Reachable capped states of one unit and their incoming arcs.

    A state is ``(point, dwell, since_startup)`` with dwell capped at the
    longest duration gating a move out of ``point`` and since_startup capped
    at the minimum up time.  ``src[k, a]`` is the ``a``-th predecessor of
    state ``k`` (``-1`` padding) and ``startup[k, a]`` flags start-up arcs.
    """

    states: tuple[tuple[int, int, int], ...]
    point: np.ndarray
    src: np.ndarray
    startup: np.ndarray
    initial: int


def _caps(unit: Unit, gate_shutdown: bool) -> list[int]:
    caps = [unit.min_down]
    N = unit.n_points
    for i in range(1, N + 1):
        pt = unit.point(i)
        c = 1
        if i < N:
            c = max(c, pt.min_dwell_up)
        if i >= 2 or gate_shutdown:
            c = max(c, pt.min_dwell_down)
        caps.append(c)
    return caps


def _successors(unit: Unit, state, caps, gate_shutdown: bool):
    i, d, s = state
    N = unit.n_points
    on_cap = unit.min_up
    if i == 0:
        yield (0, min(d + 1, caps[0]), 0), False
        if d >= unit.min_down:
            yield (1, 1, 1), True
        return
    s1 = min(s + 1, on_cap)
    yield (i, min(d + 1, caps[i]), s1), False
    if i < N and d >= unit.point(i).min_dwell_up:
        yield (i + 1, 1, s1), False
    if i >= 2 and d >= unit.point(i).min_dwell_down:
        yield (i - 1, 1, s1), False
    if i == 1 and s >= unit.min_up and (not gate_shutdown or d >= unit.point(1).min_dwell_down):
        yield (0, 1, 0), False


def build_state_graph(unit: Unit, gate_shutdown: bool = True) -> StateGraph:
    caps = _caps(unit, gate_shutdown)
    init = unit.init
    if init.online:
        start = (init.point, min(init.dwell, caps[init.point]), min(init.since_startup, unit.min_up))
    else:
        start = (0, min(init.offline_elapsed, caps[0]), 0)
    order = {start: 0}
    arcs: list[tuple[int, int, bool]] = []
    queue = deque([start])
    while queue:
        st = queue.popleft()
        k = order[st]
        for nxt, is_start in _successors(unit, st, caps, gate_shutdown):
            if nxt not in order:
                order[nxt] = len(order)
                queue.append(nxt)
            arcs.append((k, order[nxt], is_start))
    S = len(order)
    incoming: list[list[tuple[int, bool]]] = [[] for _ in range(S)]
    for a, b_, flag in arcs:
        incoming[b_].append((a, flag))
    K = max(len(v) for v in incoming)
    src = np.full((S, K), -1, dtype=np.int64)
    startup = np.zeros((S, K), dtype=bool)
    for k, lst in enumerate(incoming):
        lst.sort()
        for a, (s_, flag) in enumerate(lst):
            src[k, a] = s_
            startup[k, a] = flag
    states = tuple(sorted(order, key=order.get))
    return StateGraph(states, np.array([s[0] for s in states]), src, startup, 0)


def _forward(unit: Unit, duals: DualPrices, g: StateGraph) -> tuple[np.ndarray, np.ndarray]:
    """Best accumulated reduced cost per end state and the predecessor table."""
    T = duals.horizon
    pc = period_costs(unit, duals)
    S = len(g.states)
    src = np.where(g.src < 0, S, g.src)  # padding points at an infinite sentinel
    arc_start = np.where(g.startup, unit.cost_startup, 0.0)
    val = np.full(S + 1, np.inf)
    val[g.initial] = 0.0
    pred = np.empty((T, S), dtype=np.int64)
    rows = np.arange(S)
    for t in range(T):
        cand = val[src] + (arc_start + pc[t, g.point][:, None])
        best = np.argmin(cand, axis=1)
        val[:S] = cand[rows, best]
        pred[t] = src[rows, best]
    return val[:S], pred


def _backtrack(g: StateGraph, pred: np.ndarray, end: int, unit_id: str) -> Plan:
    k, points = int(end), []
    for t in range(pred.shape[0] - 1, -1, -1):
        points.append(int(g.point[k]))
        k = int(pred[t, k])
    return Plan(unit_id, tuple(reversed(points)))


def price_unit_dp(unit: Unit, duals: DualPrices, horizon: int | None = None,
                  gate_shutdown: bool = True, graph: StateGraph | None = None
                  ) -> tuple[Plan, float]:
    """Feasible plan of minimum reduced cost and that reduced cost (``sigma`` included)."""
    if horizon is not None and duals.horizon != horizon:
        raise ValueError("dual vectors do not match the horizon")
    g = graph or build_state_graph(unit, gate_shutdown)
    val, pred = _forward(unit, duals, g)
    end = int(np.argmin(val))
    return _backtrack(g, pred, end, unit.id), duals.sigma_of(unit.id) + float(val[end])


def price_unit_dp_k(unit: Unit, duals: DualPrices, k: int, gate_shutdown: bool = True,
                    graph: StateGraph | None = None) -> list[tuple[Plan, float]]:
    """Up to ``k`` cheapest plans, one per distinct end state, best first.

    The first entry is always the global optimum of :func:`price_unit_dp`.
    """
    g = graph or build_state_graph(unit, gate_shutdown)
    val, pred = _forward(unit, duals, g)
    sigma = duals.sigma_of(unit.id)
    ends = np.argsort(val, kind="stable")[:max(k, 1)]
    return [(_backtrack(g, pred, e, unit.id), sigma + float(val[e]))
            for e in ends if np.isfinite(val[e])]


# ---------------------------------------------------------------------------
# enumeration

def enumerate_plans(unit: Unit, horizon: int, gate_shutdown: bool = True,
                    limit: int = ENUMERATION_LIMIT) -> Iterator[Plan]:
    """Every feasible plan of ``unit``, in lexicographic order of point sequences."""
    if (unit.n_points + 1) ** horizon > limit:
        raise EnumerationTooLarge(
            f"(N+1)^T = {unit.n_points + 1}^{horizon} exceeds the enumeration limit {limit}")

    def rec(trk: Tracker, prefix: list[int]):
        if len(prefix) == horizon:
            yield Plan(unit.id, tuple(prefix))
            return
        for cur in range(max(0, trk.point - 1), min(unit.n_points, trk.point + 1) + 1):
            if blocked_by(unit, trk, cur, gate_shutdown):
                continue
            prefix.append(cur)
            yield from rec(advance(trk, cur), prefix)
            prefix.pop()

    yield from rec(Tracker.initial(unit), [])


def price_unit_enum(unit: Unit, duals: DualPrices, horizon: int,
                    gate_shutdown: bool = True) -> tuple[Plan, float]:
    best, best_val = None, math.inf
    for plan in enumerate_plans(unit, horizon, gate_shutdown):
        v = plan_reduced_cost(unit, plan, duals)
        if v < best_val:
            best, best_val = plan, v
    return best, best_val


# ---------------------------------------------------------------------------
# single-unit ILP

def build_subproblem_ilp(unit: Unit, duals: DualPrices, horizon: int | None = None,
                         gate_shutdown: bool = True, variant: str = "tight") -> LpModel:
    T = duals.horizon if horizon is None else horizon
    b = ModelBuilder()
    cost = state_costs(unit, T)
    p, r1, r2 = unit.levels()
    cost = cost - (np.outer(duals.pi_p, p) + np.outer(duals.pi_r1, r1) + np.outer(duals.pi_r2, r2))
    uv = add_unit_vars(b, unit, T, cost, unit.cost_startup)
    add_unit_rows(b, unit, uv, T, gate_shutdown, variant)
    b.offset = duals.sigma_of(unit.id)
    return b.build()


# ---------------------------------------------------------------------------
# integrality experiment

@dataclass
class ConjectureReport:
    trials: int = 0
    max_gap: float = 0.0
    integral: int = 0
    dp_mismatches: int = 0
    counter_examples: list = field(default_factory=list)

    @property
    def integral_fraction(self) -> float:
        return self.integral / self.trials if self.trials else 1.0

    def merge(self, other: "ConjectureReport") -> "ConjectureReport":
        return ConjectureReport(self.trials + other.trials, max(self.max_gap, other.max_gap),
                                self.integral + other.integral,
                                self.dp_mismatches + other.dp_mismatches,
                                self.counter_examples + other.counter_examples)

    def summary(self) -> dict:
        return {"trials": self.trials, "max_gap": self.max_gap,
                "integral_fraction": self.integral_fraction,
                "dp_mismatches": self.dp_mismatches,
                "counter_examples": len(self.counter_examples)}


def random_duals(unit: Unit, horizon: int, rng: np.random.Generator) -> DualPrices:
    """Duals on the scale of the unit's own costs."""
    p, _, _ = unit.levels()
    marginal = max(unit.cost_prop + unit.cost_fixed / p[i] for i in range(1, unit.n_points + 1))
    hi = 2.0 * marginal
    scale = horizon * (unit.cost_fixed + unit.cost_prop * p.max()) + unit.cost_startup
    return DualPrices(rng.uniform(0, hi, horizon), rng.uniform(0, hi, horizon),
                      rng.uniform(0, hi, horizon), {unit.id: float(rng.uniform(-scale, scale))})


def compare_lp_ilp(unit: Unit, duals: DualPrices, gate_shutdown: bool = True,
                   variant: str = "tight", lp_method: str = "highs") -> dict:
    """Solve one single-unit model as LP and as ILP."""
    T = duals.horizon
    model = build_subproblem_ilp(unit, duals, T, gate_shutdown, variant)
    lp = solve_lp(model, method=lp_method)
    ilp = solve_ilp(model, lp_method=lp_method)
    _, dp = price_unit_dp(unit, duals, T, gate_shutdown)
    x = lp.x
    integral = bool(np.all(np.abs(x - np.round(x)) <= 1e-6))
    gap = abs(ilp.objective - lp.objective) / (1.0 + abs(ilp.objective))
    return {"lp": lp.objective, "ilp": ilp.objective, "dp": dp, "gap": gap,
            "integral": integral}


def check_conjecture(unit: Unit, horizon: int, n_trials: int, seed: int = 0,
                     harvested: Sequence[DualPrices] = (), gate_shutdown: bool = True,
                     variant: str = "tight", tol: float = 1e-6,
                     lp_method: str = "highs") -> ConjectureReport:
    """Compare LP and ILP optima of the single-unit model over many dual vectors.

    ``n_trials`` random dual vectors are drawn, and every vector in
    ``harvested`` is used as well.  A trial whose relative gap exceeds ``tol``
    is kept as a counter-example.
    """
    if n_trials < 1 and not harvested:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    duals_list = [random_duals(unit, horizon, rng) for _ in range(n_trials)]
    duals_list += list(harvested)
    rep = ConjectureReport()
    for duals in duals_list:
        if duals.horizon != horizon:
            raise ValueError("harvested duals do not match the horizon")
        res = compare_lp_ilp(unit, duals, gate_shutdown, variant, lp_method)
        rep.trials += 1
        rep.max_gap = max(rep.max_gap, res["gap"])
        rep.integral += res["integral"]
        if abs(res["dp"] - res["ilp"]) > 1e-6 * (1.0 + abs(res["ilp"])):
            rep.dp_mismatches += 1
        if res["gap"] > tol:
            rep.counter_examples.append({"unit": unit, "duals": duals, "horizon": horizon,
                                         "lp": res["lp"], "ilp": res["ilp"]})
    return rep


def counter_example_text(unit: Unit, horizon: int, duals: DualPrices, extra: dict | None = None) -> str:
    """Instance-file text holding one unit plus a ``duals`` key."""
    zeros = (0.0,) * horizon
    inst = Instance((unit,), horizon, zeros, zeros, zeros)
    payload = {"duals": duals.to_dict()}
    if extra:
        payload.update(extra)
    return dumps_instance(inst, payload)


def write_counter_example(path: str | Path, unit: Unit, horizon: int, duals: DualPrices,
                          extra: dict | None = None) -> None:
    Path(path).write_text(counter_example_text(unit, horizon, duals, extra), encoding="utf-8")


def read_counter_example(path: str | Path) -> tuple[Unit, int, DualPrices]:
    from .model import instance_from_dict

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    inst = instance_from_dict({k: v for k, v in data.items() if k != "duals" and k in
                               ("horizon", "units", "demand_power", "demand_r1", "demand_r2")})
    return inst.units[0], inst.horizon, DualPrices.from_dict(data["duals"])
