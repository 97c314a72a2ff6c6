"""Domain types for the discretized unit commitment problem.

A unit produces at one of ``N`` discrete operating points (indexed ``1..N``)
or is offline (point ``0``, implicit, zero power and reserves).  Plans are
per-period point trajectories over a horizon of ``T`` periods.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class InstanceError(ValueError):
    """Invalid instance data (bad field value or malformed file)."""


class PlanInputError(ValueError):
    """A plan that cannot even be checked (wrong length, bad point index)."""


@dataclass(frozen=True)
class OperatingPoint:
    power: float
    reserve1: float = 0.0
    reserve2: float = 0.0
    min_dwell_up: int = 1
    min_dwell_down: int = 1

    def __post_init__(self):
        if not self.power > 0:
            raise InstanceError(f"operating point power must be > 0, got {self.power}")
        if self.reserve1 < 0 or self.reserve2 < 0:
            raise InstanceError("operating point reserves must be >= 0")
        if self.min_dwell_up < 1 or self.min_dwell_down < 1:
            raise InstanceError("operating point dwell durations must be >= 1")


@dataclass(frozen=True)
class InitialCondition:
    """State of a unit just before period 1.

    ``dwell`` counts periods already spent at ``point``.  For an online unit
    ``since_startup`` counts online periods since the last start-up; for an
    offline unit ``offline_elapsed`` counts periods since the last shut-down.
    """

    point: int = 0
    dwell: int = 1
    since_startup: int = 1
    offline_elapsed: int = 1

    def __post_init__(self):
        if self.point < 0:
            raise InstanceError("init.point must be >= 0")
        if self.dwell < 1:
            raise InstanceError("init.dwell must be >= 1")
        if self.point > 0 and self.since_startup < self.dwell:
            raise InstanceError("init.since_startup must be >= init.dwell for an online unit")
        if self.point == 0 and self.offline_elapsed < 1:
            raise InstanceError("init.offline_elapsed must be >= 1 for an offline unit")

    @property
    def online(self) -> bool:
        return self.point > 0


@dataclass(frozen=True)
class Unit:
    id: str
    points: tuple[OperatingPoint, ...]
    min_up: int = 1
    min_down: int = 1
    cost_startup: float = 0.0
    cost_fixed: float = 0.0
    cost_prop: float = 0.0
    init: InitialCondition = field(default_factory=InitialCondition)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < 1:
            raise InstanceError(f"unit {self.id}: needs at least one operating point")
        if self.min_up < 1 or self.min_down < 1:
            raise InstanceError(f"unit {self.id}: min_up and min_down must be >= 1")
        if min(self.cost_startup, self.cost_fixed, self.cost_prop) < 0:
            raise InstanceError(f"unit {self.id}: costs must be >= 0")
        if self.init.point > len(self.points):
            raise InstanceError(f"unit {self.id}: init.point exceeds number of points")

    @property
    def n_points(self) -> int:
        return len(self.points)

    def point(self, i: int) -> OperatingPoint:
        """Operating point ``i`` (1-based)."""
        return self.points[i - 1]

    def levels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Power, reserve-1 and reserve-2 per point index ``0..N`` (offline first)."""
        p = np.array([0.0] + [q.power for q in self.points])
        r1 = np.array([0.0] + [q.reserve1 for q in self.points])
        r2 = np.array([0.0] + [q.reserve2 for q in self.points])
        return p, r1, r2

    def lookback(self) -> int:
        """Longest duration any dynamic constraint looks back over."""
        dwell = max(max(q.min_dwell_up, q.min_dwell_down) for q in self.points)
        return max(dwell, self.min_up, self.min_down)


@dataclass(frozen=True)
class Instance:
    units: tuple[Unit, ...]
    horizon: int
    demand_power: tuple[float, ...]
    demand_r1: tuple[float, ...]
    demand_r2: tuple[float, ...]

    def __post_init__(self):
        for name in ("units", "demand_power", "demand_r1", "demand_r2"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.horizon < 1:
            raise InstanceError("horizon must be >= 1")
        if not self.units:
            raise InstanceError("instance needs at least one unit")
        for name in ("demand_power", "demand_r1", "demand_r2"):
            series = getattr(self, name)
            if len(series) != self.horizon:
                raise InstanceError(f"{name} has length {len(series)}, expected {self.horizon}")
            if any(v < 0 or not math.isfinite(v) for v in series):
                raise InstanceError(f"{name} values must be finite and >= 0")
        ids = [u.id for u in self.units]
        if len(set(ids)) != len(ids):
            raise InstanceError("unit ids must be unique")

    def unit(self, unit_id: str) -> Unit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise KeyError(unit_id)

    def demands(self) -> np.ndarray:
        """Array of shape (3, T): power, reserve-1, reserve-2 demand."""
        return np.array([self.demand_power, self.demand_r1, self.demand_r2], dtype=float)


@dataclass(frozen=True)
class Plan:
    unit_id: str
    points: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))


@dataclass(frozen=True)
class Violation:
    period: int
    constraint: str

    def __str__(self):
        return f"{self.constraint}@t={self.period}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


# Constraint names used in violation reports.
TRANSITION = "transition"
MIN_STOP_UP = "min_stop_up"
MIN_STOP_DOWN = "min_stop_down"
MIN_UP = "min_up"
MIN_DOWN = "min_down"


def _check_plan_input(unit: Unit, plan: Plan | Sequence[int], horizon: int) -> tuple[int, ...]:
    points = plan.points if isinstance(plan, Plan) else tuple(int(p) for p in plan)
    if len(points) != horizon:
        raise PlanInputError(f"plan has {len(points)} periods, expected {horizon}")
    for t, p in enumerate(points, start=1):
        if not 0 <= p <= unit.n_points:
            raise PlanInputError(f"point {p} at t={t} outside 0..{unit.n_points}")
    return points


@dataclass(frozen=True)
class Tracker:
    """Uncapped counters describing a unit after some period."""

    point: int
    dwell: int
    on_for: int
    off_for: int

    @classmethod
    def initial(cls, unit: Unit) -> "Tracker":
        init = unit.init
        if init.online:
            return cls(init.point, init.dwell, init.since_startup, 0)
        return cls(0, init.dwell, 0, init.offline_elapsed)


def blocked_by(unit: Unit, trk: Tracker, cur: int, gate_shutdown: bool = True) -> list[str]:
    """Names of the constraints that forbid moving from ``trk`` to point ``cur``."""
    prev = trk.point
    step = cur - prev
    if step == 0:
        return []
    if abs(step) > 1:
        return [TRANSITION]
    if step == 1:
        if prev == 0:
            return [MIN_DOWN] if trk.off_for < unit.min_down else []
        return [MIN_STOP_UP] if trk.dwell < unit.point(prev).min_dwell_up else []
    if cur == 0:
        bad = [MIN_UP] if trk.on_for < unit.min_up else []
        if gate_shutdown and trk.dwell < unit.point(1).min_dwell_down:
            bad.append(MIN_STOP_DOWN)
        return bad
    return [MIN_STOP_DOWN] if trk.dwell < unit.point(prev).min_dwell_down else []


def advance(trk: Tracker, cur: int) -> Tracker:
    prev = trk.point
    dwell = trk.dwell + 1 if cur == prev else 1
    if cur > 0:
        return Tracker(cur, dwell, trk.on_for + 1 if prev > 0 else 1, 0)
    return Tracker(0, dwell, 0, trk.off_for + 1 if prev == 0 else 1)


def validate_plan(unit: Unit, plan: Plan | Sequence[int], horizon: int,
                  gate_shutdown: bool = True) -> ValidationReport:
    """Check a plan against transition, min-stop and min-up/min-down rules.

    The check simulates the unit from its initial condition.  With
    ``gate_shutdown`` a shut-down also needs the min-stop-down time of point 1.
    Raises :class:`PlanInputError` for malformed input.
    """
    points = _check_plan_input(unit, plan, horizon)
    trk = Tracker.initial(unit)
    bad = []
    for t, cur in enumerate(points, start=1):
        bad.extend(Violation(t, name) for name in blocked_by(unit, trk, cur, gate_shutdown))
        trk = advance(trk, cur)
    return ValidationReport(tuple(bad))


def plan_cost(unit: Unit, plan: Plan | Sequence[int]) -> float:
    points = plan.points if isinstance(plan, Plan) else tuple(plan)
    total = 0.0
    prev = unit.init.point
    for p in points:
        if p > 0:
            if prev == 0:
                total += unit.cost_startup
            total += unit.cost_fixed + unit.cost_prop * unit.point(p).power
        prev = p
    return total


def plan_vectors(unit: Unit, plan: Plan | Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-period power, reserve-1 and reserve-2 produced by a plan."""
    points = np.asarray(plan.points if isinstance(plan, Plan) else plan, dtype=int)
    p, r1, r2 = unit.levels()
    return p[points], r1[points], r2[points]


def max_plan(unit: Unit, horizon: int, gate_shutdown: bool = True) -> Plan:
    """Ramp up as early as the dynamic constraints allow, then hold the top point."""
    return Plan(unit.id, _greedy(unit, horizon, +1, gate_shutdown))


def min_plan(unit: Unit, horizon: int, gate_shutdown: bool = True) -> Plan:
    """Ramp down and shut down as early as allowed, then stay offline."""
    return Plan(unit.id, _greedy(unit, horizon, -1, gate_shutdown))


def _greedy(unit: Unit, horizon: int, direction: int, gate_shutdown: bool) -> tuple[int, ...]:
    trk = Tracker.initial(unit)
    out = []
    for _ in range(horizon):
        cur = trk.point
        target = cur + direction
        if 0 <= target <= unit.n_points and not blocked_by(unit, trk, target, gate_shutdown):
            cur = target
        trk = advance(trk, cur)
        out.append(cur)
    return tuple(out)


# ---------------------------------------------------------------------------
# Instance files

def _unit_to_dict(u: Unit) -> dict:
    return {
        "id": u.id,
        "points": [
            {"power": q.power, "r1": q.reserve1, "r2": q.reserve2,
             "dwell_up": q.min_dwell_up, "dwell_down": q.min_dwell_down}
            for q in u.points
        ],
        "min_up": u.min_up,
        "min_down": u.min_down,
        "cost_startup": u.cost_startup,
        "cost_fixed": u.cost_fixed,
        "cost_prop": u.cost_prop,
        "init": {"point": u.init.point, "dwell": u.init.dwell,
                 "since_startup": u.init.since_startup,
                 "offline_elapsed": u.init.offline_elapsed},
    }


def instance_to_dict(inst: Instance) -> dict:
    return {
        "horizon": inst.horizon,
        "units": [_unit_to_dict(u) for u in inst.units],
        "demand_power": list(inst.demand_power),
        "demand_r1": list(inst.demand_r1),
        "demand_r2": list(inst.demand_r2),
    }


def _get(d: dict, key: str, where: str, kind=float):
    if key not in d:
        raise InstanceError(f"{where}: missing field '{key}'")
    value = d[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InstanceError(f"{where}.{key}: expected integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"{where}.{key}: expected number, got {value!r}")
    return float(value)


def unit_from_dict(d: dict, where: str = "unit") -> Unit:
    try:
        pts = []
        for k, q in enumerate(d.get("points") or []):
            w = f"{where}.points[{k}]"
            pts.append(OperatingPoint(
                power=_get(q, "power", w), reserve1=_get(q, "r1", w), reserve2=_get(q, "r2", w),
                min_dwell_up=_get(q, "dwell_up", w, int), min_dwell_down=_get(q, "dwell_down", w, int)))
        ini = d.get("init")
        if not isinstance(ini, dict):
            raise InstanceError(f"{where}: missing field 'init'")
        w = f"{where}.init"
        init = InitialCondition(point=_get(ini, "point", w, int), dwell=_get(ini, "dwell", w, int),
                                since_startup=_get(ini, "since_startup", w, int),
                                offline_elapsed=_get(ini, "offline_elapsed", w, int))
        if "id" not in d:
            raise InstanceError(f"{where}: missing field 'id'")
        return Unit(id=str(d["id"]), points=tuple(pts),
                    min_up=_get(d, "min_up", where, int), min_down=_get(d, "min_down", where, int),
                    cost_startup=_get(d, "cost_startup", where), cost_fixed=_get(d, "cost_fixed", where),
                    cost_prop=_get(d, "cost_prop", where), init=init)
    except InstanceError as exc:
        msg = str(exc)
        raise InstanceError(msg if msg.startswith(where) else f"{where}: {msg}") from None


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise InstanceError("instance file must hold a JSON object")
    horizon = _get(d, "horizon", "instance", int)
    units = d.get("units")
    if not isinstance(units, list):
        raise InstanceError("instance: missing field 'units'")
    parsed = tuple(unit_from_dict(u, f"units[{k}]") for k, u in enumerate(units))
    series = {}
    for key in ("demand_power", "demand_r1", "demand_r2"):
        values = d.get(key)
        if not isinstance(values, list):
            raise InstanceError(f"instance: missing field '{key}'")
        series[key] = tuple(_get({key: v}, key, f"{key}[{k}]") for k, v in enumerate(values))
    return Instance(units=parsed, horizon=horizon, **series)


def dumps_instance(inst: Instance, extra: dict | None = None) -> str:
    d = instance_to_dict(inst)
    if extra:
        d.update(extra)
    return json.dumps(d, indent=2, sort_keys=False) + "\n"


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


def read_instance(path: str | Path) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(data)


# ---------------------------------------------------------------------------
# Synthetic generator

def _demand_shape(horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Two-peak daily load shape in [0.55, 1], repeated over the horizon."""
    per_day = 48
    hours = (np.arange(horizon) % per_day) * 24.0 / per_day
    morning = np.exp(-0.5 * ((hours - 9.0) / 2.0) ** 2)
    evening = np.exp(-0.5 * ((hours - 19.0) / 2.5) ** 2)
    base = 0.55 + 0.15 * (1 - np.cos(2 * np.pi * hours / 24.0)) / 2
    shape = base + 0.3 * morning + 0.35 * evening
    shape = shape * (1 + 0.02 * rng.standard_normal(horizon))
    return np.clip(shape / shape.max(), 0.0, 1.0)


def _random_unit(rng: np.random.Generator, idx: int, n_points: int) -> Unit:
    pmax = float(rng.integers(100, 601))
    pmin = pmax * float(rng.uniform(0.3, 0.6))
    levels = np.linspace(pmin, pmax, n_points) if n_points > 1 else np.array([pmax])
    f1 = float(rng.choice([0.0, 0.02, 0.04]))
    f2 = float(rng.choice([0.0, 0.05, 0.08]))
    pts = tuple(
        OperatingPoint(power=round(float(p), 1), reserve1=round(f1 * float(p), 2),
                       reserve2=round(f2 * float(p), 2),
                       min_dwell_up=int(rng.integers(1, 4)), min_dwell_down=int(rng.integers(1, 4)))
        for p in levels
    )
    min_up = int(rng.integers(2, 7))
    min_down = int(rng.integers(2, 7))
    if rng.random() < 0.6:
        point = int(rng.integers(1, n_points + 1))
        dwell = int(rng.integers(1, 5))
        init = InitialCondition(point=point, dwell=dwell,
                                since_startup=dwell + int(rng.integers(0, 8)), offline_elapsed=1)
    else:
        off = int(rng.integers(1, 10))
        init = InitialCondition(point=0, dwell=off, since_startup=1, offline_elapsed=off)
    return Unit(
        id=f"u{idx:03d}", points=pts, min_up=min_up, min_down=min_down,
        cost_startup=float(rng.integers(20, 200)) * 100.0,
        cost_fixed=float(rng.integers(50, 200)) * 10.0,
        cost_prop=round(float(rng.uniform(20.0, 60.0)), 2),
        init=init,
    )


def generate_instance(seed: int, n_units: int = 10, horizon: int = 48, points_per_unit: int = 3,
                      demand_profile: str = "two_peak", load_factor: float = 0.75,
                      slack: float = 0.10) -> Instance:
    """Random fleet with demands that the all-maximal plans cover with ``slack`` margin.

    ``demand_profile`` is ``"two_peak"`` (daily morning/evening peaks) or
    ``"flat"``.  The result is deterministic for a given ``seed``.
    """
    if n_units < 1 or horizon < 1 or points_per_unit < 1:
        raise InstanceError("n_units, horizon and points_per_unit must all be >= 1")
    if not 0 < load_factor <= 1 or slack < 0:
        raise InstanceError("load_factor must be in (0, 1] and slack >= 0")
    if demand_profile not in ("two_peak", "flat"):
        raise InstanceError(f"unknown demand profile {demand_profile!r}")
    rng = np.random.default_rng(seed)
    units = tuple(_random_unit(rng, k, points_per_unit) for k in range(n_units))

    cover = np.zeros((3, horizon))
    for u in units:
        cover += np.array(plan_vectors(u, max_plan(u, horizon)))
    if not np.all(cover[0] > 0):
        raise InstanceError("fleet cannot produce power in every period; cannot build a feasible demand")
    cap = cover / (1.0 + slack)
    capacity = sum(u.point(u.n_points).power for u in units)

    shape = _demand_shape(horizon, rng) if demand_profile == "two_peak" else np.ones(horizon)
    power = np.minimum(load_factor * capacity / (1.0 + slack) * shape, cap[0])
    r1 = np.minimum(0.02 * power, cap[1])
    r2 = np.minimum(0.05 * power, cap[2])
    rnd = lambda a: tuple(math.floor(float(v) * 10) / 10 for v in a)  # noqa: E731  round down keeps slack
    return Instance(units=units, horizon=horizon,
                    demand_power=rnd(power), demand_r1=rnd(r1), demand_r2=rnd(r2))


def fleet_summary(inst: Instance) -> dict:
    capacity = sum(u.point(u.n_points).power for u in inst.units)
    peak = max(inst.demand_power)
    cover = np.zeros(inst.horizon)
    for u in inst.units:
        cover += plan_vectors(u, max_plan(u, inst.horizon))[0]
    margin = float(np.min(cover / np.maximum(inst.demand_power, 1e-12))) - 1.0
    return {"units": len(inst.units), "horizon": inst.horizon, "capacity": capacity,
            "peak_demand": peak, "min_slack": margin}
