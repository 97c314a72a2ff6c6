"""Compact ILP over per-period state and move binaries.

For unit ``u``, period ``t`` and point ``i`` the model has

* ``s[t, i]`` (``i = 1..N``): unit operates at point ``i`` in period ``t``;
* ``up[t, i]`` (``i = 1..N``): unit moved from ``i-1`` to ``i`` at ``t``
  (``up[t, 1]`` is a start-up);
* ``down[t, i]`` (``i = 0..N-1``): unit moved from ``i+1`` to ``i`` at ``t``
  (``down[t, 0]`` is a shut-down).

Periods ``t <= 0`` are constants derived from the unit's initial condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .lp import EQ, GE, LE, LpModel, LpSolution, ModelBuilder
from .model import Instance, InstanceError, Plan, Unit

INT_TOL = 1e-6

STATE, MOVE_UP, MOVE_DOWN = "state", "move_up", "move_down"


class DecodeError(ValueError):
    """A solution that does not decode to integer plans."""

    def __init__(self, message: str, columns: Sequence[int] = ()):
        super().__init__(message)
        self.columns = tuple(columns)


@dataclass(frozen=True)
class UnitVars:
    """Column positions for one unit; arrays are indexed ``[t - 1, i]``."""

    unit_id: str
    n_points: int
    state: np.ndarray  # (T, N+1), column 0 unused (-1)
    up: np.ndarray  # (T, N+1), column 0 unused (-1)
    down: np.ndarray  # (T, N+1), column N unused (-1)


@dataclass(frozen=True)
class VarIndex:
    units: tuple[UnitVars, ...]
    horizon: int

    def unit(self, unit_id: str) -> UnitVars:
        for uv in self.units:
            if uv.unit_id == unit_id:
                return uv
        raise KeyError(unit_id)

    def column(self, kind: str, unit_id: str, period: int, point: int) -> int:
        uv = self.unit(unit_id)
        table = {STATE: uv.state, MOVE_UP: uv.up, MOVE_DOWN: uv.down}[kind]
        col = int(table[period - 1, point])
        if col < 0:
            raise KeyError((kind, unit_id, period, point))
        return col

    def entries(self) -> Iterator[tuple[str, str, int, int, int]]:
        """Yield ``(kind, unit, period, point, column)`` for every variable."""
        for uv in self.units:
            for kind, table in ((STATE, uv.state), (MOVE_UP, uv.up), (MOVE_DOWN, uv.down)):
                for (t0, i), col in np.ndenumerate(table):
                    if col >= 0:
                        yield kind, uv.unit_id, t0 + 1, i, int(col)

    @property
    def n_cols(self) -> int:
        return sum(int((uv.state >= 0).sum() + (uv.up >= 0).sum() + (uv.down >= 0).sum())
                   for uv in self.units)


@dataclass(frozen=True)
class History:
    """Pre-horizon constants for periods ``1 - depth .. 0``."""

    depth: int
    state: np.ndarray  # (depth, N+1); row k is period k + 1 - depth
    online: np.ndarray  # (depth,)
    startup: np.ndarray  # (depth,)

    def _row(self, t: int) -> int:
        return t - 1 + self.depth

    def s(self, t: int, i: int) -> float:
        if t < 1 - self.depth:
            return 0.0
        return float(self.state[self._row(t), i])

    def x(self, t: int) -> float:
        if t < 1 - self.depth:
            return float(self.online[0])
        return float(self.online[self._row(t)])

    def y_start(self, t: int) -> float:
        if t < 1 - self.depth:
            return 0.0
        return float(self.startup[self._row(t)])


def unit_history(unit: Unit) -> History:
    """Encode the initial condition as constant states before period 1.

    The unit sits at ``init.point`` for the last ``init.dwell`` periods; what it
    did earlier is left at zero, which only matters through rows already
    implied by period 0.  Online units started up ``since_startup`` periods
    ago; offline units shut down ``offline_elapsed`` periods ago.
    """
    init = unit.init
    depth = unit.lookback() + 1
    ts = np.arange(1 - depth, 1)
    state = np.zeros((depth, unit.n_points + 1))
    if init.point > 0:
        state[ts >= 1 - init.dwell, init.point] = 1.0
        online = (ts >= 1 - init.since_startup).astype(float)
        startup = (ts == 1 - init.since_startup).astype(float)
    else:
        online = (ts < 1 - init.offline_elapsed).astype(float)
        startup = np.zeros(depth)
    return History(depth, state, online, startup)


def add_unit_vars(b: ModelBuilder, unit: Unit, horizon: int, state_cost: np.ndarray,
                  startup_cost: float, integer: bool = True) -> UnitVars:
    """Add the binaries of one unit. ``state_cost`` has shape ``(T, N+1)``."""
    N, T = unit.n_points, horizon
    state = np.full((T, N + 1), -1, dtype=np.int64)
    up = np.full((T, N + 1), -1, dtype=np.int64)
    down = np.full((T, N + 1), -1, dtype=np.int64)
    uid = unit.id
    for t in range(1, T + 1):
        for i in range(1, N + 1):
            state[t - 1, i] = b.add_var(state_cost[t - 1, i], 0.0, 1.0, integer, f"s[{uid},{t},{i}]")
        for i in range(1, N + 1):
            cost = startup_cost if i == 1 else 0.0
            up[t - 1, i] = b.add_var(cost, 0.0, 1.0, integer, f"yup[{uid},{t},{i}]")
        for i in range(0, N):
            down[t - 1, i] = b.add_var(0.0, 0.0, 1.0, integer, f"ydn[{uid},{t},{i}]")
    return UnitVars(uid, N, state, up, down)


class _Expr:
    """Linear expression over columns plus a constant."""

    __slots__ = ("coefs", "const")

    def __init__(self):
        self.coefs: dict[int, float] = {}
        self.const = 0.0

    def add(self, col: int, coef: float = 1.0):
        self.coefs[col] = self.coefs.get(col, 0.0) + coef
        return self


def _emit(b: ModelBuilder, e: _Expr, sense: str, rhs: float, name: str):
    coefs = {j: v for j, v in e.coefs.items() if v != 0}
    rhs = rhs - e.const
    if not coefs:
        ok = {LE: 0 <= rhs + 1e-9, GE: 0 >= rhs - 1e-9, EQ: abs(rhs) <= 1e-9}[sense]
        if not ok:
            raise InstanceError(f"initial condition contradicts constraint {name}")
        return
    b.add_row(coefs, sense, rhs, name)


def add_unit_rows(b: ModelBuilder, unit: Unit, uv: UnitVars, horizon: int,
                  gate_shutdown: bool = True, variant: str = "tight") -> None:
    """Add the dynamic constraints of one unit.

    ``variant="weak"`` replaces the aggregated transition and min-stop rows by
    per-point and per-move disaggregated forms that admit the same integer
    plans but a looser relaxation.
    """
    if variant not in ("tight", "weak"):
        raise ValueError(f"unknown formulation variant {variant!r}")
    N, T = unit.n_points, horizon
    hist = unit_history(unit)
    uid = unit.id

    def add_at_least(e: _Expr, t: int, i: int, coef: float = 1.0):
        # coef * sum_{j >= i} s[t, j]
        if i <= 0:
            e.const += coef
            return e
        for j in range(i, N + 1):
            if t >= 1:
                e.add(int(uv.state[t - 1, j]), coef)
            else:
                e.const += coef * hist.s(t, j)
        return e

    def add_online(e: _Expr, t: int, coef: float = 1.0):
        if t >= 1:
            return add_at_least(e, t, 1, coef)
        e.const += coef * hist.x(t)
        return e

    def add_state(e: _Expr, t: int, i: int, coef: float = 1.0):
        if t >= 1:
            e.add(int(uv.state[t - 1, i]), coef)
        else:
            e.const += coef * hist.s(t, i)
        return e

    def add_startup(e: _Expr, t: int, coef: float = 1.0):
        if t >= 1:
            e.add(int(uv.up[t - 1, 1]), coef)
        else:
            e.const += coef * hist.y_start(t)
        return e

    for t in range(1, T + 1):
        e = _Expr()
        for i in range(1, N + 1):
            e.add(int(uv.state[t - 1, i]))
        _emit(b, e, LE, 1.0, f"gub[{uid},{t}]")

    for t in range(1, T + 1):
        for i in range(1, N + 1):
            e = _Expr()
            e.add(int(uv.down[t - 1, i - 1]))
            add_at_least(e, t, i)
            add_at_least(e, t - 1, i, -1.0)
            e.add(int(uv.up[t - 1, i]), -1.0)
            _emit(b, e, EQ, 0.0, f"couple[{uid},{t},{i}]")

    if variant == "tight":
        for t in range(0, T):
            for i in range(2, N + 1):
                e = add_at_least(_Expr(), t, i)
                add_at_least(e, t + 1, i - 1, -1.0)
                _emit(b, e, LE, 0.0, f"trans_up[{uid},{t},{i}]")
            for i in range(1, N):
                e = add_at_least(_Expr(), t, i)
                add_at_least(e, t + 1, i + 1, -1.0)
                _emit(b, e, GE, 0.0, f"trans_dn[{uid},{t},{i}]")
    else:
        # s[t, i] <= s[t+1, i-1] + s[t+1, i] + s[t+1, i+1], offline as 1 - sum s
        for t in range(0, T):
            for i in range(0, N + 1):
                e = _Expr()
                if i == 0:
                    add_online(e, t, -1.0)
                    e.const += 1.0
                    add_online(e, t + 1, 1.0)
                    e.const -= 1.0
                    if N >= 1:
                        add_state(e, t + 1, 1, -1.0)
                else:
                    add_state(e, t, i)
                    for j in (i - 1, i, i + 1):
                        if j == 0:
                            e.const -= 1.0
                            add_online(e, t + 1, 1.0)
                        elif j <= N:
                            add_state(e, t + 1, j, -1.0)
                _emit(b, e, LE, 0.0, f"trans_nb[{uid},{t},{i}]")

    for i in range(1, N + 1):
        pt = unit.point(i)
        d_up = pt.min_dwell_up if i < N else 0
        d_dn = pt.min_dwell_down if (i >= 2 or gate_shutdown) else 0
        span = max(d_up, d_dn)
        for t in range(1 - span, T):
            ups = [int(uv.up[tp - 1, i + 1]) for tp in range(max(t + 1, 1), min(t + d_up, T) + 1)]
            dns = [int(uv.down[tp - 1, i - 1]) for tp in range(max(t + 1, 1), min(t + d_dn, T) + 1)]
            if not ups and not dns:
                continue
            if variant == "tight":
                e = _Expr()
                for col in ups + dns:
                    e.add(col)
                add_state(e, t, i, -1.0)
                _emit(b, e, LE, 0.0, f"minstop[{uid},{t},{i}]")
            else:
                for col in ups + dns:
                    e = _Expr().add(col)
                    add_state(e, t, i, -1.0)
                    _emit(b, e, LE, 0.0, f"minstop_w[{uid},{t},{i},{col}]")

    for t in range(1, T + 1):
        e = _Expr()
        for tp in range(t - unit.min_up + 1, t + 1):
            add_startup(e, tp)
        add_online(e, t, -1.0)
        _emit(b, e, LE, 0.0, f"minup[{uid},{t}]")

    for t in range(1, T + 1):
        e = _Expr()
        for tp in range(t - unit.min_down + 1, t + 1):
            add_startup(e, tp)
        add_online(e, t - unit.min_down)
        _emit(b, e, LE, 1.0, f"mindown[{uid},{t}]")


def state_costs(unit: Unit, horizon: int) -> np.ndarray:
    """Per-period cost of each state, shape ``(T, N+1)`` (column 0 offline = 0)."""
    p, _, _ = unit.levels()
    per_point = unit.cost_prop * p + unit.cost_fixed
    per_point[0] = 0.0
    return np.tile(per_point, (horizon, 1))


def build_compact(instance: Instance, gate_shutdown: bool = True, integer: bool = True,
                  variant: str = "tight") -> tuple[LpModel, VarIndex]:
    T = instance.horizon
    b = ModelBuilder()
    index = []
    for u in instance.units:
        index.append(add_unit_vars(b, u, T, state_costs(u, T), u.cost_startup, integer))
    for u, uv in zip(instance.units, index):
        add_unit_rows(b, u, uv, T, gate_shutdown, variant)
    demands = instance.demands()
    for k, tag in enumerate(("power", "r1", "r2")):
        for t in range(1, T + 1):
            e = _Expr()
            for u, uv in zip(instance.units, index):
                level = u.levels()[k]
                for i in range(1, u.n_points + 1):
                    if level[i]:
                        e.add(int(uv.state[t - 1, i]), level[i])
            b.add_row(e.coefs, GE, demands[k, t - 1], f"demand_{tag}[{t}]")
    return b.build(), VarIndex(tuple(index), T)


def expected_dimensions(instance: Instance, gate_shutdown: bool = True) -> tuple[int, int]:
    """Closed-form ``(rows, cols)`` of the tight compact model."""
    T = instance.horizon
    rows, cols = 3 * T, 0
    for u in instance.units:
        N = u.n_points
        cols += 3 * N * T
        rows += T + N * T + 2 * (N - 1) * T + 2 * T
        for i in range(1, N + 1):
            pt = u.point(i)
            span = max(pt.min_dwell_up if i < N else 0,
                       pt.min_dwell_down if (i >= 2 or gate_shutdown) else 0)
            if span:
                rows += T - 1 + span
    return rows, cols


# ---------------------------------------------------------------------------
# encoding / decoding

def encode_plan(uv: UnitVars, unit: Unit, plan: Plan | Sequence[int], x: np.ndarray) -> None:
    """Write the state and move binaries of ``plan`` into ``x`` in place."""
    points = plan.points if isinstance(plan, Plan) else tuple(plan)
    prev = unit.init.point
    for t, cur in enumerate(points, start=1):
        if cur > 0:
            x[uv.state[t - 1, cur]] = 1.0
        if cur == prev + 1:
            x[uv.up[t - 1, cur]] = 1.0
        elif cur == prev - 1:
            x[uv.down[t - 1, cur]] = 1.0
        prev = cur


def encode_plans(index: VarIndex, instance: Instance, plans: Sequence[Plan]) -> np.ndarray:
    x = np.zeros(index.n_cols)
    by_id = {p.unit_id: p for p in plans}
    for u, uv in zip(instance.units, index.units):
        encode_plan(uv, u, by_id[u.id], x)
    return x


def decode_solution(x: np.ndarray | LpSolution, index: VarIndex) -> dict[str, np.ndarray]:
    """Per-unit state matrices of shape ``(T, N+1)``; column 0 is the offline share."""
    x = x.x if isinstance(x, LpSolution) else np.asarray(x)
    out = {}
    for uv in index.units:
        mat = np.zeros((index.horizon, uv.n_points + 1))
        mat[:, 1:] = x[uv.state[:, 1:]]
        mat[:, 0] = 1.0 - mat[:, 1:].sum(axis=1)
        out[uv.unit_id] = mat
    return out


def decode_integer_solution(x: np.ndarray | LpSolution, index: VarIndex,
                            tol: float = INT_TOL) -> list[Plan]:
    x = x.x if isinstance(x, LpSolution) else np.asarray(x)
    frac = []
    for uv in index.units:
        cols = uv.state[:, 1:].ravel()
        vals = x[cols]
        bad = np.abs(vals - np.round(vals)) > tol
        frac.extend(int(c) for c in cols[bad])
    if frac:
        raise DecodeError(f"{len(frac)} fractional state columns: {frac[:10]}", frac)
    plans = []
    for uv in index.units:
        st = np.round(x[uv.state[:, 1:]]).astype(int)
        points = np.where(st.any(axis=1), st.argmax(axis=1) + 1, 0)
        plans.append(Plan(uv.unit_id, tuple(int(p) for p in points)))
    return plans
