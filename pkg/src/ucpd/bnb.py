"""Small exact branch-and-bound over :class:`~ucpd.lp.LpModel` integrality flags."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .lp import INFEASIBLE, UNBOUNDED, Basis, LpModel, SolverError, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6

OPTIMAL = "optimal"
TIME_LIMIT = "time_limit"
NODE_LIMIT = "node_limit"


@dataclass
class IlpResult:
    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int
    root_bound: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def gap(self) -> float:
        if self.x is None:
            return math.inf
        return abs(self.objective - self.bound) / (1.0 + abs(self.objective))


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    bound: float
    basis: Basis | None
    depth: int


def _pick_branch(x: np.ndarray, integer: np.ndarray) -> int:
    """Most fractional integer column, smallest index on ties; -1 if integral."""
    idx = np.flatnonzero(integer)
    if len(idx) == 0:
        return -1
    frac = np.abs(x[idx] - np.round(x[idx]))
    if frac.max() <= INT_TOL:
        return -1
    dist = np.abs(x[idx] - np.floor(x[idx]) - 0.5)
    best = dist.min()
    cand = idx[(dist <= best + 1e-12) & (frac > INT_TOL)]
    return int(cand.min())


def solve_ilp(model: LpModel, time_limit: float | None = None, gap_limit: float = 1e-9,
              node_limit: int | None = None, lp_method: str = "auto") -> IlpResult:
    """Depth-first branch-and-bound with best-bound backtracking.

    The search dives into the child on the side the fractional value rounds
    to and parks its sibling; when a dive ends the open node with the
    smallest parent bound is resumed.  Raises :class:`SolverError` if the
    root relaxation is unbounded.
    """
    start = time.monotonic()
    integer = np.asarray(model.integer, bool)
    tie = itertools.count()
    heap: list[tuple[float, int, _Node]] = []
    inc_x, inc_val = None, math.inf
    reported = -math.inf
    nodes = 0
    root_bound = math.nan

    def tol(val):
        return gap_limit * (1.0 + abs(val))

    current = _Node(model.lower.copy(), model.upper.copy(), -math.inf, None, 0)
    status = OPTIMAL
    while True:
        if current is None:
            while heap and heap[0][0] >= inc_val - tol(inc_val):
                heapq.heappop(heap)
            if not heap:
                break
            current = heapq.heappop(heap)[2]
        if time_limit is not None and time.monotonic() - start > time_limit:
            heapq.heappush(heap, (current.bound, next(tie), current))
            status = TIME_LIMIT
            break
        if node_limit is not None and nodes >= node_limit:
            heapq.heappush(heap, (current.bound, next(tie), current))
            status = NODE_LIMIT
            break

        node, current = current, None
        nodes += 1
        sol = solve_lp(model.with_bounds(node.lower, node.upper), warm_basis=node.basis,
                       method=lp_method)
        if sol.status == UNBOUNDED:
            raise SolverError("LP relaxation is unbounded")
        if nodes == 1:
            root_bound = sol.objective if sol.optimal else math.inf
        if sol.status == INFEASIBLE or sol.objective >= inc_val - tol(inc_val):
            pass
        else:
            j = _pick_branch(sol.x, integer)
            if j < 0:
                inc_x, inc_val = sol.x.copy(), sol.objective
                log.debug("bnb: incumbent %.9g at node %d", inc_val, nodes)
            else:
                v = sol.x[j]
                down_hi = node.upper.copy()
                down_hi[j] = math.floor(v)
                up_lo = node.lower.copy()
                up_lo[j] = math.ceil(v)
                down = _Node(node.lower, down_hi, sol.objective, sol.basis, node.depth + 1)
                up = _Node(up_lo, node.upper, sol.objective, sol.basis, node.depth + 1)
                first, second = (up, down) if v - math.floor(v) >= 0.5 else (down, up)
                heapq.heappush(heap, (second.bound, next(tie), second))
                current = first

        open_bounds = [h[0] for h in heap]
        if current is not None:
            open_bounds.append(current.bound)
        bound = min(open_bounds + [inc_val])
        reported = max(reported, bound)
        if inc_x is not None and inc_val - reported <= tol(inc_val):
            heap.clear()
            current = None
            break

    if inc_x is None and status == OPTIMAL:
        return IlpResult(INFEASIBLE, None, math.inf, math.inf, nodes, root_bound)
    if status == OPTIMAL:
        reported = max(reported, min([h[0] for h in heap] + [inc_val]))
        reported = min(reported, inc_val)
    else:
        reported = max(reported, min([h[0] for h in heap] + [inc_val]))
    return IlpResult(status, inc_x, inc_val, reported, nodes, root_bound)
