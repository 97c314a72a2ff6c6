"""Sparse LP models and a bounded-variable revised simplex solver.

Models are ``min c x + offset`` subject to ``A x (<=|>=|=) rhs`` and
``lower <= x <= upper``.  Duals are reported as the sensitivity of the
optimal value to the right-hand side, so a ``>=`` row of a minimization
has a nonnegative dual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp

log = logging.getLogger(__name__)

LE, GE, EQ = "<=", ">=", "="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
BLAND_AFTER = 50
PERTURB_AFTER = 50

# basis status codes
BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3


class SolverError(RuntimeError):
    """Numerical breakdown the solver could not recover from."""


@dataclass(frozen=True)
class LpModel:
    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    offset: float = 0.0
    col_names: tuple = ()
    row_names: tuple = ()

    def __post_init__(self):
        m, n = self.A.shape
        if len(self.c) != n or len(self.lower) != n or len(self.upper) != n or len(self.integer) != n:
            raise ValueError("column data does not match the constraint matrix width")
        if len(self.sense) != m or len(self.rhs) != m:
            raise ValueError("row data does not match the constraint matrix height")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")
        if not set(np.unique(self.sense)) <= {LE, GE, EQ}:
            raise ValueError("row sense must be one of '<=', '>=', '='")

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LpModel":
        return replace(self, lower=np.asarray(lower, float), upper=np.asarray(upper, float))

    def relaxed(self) -> "LpModel":
        return replace(self, integer=np.zeros(self.n_cols, dtype=bool))

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x

    def violation(self, x: np.ndarray) -> float:
        """Largest absolute row or bound violation of ``x``."""
        act = self.A @ x
        viol = np.zeros(self.n_rows)
        viol = np.where(self.sense == LE, np.maximum(act - self.rhs, 0), viol)
        viol = np.where(self.sense == GE, np.maximum(self.rhs - act, 0), viol)
        viol = np.where(self.sense == EQ, np.abs(act - self.rhs), viol)
        bnd = np.maximum(self.lower - x, 0) + np.maximum(x - self.upper, 0)
        return float(max(viol.max(initial=0.0), bnd.max(initial=0.0)))

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.offset


class ModelBuilder:
    """Accumulates columns and rows, then freezes into an :class:`LpModel`."""

    def __init__(self):
        self._c, self._lo, self._hi, self._int, self._names = [], [], [], [], []
        self._rows, self._cols, self._vals = [], [], []
        self._sense, self._rhs, self._row_names = [], [], []
        self.offset = 0.0

    def add_var(self, cost=0.0, lower=0.0, upper=np.inf, integer=False, name="") -> int:
        self._c.append(float(cost))
        self._lo.append(float(lower))
        self._hi.append(float(upper))
        self._int.append(bool(integer))
        self._names.append(name)
        return len(self._c) - 1

    def add_row(self, coefs: dict[int, float] | list[tuple[int, float]], sense: str, rhs: float,
                name: str = "") -> int:
        items = coefs.items() if isinstance(coefs, dict) else coefs
        r = len(self._rhs)
        for j, v in items:
            if v != 0:
                self._rows.append(r)
                self._cols.append(j)
                self._vals.append(float(v))
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name)
        return r

    @property
    def n_cols(self) -> int:
        return len(self._c)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    def build(self) -> LpModel:
        A = sp.coo_matrix((self._vals, (self._rows, self._cols)),
                          shape=(len(self._rhs), len(self._c))).tocsr()
        A.sum_duplicates()
        return LpModel(
            c=np.array(self._c, float), A=A, sense=np.array(self._sense, dtype="<U2"),
            rhs=np.array(self._rhs, float), lower=np.array(self._lo, float),
            upper=np.array(self._hi, float), integer=np.array(self._int, bool),
            offset=self.offset, col_names=tuple(self._names), row_names=tuple(self._row_names))


@dataclass(frozen=True)
class Basis:
    """Status of every structural column and every row slack."""

    cols: np.ndarray
    rows: np.ndarray
    # inverse of the basis matrix with basic columns in index order, and the
    # number of rank-one updates since it was last computed from scratch; a hint only
    inverse: np.ndarray | None = field(default=None, repr=False, compare=False)
    inverse_age: int = field(default=0, repr=False, compare=False)

    def extended(self, n_new: int) -> "Basis":
        """Basis for the same model with ``n_new`` columns appended at their lower bound."""
        return Basis(np.concatenate([self.cols, np.full(n_new, AT_LOWER, np.int8)]),
                     self.rows.copy(), self.inverse, self.inverse_age)

    def take_cols(self, keep: np.ndarray) -> "Basis":
        keep = np.asarray(keep, bool)
        still_basic = not np.any(self.cols[~keep] == BASIC)
        return Basis(self.cols[keep].copy(), self.rows.copy(),
                     self.inverse if still_basic else None, self.inverse_age)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = np.nan
    reduced_costs: np.ndarray | None = None
    basis: Basis | None = None
    iterations: int = 0
    method: str = ""
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def dual_objective(model: LpModel, sol: LpSolution) -> float:
    """Lagrangian dual value from the solution's row duals and reduced costs."""
    y, d = sol.duals, sol.reduced_costs
    val = float(model.rhs @ y) + model.offset
    lo_part = np.where(d > 0, d * np.where(np.isfinite(model.lower), model.lower, 0.0), 0.0)
    hi_part = np.where(d < 0, d * np.where(np.isfinite(model.upper), model.upper, 0.0), 0.0)
    return val + float(lo_part.sum() + hi_part.sum())


# ---------------------------------------------------------------------------
# Revised simplex

class _Simplex:
    """Bounded-variable revised simplex on ``[A | I] (x, s) = b``.

    Slack bounds encode the row sense.  Phase 1 minimizes the sum of
    artificial variables placed on rows the starting point violates.
    """

    def __init__(self, model: LpModel, max_iter: int | None = None):
        self.model = model
        m, n = model.A.shape
        self.m, self.n = m, n
        slack_lo = np.where(model.sense == GE, -np.inf, 0.0)
        slack_hi = np.where(model.sense == LE, np.inf, 0.0)
        self.lo = np.concatenate([model.lower, slack_lo])
        self.hi = np.concatenate([model.upper, slack_hi])
        self.cols = sp.hstack([model.A, sp.identity(m, format="csr")], format="csc")
        self.rows_view = self.cols.T.tocsr()
        self.b = model.rhs.astype(float)
        self.max_iter = max_iter or 50 * (m + n) + 1000
        self.iterations = 0
        self.saved_bounds: tuple[np.ndarray, np.ndarray] | None = None

    # -- linear algebra helpers
    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        start, end = self.cols.indptr[j], self.cols.indptr[j + 1]
        col[self.cols.indices[start:end]] = self.cols.data[start:end]
        return col

    def _refactor(self, repair: bool = False):
        B = self.cols[:, self.basic].toarray()
        try:
            self.Binv = np.linalg.inv(B)
            ok = np.all(np.isfinite(self.Binv)) and np.abs(self.Binv).max(initial=0.0) < 1e12
        except np.linalg.LinAlgError:
            ok = False
        if not ok:
            if not repair:
                raise SolverError("singular basis")
            self._repair(B)
        self._recompute_x()
        self.since_refactor = 0

    def _repair(self, B: np.ndarray):
        """Swap dependent basic columns for slacks; shift bounds the new point violates.

        The shifted bounds are restored by :meth:`unperturb`.
        """
        _, R, piv = scipy.linalg.qr(B, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-9 * diag[0]))
        keep = piv[:rank]
        Q = scipy.linalg.qr(B[:, keep], mode="economic")[0] if rank else np.zeros((self.m, 0))
        comp = np.eye(self.m) - Q @ Q.T
        rows = scipy.linalg.qr(comp, pivoting=True)[2][: self.m - rank]
        log.debug("simplex: repairing singular basis (rank %d of %d)", rank, self.m)
        dropped = self.basic[piv[rank:]]
        for j in dropped:
            self.x[j], self.status[j] = self._nonbasic_value(j)
        self.basic = np.concatenate([self.basic[keep], self.n + rows])
        self.status[self.n + rows] = BASIC
        self.Binv = np.linalg.inv(self.cols[:, self.basic].toarray())
        self._recompute_x()
        xb = self.x[self.basic]
        lo, hi = self.lo[self.basic], self.hi[self.basic]
        if np.any(xb < lo - FEAS_TOL) or np.any(xb > hi + FEAS_TOL):
            if self.saved_bounds is None:
                self.saved_bounds = (self.lo.copy(), self.hi.copy())
            self.lo[self.basic] = np.minimum(lo, xb)
            self.hi[self.basic] = np.maximum(hi, xb)

    def _recompute_x(self):
        xn = self.x.copy()
        xn[self.basic] = 0.0
        self.x[self.basic] = self.Binv @ (self.b - self.cols @ xn)

    def _drifted(self, cost: np.ndarray | None = None) -> bool:
        """Recompute basic values; report whether primal or dual residuals are too large."""
        self._recompute_x()
        resid = np.abs(self.cols @ self.x - self.b).max(initial=0.0)
        if resid > 1e-9 * (1.0 + np.abs(self.b).max(initial=0.0)):
            return True
        if cost is not None:
            cb = cost[self.basic]
            y = cb @ self.Binv
            if np.abs(self.cols[:, self.basic].T @ y - cb).max(initial=0.0) > 1e-10:
                return True
        return False

    def _adopt_inverse(self, inverse: np.ndarray | None, age: int = 0) -> bool:
        if inverse is None or inverse.shape != (self.m, self.m) or age >= REFACTOR_EVERY:
            return False
        probe = np.random.default_rng(0).standard_normal(self.m)
        back = inverse @ (self.cols[:, self.basic] @ probe)
        if not np.allclose(back, probe, rtol=0.0, atol=1e-8):
            return False
        self.Binv = inverse.copy()
        self._recompute_x()
        self.since_refactor = age
        return True

    def _nonbasic_value(self, j: int) -> tuple[float, int]:
        lo, hi = self.lo[j], self.hi[j]
        if np.isfinite(lo):
            return lo, AT_LOWER
        if np.isfinite(hi):
            return hi, AT_UPPER
        return 0.0, FREE

    # -- starting bases
    def cold_start(self):
        m, n = self.m, self.n
        total = n + m
        self.status = np.empty(total, np.int8)
        self.x = np.zeros(total)
        for j in range(n):
            self.x[j], self.status[j] = self._nonbasic_value(j)
        r = self.b - self.model.A @ self.x[:n]
        proj = np.clip(r, self.lo[n:], self.hi[n:])
        resid = r - proj
        art = np.flatnonzero(np.abs(resid) > FEAS_TOL)
        self.basic = np.arange(n, n + m)
        self.status[n:] = BASIC
        self.x[n:] = r
        self.n_art = len(art)
        if self.n_art:
            sign = np.sign(resid[art])
            A_art = sp.csc_matrix((sign, (art, np.arange(self.n_art))), shape=(m, self.n_art))
            self.cols = sp.hstack([self.cols, A_art], format="csc")
            self.rows_view = self.cols.T.tocsr()
            self.lo = np.concatenate([self.lo, np.zeros(self.n_art)])
            self.hi = np.concatenate([self.hi, np.full(self.n_art, np.inf)])
            self.status = np.concatenate([self.status, np.full(self.n_art, BASIC, np.int8)])
            self.x = np.concatenate([self.x, np.abs(resid[art])])
            slack = n + art
            self.x[slack] = proj[art]
            for s in slack:
                self.status[s] = AT_LOWER if proj[s - n] == self.lo[s] else AT_UPPER
            self.basic[art] = n + m + np.arange(self.n_art)
        self._refactor()

    def warm_start(self, basis: Basis) -> bool:
        m, n = self.m, self.n
        if len(basis.cols) != n or len(basis.rows) != m:
            return False
        status = np.concatenate([basis.cols, basis.rows]).astype(np.int8)
        basic = np.flatnonzero(status == BASIC)
        if len(basic) != m:
            return False
        x = np.zeros(n + m)
        for j in np.flatnonzero(status != BASIC):
            if status[j] == AT_UPPER and np.isfinite(self.hi[j]):
                x[j] = self.hi[j]
            elif status[j] == AT_LOWER and np.isfinite(self.lo[j]):
                x[j] = self.lo[j]
            else:
                x[j], status[j] = self._nonbasic_value(j)
        self.status, self.x, self.basic, self.n_art = status, x, basic, 0
        if self._adopt_inverse(basis.inverse, basis.inverse_age):
            return True
        try:
            self._refactor()
        except SolverError:
            return False
        return True

    def primal_feasible(self) -> bool:
        xb = self.x[self.basic]
        lo, hi = self.lo[self.basic], self.hi[self.basic]
        return bool(np.all(xb >= lo - FEAS_TOL) and np.all(xb <= hi + FEAS_TOL))

    def dual_feasible(self, cost: np.ndarray) -> bool:
        y = cost[self.basic] @ self.Binv
        d = cost - self.rows_view @ y
        st = self.status
        movable = self.lo < self.hi
        bad = movable & (((st == AT_LOWER) & (d < -OPT_TOL)) | ((st == AT_UPPER) & (d > OPT_TOL))
                         | ((st == FREE) & (np.abs(d) > OPT_TOL)))
        return not bad.any()

    # -- main loop
    def iterate(self, cost: np.ndarray) -> str:
        degenerate = 0
        bland = False
        best = float(cost @ self.x)
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError("iteration limit reached")
            y = cost[self.basic] @ self.Binv
            d = cost - self.rows_view @ y
            q, direction = self._entering(d, bland)
            if q < 0:
                if self.since_refactor and self._drifted(cost):
                    self._refactor(repair=True)
                    y = cost[self.basic] @ self.Binv
                    d = cost - self.rows_view @ y
                    q, direction = self._entering(d, bland)
                if q < 0:
                    self.y, self.d = y, d
                    return OPTIMAL
            alpha = self.Binv @ self._column(q)
            step, leave, to_upper = self._ratio(alpha, direction, q, bland)
            if not np.isfinite(step):
                self.y, self.d = y, d
                return UNBOUNDED
            self.iterations += 1
            self.x[self.basic] -= direction * step * alpha
            self.x[q] += direction * step
            if leave < 0:
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
            else:
                out = self.basic[leave]
                bound = self.hi[out] if to_upper else self.lo[out]
                snapped = abs(self.x[out] - bound) > 1e-12 * (1.0 + abs(bound))
                self.x[out] = bound
                self.status[out] = AT_UPPER if to_upper else AT_LOWER
                self.status[q] = BASIC
                self.basic[leave] = q
                piv = alpha[leave]
                row = self.Binv[leave] / piv
                self.Binv -= np.outer(alpha, row)
                self.Binv[leave] = row
                self.since_refactor += 1
                if self.since_refactor >= REFACTOR_EVERY:
                    self._refactor(repair=True)
                elif snapped:
                    # the leaving value moved onto its bound; keep A x = b exact
                    self._recompute_x()
            # progress is measured against the best objective so far, so that
            # rounding noise cannot switch Bland's rule off
            obj = float(cost @ self.x)
            if obj < best - 1e-10 * (1.0 + abs(best)):
                best = obj
                degenerate = 0
                bland = False
            else:
                degenerate += 1
                if degenerate >= BLAND_AFTER:
                    bland = True
                if degenerate >= PERTURB_AFTER and self.saved_bounds is None:
                    self._perturb()
                    best = float(cost @ self.x)
                    degenerate = 0
                    bland = False

    def _perturb(self):
        """Widen finite bounds by small random amounts to break a degenerate stall."""
        log.debug("simplex: perturbing bounds after a long degenerate stall")
        self.saved_bounds = (self.lo.copy(), self.hi.copy())
        rng = np.random.default_rng(len(self.x))
        size = len(self.x)
        shift = lambda v: (1e-6 + 9e-6 * rng.random(size)) * (1.0 + np.abs(v))  # noqa: E731
        fin_lo = np.isfinite(self.lo) & (self.lo < self.hi)
        fin_hi = np.isfinite(self.hi) & (self.lo < self.hi)
        self.lo = np.where(fin_lo, self.lo - shift(self.lo), self.lo)
        self.hi = np.where(fin_hi, self.hi + shift(self.hi), self.hi)
        self._snap_nonbasic()

    def _snap_nonbasic(self):
        st = self.status
        self.x = np.where(st == AT_LOWER, self.lo, np.where(st == AT_UPPER, self.hi, self.x))
        self._recompute_x()

    def unperturb(self, cost: np.ndarray) -> str:
        """Restore the original bounds and repair the basis; no-op if never perturbed."""
        if self.saved_bounds is None:
            return OPTIMAL
        self.lo, self.hi = self.saved_bounds
        self.saved_bounds = None
        self._snap_nonbasic()
        if not self.primal_feasible():
            if self.dual_iterate(cost) == INFEASIBLE:
                return INFEASIBLE
        return self.iterate(cost)

    def dual_iterate(self, cost: np.ndarray) -> str:
        """Dual simplex from a dual feasible basis; returns OPTIMAL or INFEASIBLE."""
        st = self.status
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError("iteration limit reached")
            basic = self.basic
            xb = self.x[basic]
            lo, hi = self.lo[basic], self.hi[basic]
            below = lo - xb
            above = xb - hi
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= FEAS_TOL:
                if self.since_refactor and self._drifted(cost):
                    self._refactor()
                if not self.primal_feasible():
                    continue
                return OPTIMAL
            y = cost[basic] @ self.Binv
            d = cost - self.rows_view @ y
            row = self.rows_view @ self.Binv[r]
            increase = below[r] > 0  # leaving variable must rise to its lower bound
            movable = (self.lo < self.hi) & (st != BASIC)
            up_ok = (st == AT_LOWER) | (st == FREE)
            dn_ok = (st == AT_UPPER) | (st == FREE)
            if increase:
                elig = movable & ((up_ok & (row < -PIVOT_TOL)) | (dn_ok & (row > PIVOT_TOL)))
            else:
                elig = movable & ((up_ok & (row > PIVOT_TOL)) | (dn_ok & (row < -PIVOT_TOL)))
            cand = np.flatnonzero(elig)
            if len(cand) == 0:
                return INFEASIBLE
            # Harris two-pass: bound the step with relaxed reduced costs, then take
            # the largest pivot inside that bound
            mag = np.abs(row[cand])
            dc = np.abs(d[cand])
            limit = ((dc + OPT_TOL) / mag).min()
            inside = cand[dc / mag <= limit]
            q = int(inside[np.argmax(np.abs(row[inside]))])
            alpha = self.Binv @ self._column(q)
            if abs(alpha[r]) < 1e-7:
                if self.since_refactor:
                    self._refactor()
                    continue
                raise SolverError("dual simplex pivot too small")
            target = lo[r] if increase else hi[r]
            theta = (xb[r] - target) / alpha[r]
            self.iterations += 1
            self.x[basic] -= theta * alpha
            self.x[q] += theta
            out = basic[r]
            self.x[out] = target
            self.status[out] = AT_LOWER if increase else AT_UPPER
            self.status[q] = BASIC
            basic[r] = q
            piv_row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, piv_row)
            self.Binv[r] = piv_row
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()

    def _entering(self, d: np.ndarray, bland: bool) -> tuple[int, int]:
        st = self.status
        movable = self.lo < self.hi
        up = ((st == AT_LOWER) | (st == FREE)) & (d < -OPT_TOL) & movable
        down = ((st == AT_UPPER) | (st == FREE)) & (d > OPT_TOL) & movable
        cand = np.flatnonzero(up | down)
        if len(cand) == 0:
            return -1, 0
        if bland:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(np.abs(d[cand]))])
        return q, (1 if up[q] else -1)

    def _ratio(self, alpha: np.ndarray, direction: int, q: int, bland: bool):
        """Ratio test; returns ``(step, leaving row or -1, to_upper)``.

        Among rows tying for the minimum ratio, Dantzig mode takes the largest
        pivot and Bland mode the smallest basic index whose pivot is not tiny.
        """
        basic = self.basic
        xb = self.x[basic]
        rate = direction * alpha  # basic values move by -rate * step
        lo, hi = self.lo[basic], self.hi[basic]
        ratios = np.full(self.m, np.inf)
        to_upper = np.zeros(self.m, bool)
        fin_lo = (rate > 1e-7) & np.isfinite(lo)
        ratios[fin_lo] = (xb[fin_lo] - lo[fin_lo]) / rate[fin_lo]
        fin_hi = (rate < -1e-7) & np.isfinite(hi)
        ratios[fin_hi] = (hi[fin_hi] - xb[fin_hi]) / -rate[fin_hi]
        to_upper[fin_hi] = True
        ratios = np.maximum(ratios, 0.0)
        flip = self.hi[q] - self.lo[q]
        best = ratios.min(initial=np.inf)
        if flip <= best:
            return flip, -1, False
        if not np.isfinite(best):
            return np.inf, -1, False
        ties = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + best))
        mag = np.abs(alpha[ties])
        strong = ties[mag >= 1e-7]
        if bland and len(strong):
            leave = int(strong[np.argmin(basic[strong])])
        else:
            leave = int(ties[np.argmax(mag)])
        return best, leave, bool(to_upper[leave])


def _equilibrate(model: LpModel) -> tuple[LpModel, np.ndarray, np.ndarray]:
    """Power-of-two row then column scaling so every nonzero row and column peaks near 1."""
    A = model.A.tocsr()
    if A.shape[0] == 0 or A.shape[1] == 0:
        return model, np.ones(A.shape[0]), np.ones(A.shape[1])
    absA = abs(A)
    row_max = absA.max(axis=1).toarray().ravel()
    r = np.where(row_max > 0, 2.0 ** -np.round(np.log2(np.where(row_max > 0, row_max, 1.0))), 1.0)
    A1 = sp.diags(r) @ A
    col_max = abs(A1).max(axis=0).toarray().ravel()
    c = np.where(col_max > 0, 2.0 ** -np.round(np.log2(np.where(col_max > 0, col_max, 1.0))), 1.0)
    scaled = replace(model, A=(A1 @ sp.diags(c)).tocsr(), rhs=model.rhs * r, c=model.c * c,
                     lower=model.lower / c, upper=model.upper / c)
    return scaled, r, c


def _solve_simplex(model: LpModel, warm_basis: Basis | None, max_iter: int | None) -> LpSolution:
    original = model
    model, row_scale, col_scale = _equilibrate(model)
    sx = _Simplex(model, max_iter)
    n, m = sx.n, sx.m
    # tolerances act on costs normalized to unit magnitude
    scale = max(1.0, float(np.abs(model.c).max(initial=0.0)))
    cost2 = np.zeros(n + m)
    cost2[:n] = model.c / scale
    warm = warm_basis is not None and sx.warm_start(warm_basis)
    if warm and not sx.primal_feasible():
        # a parent basis after a bound change: repair with dual simplex if possible
        repaired = False
        if sx.dual_feasible(cost2):
            try:
                if sx.dual_iterate(cost2) == INFEASIBLE:
                    return LpSolution(INFEASIBLE, iterations=sx.iterations, method="simplex",
                                      info={"warm": True})
                repaired = True
            except SolverError as exc:
                log.debug("dual simplex warm start abandoned: %s", exc)
        if not repaired:
            warm = False
            sx = _Simplex(model, max_iter)
    if not warm:
        sx.cold_start()
        if sx.n_art:
            cost1 = np.zeros(len(sx.x))
            cost1[n + m:] = 1.0
            sx.iterate(cost1)
            sx.unperturb(cost1)
            infeas = float(sx.x[n + m:].sum())
            if infeas > FEAS_TOL * max(1.0, np.abs(model.rhs).max(initial=0.0)):
                return LpSolution(INFEASIBLE, iterations=sx.iterations, method="simplex")
            sx.hi[n + m:] = 0.0
            sx.x[n + m:] = np.minimum(sx.x[n + m:], 0.0)
    if len(sx.x) > len(cost2):
        cost2 = np.concatenate([cost2, np.zeros(len(sx.x) - len(cost2))])
    status = sx.iterate(cost2)
    if status == OPTIMAL:
        status = sx.unperturb(cost2)
    if status == INFEASIBLE:
        return LpSolution(INFEASIBLE, iterations=sx.iterations, method="simplex")
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=sx.iterations, method="simplex")
    x = sx.x[:n] * col_scale
    order = np.argsort(sx.basic)
    inverse = sx.Binv[order] if np.all(sx.basic < n + m) else None
    basis = Basis(sx.status[:n].copy(), sx.status[n:n + m].copy(), inverse, sx.since_refactor)
    if sx.n_art and np.any(sx.status[n + m:] == BASIC):
        # a zero artificial is still basic; its row slack stands in for it
        basis = _repair_basis(sx, basis)
    sol = LpSolution(OPTIMAL, x=x, duals=sx.y * scale * row_scale,
                     objective=original.objective(x),
                     reduced_costs=sx.d[:n] * scale / col_scale, basis=basis,
                     iterations=sx.iterations,
                     method="simplex", info={"warm": warm})
    return sol


def _repair_basis(sx: _Simplex, basis: Basis) -> Basis | None:
    n, m = sx.n, sx.m
    rows = basis.rows.copy()
    for k in np.flatnonzero(sx.status[n + m:] == BASIC):
        r = sx.cols[:, n + m + k].indices[0]
        rows[r] = BASIC
    if np.count_nonzero(basis.cols == BASIC) + np.count_nonzero(rows == BASIC) != m:
        return None
    return Basis(basis.cols, rows)


def _solve_highs(model: LpModel) -> LpSolution:
    from scipy.optimize import linprog

    A = model.A
    le = model.sense == LE
    ge = model.sense == GE
    eq = model.sense == EQ
    ub_rows = np.flatnonzero(le | ge)
    sign = np.where(ge[ub_rows], -1.0, 1.0)
    A_ub = sp.diags(sign) @ A[ub_rows] if len(ub_rows) else None
    b_ub = sign * model.rhs[ub_rows] if len(ub_rows) else None
    eq_rows = np.flatnonzero(eq)
    A_eq = A[eq_rows] if len(eq_rows) else None
    b_eq = model.rhs[eq_rows] if len(eq_rows) else None
    bounds = np.column_stack([np.where(np.isfinite(model.lower), model.lower, -np.inf),
                              np.where(np.isfinite(model.upper), model.upper, np.inf)])
    res = linprog(model.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds")
    if res.status == 2:
        return LpSolution(INFEASIBLE, method="highs")
    if res.status == 3:
        return LpSolution(UNBOUNDED, method="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    y = np.zeros(model.n_rows)
    if len(ub_rows):
        y[ub_rows] = sign * res.ineqlin.marginals
    if len(eq_rows):
        y[eq_rows] = res.eqlin.marginals
    d = res.lower.marginals + res.upper.marginals
    x = np.asarray(res.x, float)
    return LpSolution(OPTIMAL, x=x, duals=y, objective=model.objective(x), reduced_costs=d,
                      iterations=int(getattr(res, "nit", 0)), method="highs")


AUTO_SIMPLEX_LIMIT = 400_000


def solve_lp(model: LpModel, warm_basis: Basis | None = None, method: str = "auto",
             max_iter: int | None = None) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality flags are ignored).

    ``method`` is ``"simplex"`` (in-house, supports ``warm_basis``),
    ``"highs"`` (scipy's HiGHS dual simplex) or ``"auto"``, which picks the
    in-house solver when ``rows * cols`` is at most ``AUTO_SIMPLEX_LIMIT`` or
    a warm basis is supplied, and falls back to HiGHS if it fails.
    """
    fallback = method == "auto"
    if method == "auto":
        small = model.n_rows * model.n_cols <= AUTO_SIMPLEX_LIMIT
        method = "simplex" if (small or warm_basis is not None) else "highs"
    if method == "simplex":
        try:
            sol = _solve_simplex(model, warm_basis, max_iter)
        except SolverError as exc:
            if not fallback:
                raise
            log.warning("simplex failed (%s); retrying with HiGHS", exc)
            sol = _solve_highs(model)
    elif method == "highs":
        sol = _solve_highs(model)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    log.debug("solve_lp[%s]: %s obj=%.9g iters=%d", sol.method, sol.status, sol.objective,
              sol.iterations)
    return sol


# ---------------------------------------------------------------------------
# CPLEX LP text format

def _lp_name(name: str, prefix: str, k: int) -> str:
    if not name:
        return f"{prefix}{k}"
    return "".join(ch if ch.isalnum() or ch in "_." else "_" for ch in name)


def _terms(coefs, names) -> str:
    out = []
    for j, v in coefs:
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {abs(v):.17g} {names[j]}")
    if not out:
        return "0 " + names[0] if names else "0"
    text = " ".join(out)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: LpModel, path) -> None:
    """Write ``model`` in CPLEX LP format (readable by HiGHS, CPLEX, Gurobi, GLPK)."""
    n = model.n_cols
    names = [_lp_name(model.col_names[j] if j < len(model.col_names) else "", "x", j)
             for j in range(n)]
    if len(set(names)) != n:
        names = [f"x{j}" for j in range(n)]
    # the constant objective offset is not part of the file
    lines = [f"\\ objective offset {model.offset:.17g}", "Minimize"]
    obj = [(j, v) for j, v in enumerate(model.c) if v != 0]
    lines.append(" obj: " + _terms(obj, names))
    lines.append("Subject To")
    A = model.A.tocsr()
    for i in range(model.n_rows):
        s, e = A.indptr[i], A.indptr[i + 1]
        coefs = list(zip(A.indices[s:e].tolist(), A.data[s:e].tolist()))
        if not coefs:
            continue
        op = {LE: "<=", GE: ">=", EQ: "="}[model.sense[i]]
        lines.append(f" r{i}: {_terms(coefs, names)} {op} {model.rhs[i]:.17g}")
    lines.append("Bounds")
    for j in range(n):
        lo, hi = model.lower[j], model.upper[j]
        if not np.isfinite(lo) and not np.isfinite(hi):
            lines.append(f" {names[j]} free")
            continue
        lo_s = "-inf" if not np.isfinite(lo) else f"{lo:.17g}"
        hi_s = "+inf" if not np.isfinite(hi) else f"{hi:.17g}"
        lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
    ints = [names[j] for j in range(n) if model.integer[j]]
    if ints:
        lines.append("General")
        for k in range(0, len(ints), 8):
            lines.append(" " + " ".join(ints[k:k + 8]))
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
