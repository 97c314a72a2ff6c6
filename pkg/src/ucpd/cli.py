"""Command-line entry point: ``ucpd generate | solve | conjecture``.

Exit codes: 0 success, 1 internal error, 2 usage error or missing file,
3 infeasible instance, 4 integrality counter-example found.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bnb import solve_ilp
from .colgen import INFEASIBLE as CG_INFEASIBLE
from .colgen import BoundError, CgConfig, CgError, cg_solve, compare_bounds, write_log_csv
from .compact import build_compact
from .lp import SolverError, solve_lp
from .model import InstanceError, fleet_summary, generate_instance, read_instance, write_instance
from .subproblem import ConjectureReport, check_conjecture, write_counter_example

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_COUNTER_EXAMPLE = 4

THREADS_ENV = "UCPD_THREADS"

log = logging.getLogger("ucpd")


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.10g}"
    return str(v)


def render_table(rows: list[tuple[str, object]]) -> str:
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {_fmt(v)}\n" for k, v in rows)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    inst = generate_instance(args.seed, args.units, args.horizon, args.points)
    write_instance(inst, args.out)
    s = fleet_summary(inst)
    print(render_table([("file", args.out), ("units", s["units"]), ("horizon", s["horizon"]),
                        ("capacity", float(s["capacity"])), ("peak_demand", float(s["peak_demand"])),
                        ("min_slack", float(s["min_slack"]))]), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve

def _solve_rows(inst, method: str, time_limit: float | None, threads: int, log_path):
    cfg = CgConfig(threads=threads, time_limit=time_limit)
    rows: list[tuple[str, object]] = [("method", method)]
    infeasible = False
    if method == "compact-lp":
        model, _ = build_compact(inst, integer=False)
        sol = solve_lp(model)
        infeasible = not sol.optimal
        rows += [("status", sol.status), ("compact_lp", sol.objective)]
    elif method == "compact-ilp":
        model, _ = build_compact(inst)
        res = solve_ilp(model, time_limit=time_limit)
        infeasible = res.status == "infeasible"
        rows += [("status", res.status), ("compact_ilp", res.objective),
                 ("compact_ilp_bound", res.bound), ("nodes", res.nodes)]
    elif method == "cg":
        res = cg_solve(inst, cfg)
        infeasible = res.status == CG_INFEASIBLE
        rows += [("status", res.status), ("cg_bound", res.lower_bound),
                 ("rmp_value", res.rmp_value), ("lagrangian_bound", res.lagrangian_bound),
                 ("cg_iterations", res.iterations), ("cg_columns", len(res.pool)),
                 ("dual_zero_fraction", res.mean_dual_zero_fraction())]
        if log_path:
            write_log_csv(res.log, log_path, timing=False)
    else:
        rep = compare_bounds(inst, cfg, ilp_time_limit=time_limit)
        infeasible = rep["status"] == "infeasible"
        for key in ("status", "compact_lp", "cg_bound", "rel_diff", "cg_iterations", "cg_columns",
                    "dual_zero_fraction", "compact_ilp_status", "compact_ilp", "compact_ilp_bound"):
            if key in rep:
                rows.append((key, rep[key]))
    return rows, infeasible


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    rows, infeasible = _solve_rows(inst, args.method, args.time_limit, args.threads, args.log)
    rows.insert(0, ("instance", Path(args.instance).name))
    print(render_table(rows), end="")
    if args.report:
        Path(args.report).write_text(render_csv(["metric", "value"], [list(r) for r in rows]),
                                     encoding="utf-8")
    return EXIT_INFEASIBLE if infeasible else EXIT_OK


# ---------------------------------------------------------------------------
# conjecture

def _spread(items: list, k: int) -> list:
    """Up to ``k`` items evenly spaced over the list, always keeping the last."""
    if k <= 0 or not items:
        return []
    if len(items) <= k:
        return list(items)
    idx = np.unique(np.linspace(0, len(items) - 1, k).round().astype(int))
    return [items[i] for i in idx]


def cmd_conjecture(args) -> int:
    if args.instance:
        inst = read_instance(args.instance)
        res = cg_solve(inst, CgConfig(threads=args.threads, keep_duals=True))
        harvested = _spread(res.harvested, args.harvest)
    else:
        inst = generate_instance(args.seed, args.random_units, args.horizon, args.points)
        harvested = []
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total = ConjectureReport()
    rows = []
    for k, unit in enumerate(inst.units):
        rep = check_conjecture(unit, inst.horizon, args.trials, seed=args.seed + k,
                               harvested=harvested, variant=args.variant)
        for n, ce in enumerate(rep.counter_examples):
            write_counter_example(out / f"counter_example_{unit.id}_{n}.json", unit, inst.horizon,
                                  ce["duals"], {"lp": ce["lp"], "ilp": ce["ilp"],
                                                "variant": args.variant})
        s = rep.summary()
        rows.append([unit.id, s["trials"], s["integral_fraction"], s["max_gap"],
                     s["dp_mismatches"], s["counter_examples"]])
        total = total.merge(rep)
    header = ["unit", "trials", "integral_fraction", "max_gap", "dp_mismatches", "counter_examples"]
    s = total.summary()
    rows.append(["all", s["trials"], s["integral_fraction"], s["max_gap"], s["dp_mismatches"],
                 s["counter_examples"]])
    (out / "conjecture.csv").write_text(render_csv(header, rows), encoding="utf-8")
    print(render_table([("variant", args.variant), ("units", len(inst.units)),
                        ("horizon", inst.horizon), ("trials", s["trials"]),
                        ("integral_fraction", float(s["integral_fraction"])),
                        ("max_gap", float(s["max_gap"])), ("dp_mismatches", s["dp_mismatches"]),
                        ("counter_examples", s["counter_examples"]), ("report", str(out))]), end="")
    if total.dp_mismatches:
        log.error("dynamic program disagrees with the integer program on %d trials",
                  total.dp_mismatches)
        return EXIT_INTERNAL
    return EXIT_COUNTER_EXAMPLE if total.counter_examples else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ucpd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance file")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--units", type=_positive, default=80)
    g.add_argument("--horizon", type=_positive, default=96)
    g.add_argument("--points", type=_positive, default=3)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance and report bounds")
    s.add_argument("--instance", required=True)
    s.add_argument("--method", choices=("compact-lp", "compact-ilp", "cg", "all"), default="all")
    s.add_argument("--time-limit", type=_nonneg_float, default=300.0,
                   help="seconds for branch-and-bound and column generation (default 300)")
    s.add_argument("--report", help="CSV report path")
    s.add_argument("--log", help="column-generation iteration log (CSV, method cg)")
    s.add_argument("--threads", type=_positive, default=_default_threads(),
                   help=f"pricing threads (default ${THREADS_ENV} or 1)")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("conjecture", help="compare single-unit LP and ILP optima")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", help="use this fleet and its column-generation duals")
    src.add_argument("--random-units", type=_positive, help="number of random units")
    c.add_argument("--trials", type=int, default=100, help="random dual vectors per unit")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--horizon", type=_positive, default=8, help="horizon for random units")
    c.add_argument("--points", type=_positive, default=3, help="points for random units")
    c.add_argument("--harvest", type=int, default=10,
                   help="column-generation dual vectors reused per unit")
    c.add_argument("--variant", choices=("tight", "weak"), default="tight")
    c.add_argument("--out", default="conjecture_out", help="report directory")
    c.add_argument("--threads", type=_positive, default=_default_threads())
    c.set_defaults(func=cmd_conjecture)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "trials", 1) < 0:
        print("ucpd: error: --trials must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"ucpd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceError as exc:
        print(f"ucpd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, CgError, BoundError) as exc:
        print(f"ucpd: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
