import json
import subprocess
import sys

import pytest

import oracles
from ucpd.cli import (EXIT_COUNTER_EXAMPLE, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main,
                      render_table)
from ucpd.model import (InitialCondition, Instance, OperatingPoint, Unit, read_instance,
                        write_instance)


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny.json"
    assert main(["generate", "--seed", "3", "--units", "2", "--horizon", "6", "--points", "2",
                 "--out", str(path)]) == EXIT_OK
    return path


def read_report(path):
    rows = path.read_text().splitlines()
    assert rows[0] == "metric,value"
    return dict(r.split(",", 1) for r in rows[1:])


def test_generate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["generate", "--seed", "1", "--units", "3", "--horizon", "12",
                     "--out", str(p)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    out = capsys.readouterr().out
    assert "capacity" in out and "peak_demand" in out and "min_slack" in out


def test_generate_default_dimensions(tmp_path):
    path = tmp_path / "big.json"
    assert main(["generate", "--seed", "1", "--out", str(path)]) == EXIT_OK
    inst = read_instance(path)
    assert (len(inst.units), inst.horizon) == (80, 96)


@pytest.mark.parametrize("argv", [["generate", "--units", "0", "--out", "x.json"],
                                  ["generate", "--horizon", "abc", "--out", "x.json"],
                                  ["solve"], ["frobnicate"],
                                  ["solve", "--instance", "x", "--method", "magic"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_missing_and_malformed_files(tmp_path):
    assert main(["solve", "--instance", str(tmp_path / "nope.json")]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--instance", str(bad)]) == EXIT_USAGE


def test_solve_all_reports_equal_bounds(tiny, tmp_path):
    rep = tmp_path / "r.csv"
    assert main(["solve", "--instance", str(tiny), "--method", "all", "--report", str(rep)]) == 0
    vals = read_report(rep)
    lp, cg = float(vals["compact_lp"]), float(vals["cg_bound"])
    assert abs(cg - lp) / (1 + abs(lp)) <= 1e-6
    assert float(vals["compact_ilp"]) == pytest.approx(oracles.fleet_optimum(read_instance(tiny)))


def test_compact_ilp_matches_enumeration(tmp_path):
    path = tmp_path / "t8.json"
    main(["generate", "--seed", "5", "--units", "2", "--horizon", "8", "--points", "2",
          "--out", str(path)])
    rep = tmp_path / "r.csv"
    assert main(["solve", "--instance", str(path), "--method", "compact-ilp",
                 "--report", str(rep)]) == EXIT_OK
    vals = read_report(rep)
    assert vals["status"] == "optimal"
    assert float(vals["compact_ilp"]) == pytest.approx(oracles.fleet_optimum(read_instance(path)),
                                                       rel=1e-9)


def test_reports_are_byte_identical(tiny, tmp_path):
    outs = []
    for k in range(2):
        rep, log = tmp_path / f"r{k}.csv", tmp_path / f"l{k}.csv"
        main(["solve", "--instance", str(tiny), "--method", "cg", "--report", str(rep),
              "--log", str(log), "--threads", str(1 + k)])
        outs.append((rep.read_bytes(), log.read_bytes()))
    assert outs[0] == outs[1]


def test_zero_demand_all_bounds_zero(tmp_path):
    u = Unit("a", (OperatingPoint(5.0),), 2, 2, 3.0, 1.0, 1.0, InitialCondition(0, 4, 1, 4))
    path = tmp_path / "z.json"
    write_instance(Instance((u,), 4, (0.0,) * 4, (0.0,) * 4, (0.0,) * 4), path)
    rep = tmp_path / "r.csv"
    assert main(["solve", "--instance", str(path), "--report", str(rep)]) == EXIT_OK
    vals = read_report(rep)
    for key in ("compact_lp", "cg_bound", "compact_ilp"):
        assert abs(float(vals[key])) <= 1e-9


def test_infeasible_exit_code(tmp_path):
    u = Unit("a", (OperatingPoint(5.0),), init=InitialCondition(0, 4, 1, 4))
    path = tmp_path / "inf.json"
    write_instance(Instance((u,), 2, (9.0, 9.0), (0.0, 0.0), (0.0, 0.0)), path)
    for method in ("compact-lp", "compact-ilp", "cg", "all"):
        assert main(["solve", "--instance", str(path), "--method", method]) == EXIT_INFEASIBLE


def test_conjecture_clean_run(tmp_path):
    out = tmp_path / "cj"
    assert main(["conjecture", "--random-units", "2", "--trials", "5", "--horizon", "5",
                 "--points", "1", "--out", str(out)]) == EXIT_OK
    lines = (out / "conjecture.csv").read_text().splitlines()
    assert lines[0].startswith("unit,trials,integral_fraction")
    assert lines[-1].startswith("all,10,1,0")


def test_conjecture_with_instance_uses_harvested_duals(tiny, tmp_path):
    out = tmp_path / "ci"
    code = main(["conjecture", "--instance", str(tiny), "--trials", "2", "--harvest", "3",
                 "--out", str(out)])
    assert code in (EXIT_OK, EXIT_COUNTER_EXAMPLE)
    last = (out / "conjecture.csv").read_text().splitlines()[-1].split(",")
    assert int(last[1]) == 2 * (2 + 3)


def test_conjecture_weak_variant_writes_counter_examples(tmp_path):
    out = tmp_path / "cw"
    code = main(["conjecture", "--random-units", "4", "--trials", "20", "--horizon", "6",
                 "--variant", "weak", "--out", str(out)])
    assert code == EXIT_COUNTER_EXAMPLE
    files = sorted(out.glob("counter_example_*.json"))
    assert files
    doc = json.loads(files[0].read_text())
    assert doc["variant"] == "weak" and doc["lp"] < doc["ilp"]
    assert "duals" in doc and len(doc["units"]) == 1


def test_threads_env_default(monkeypatch):
    from ucpd.cli import build_parser

    monkeypatch.setenv("UCPD_THREADS", "3")
    args = build_parser().parse_args(["solve", "--instance", "x"])
    assert args.threads == 3


def test_render_table_alignment():
    text = render_table([("a", 1), ("long_key", 2.5)])
    assert text == "a         1\nlong_key  2.5\n"


def test_module_entry_point(tiny):
    res = subprocess.run([sys.executable, "-m", "ucpd", "solve", "--instance", str(tiny),
                          "--method", "compact-lp"], capture_output=True, text=True)
    assert res.returncode == 0 and "compact_lp" in res.stdout


def test_time_limited_ilp_reports_bound(tmp_path):
    path = tmp_path / "mid.json"
    main(["generate", "--seed", "5", "--units", "6", "--horizon", "24", "--out", str(path)])
    rep = tmp_path / "r.csv"
    assert main(["solve", "--instance", str(path), "--method", "compact-ilp", "--time-limit", "0",
                 "--report", str(rep)]) == EXIT_OK
    vals = read_report(rep)
    assert vals["status"] == "time_limit"
    assert float(vals["compact_ilp_bound"]) <= float(vals["compact_ilp"])
