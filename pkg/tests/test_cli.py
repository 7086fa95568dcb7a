import csv
import json
from pathlib import Path

import pytest

from qramnav.cli import ENV_OUT, build_parser, main
from qramnav.geodesy import ecef_to_geodetic
from qramnav.scenario import load_constellation, load_trajectory

GOLDEN = Path(__file__).parent / "golden" / "aggregate_schema.json"
TYPES = {"number": (int, float), "integer": (int,), "string": (str,), "null": (type(None),)}


@pytest.fixture
def short_cfg(tmp_path):
    p = tmp_path / "short.ini"
    p.write_text("[scenario]\nduration = 40\n")
    return str(p)


def check_schema(obj, schema, path="$"):
    assert isinstance(obj, dict) and set(obj) == set(schema), f"{path}: keys {sorted(obj)}"
    for k, expected in schema.items():
        if isinstance(expected, dict):
            check_schema(obj[k], expected, f"{path}.{k}")
        else:
            allowed = tuple(t for name in expected.split("|") for t in TYPES[name])
            assert isinstance(obj[k], allowed) and not isinstance(obj[k], bool), f"{path}.{k}: {obj[k]!r}"


def test_run_writes_outputs(tmp_path, short_cfg, capsys):
    out = tmp_path / "o"
    assert main(["run", "--config", short_cfg, "--scheme", "qram-nav", "--seed", "2", "--out", str(out),
                 "--dump-majorants"]) == 0
    for name in ("series.csv", "plan_log.csv", "aggregate.json", "majorants.csv"):
        assert (out / name).stat().st_size > 0
    rows = list(csv.DictReader(open(out / "series.csv")))
    assert len(rows) == 40 and rows[0]["t_s"] == "0.0"
    agg = json.loads((out / "aggregate.json").read_text())
    check_schema(agg, json.loads(GOLDEN.read_text()))
    assert "qram-nav seed 2" in capsys.readouterr().out


def test_same_seed_identical_files(tmp_path, short_cfg):
    for d in ("a", "b"):
        assert main(["run", "--config", short_cfg, "--scheme", "tb", "--nav-interval", "20",
                     "--out", str(tmp_path / d)]) == 0
    for name in ("series.csv", "plan_log.csv", "aggregate.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_env_var_sets_default_out(tmp_path, short_cfg, monkeypatch):
    monkeypatch.setenv(ENV_OUT, str(tmp_path / "env"))
    assert main(["run", "--config", short_cfg, "--scheme", "qram-fixed"]) == 0
    assert (tmp_path / "env" / "aggregate.json").exists()


def test_usage_errors_exit_2(tmp_path, short_cfg, capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--scheme", "fastest"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["compare", "--config", short_cfg, "--schemes", "tb-10,bogus", "--out", str(tmp_path)])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_runtime_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.ini"), "--scheme", "tb"]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[radar]\nwhatever = 3\n")
    assert main(["run", "--config", str(bad), "--scheme", "tb"]) == 1
    assert "whatever" in capsys.readouterr().err


def test_compare_outputs_and_recomputable_rows(tmp_path, short_cfg):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", short_cfg, "--runs", "2", "--schemes", "tb-10,qram-nav",
                 "--out", str(out), "--svg"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert set(report["schemes"]) == {"tb-10", "qram-nav"}
    rows = list(csv.DictReader(open(out / "report.csv")))
    assert [r["scheme"] for r in rows] == ["tb-10", "qram-nav"]
    golden = json.loads(GOLDEN.read_text())
    for r in rows:
        s = report["schemes"][r["scheme"]]
        for run in s["runs"]:
            check_schema(run, golden)
        sl = [run["mean_self_loc_error"] for run in s["runs"]]
        assert float(r["mean_self_loc_error_m"]) == pytest.approx(sum(sl) / len(sl), abs=1e-9)
        nav = [run["resource_s"]["nav_update"] for run in s["runs"]]
        assert float(r["nav_s"]) == pytest.approx(sum(nav) / len(nav), abs=1e-9)
    ev = list(csv.DictReader(open(out / "error_vs_time.csv")))
    assert len(ev) == 2 * 2 * 40
    assert (out / "error_vs_time.svg").read_text().startswith("<svg")
    assert (out / "resource_usage.svg").read_text().startswith("<svg")


def test_export_scenario_round_trip(tmp_path, short_cfg):
    out = tmp_path / "exp"
    assert main(["export-scenario", "--config", short_cfg, "--out", str(out), "--stride", "10"]) == 0
    traj = load_trajectory(out / "trajectory.csv")
    assert traj.t[1] - traj.t[0] == pytest.approx(0.1)
    _, _, alt = ecef_to_geodetic(traj.position)
    assert abs(alt - 1830).max() < 1.0
    c = load_constellation(out / "constellation.csv")
    assert len(c) == 576
    rows = list(csv.DictReader(open(out / "targets.csv")))
    assert len(rows) == 4


def test_help_documents_flags():
    text = build_parser().format_help()
    assert ENV_OUT in text
    sub = build_parser()._subparsers._group_actions[0].choices
    run_help = sub["run"].format_help()
    for flag in ("--config", "--scheme", "--nav-interval", "--seed", "--out"):
        assert flag in run_help
    cmp_help = sub["compare"].format_help()
    for flag in ("--runs", "--jobs"):
        assert flag in cmp_help
