"""Command-line interface: ``qramnav run | compare | export-scenario``.

Output directory defaults to ``$QRAMNAV_OUT`` or ``./qramnav_out``.

Files written by ``run``::

    series.csv      t_s, self_loc_error_m, track_error_<k>_m per target (empty = no confirmed track)
    plan_log.csv    one row per planning interval
    aggregate.json  per-run aggregates
    majorants.csv   (with --dump-majorants) task models Q-RAM saw, per interval

Files written by ``compare``::

    report.json     per-scheme summary plus per-run aggregates (deterministic)
    report.csv      one row per scheme
    error_vs_time.csv   long format: scheme, seed, t_s, self_loc_error_m, mean_track_error_m
    resource_usage.csv  long format: scheme, kind, seconds (mean over runs)
    *.svg           with --svg
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import qram
from .config import ConfigError, load_config
from .managers import SCHEMES, interval_taskmodels, scheme_name
from .scenario import (ScenarioFileError, build_scenario, save_constellation, save_trajectory)
from .sim import monte_carlo, run, scenario_for_seed

log = logging.getLogger("qramnav")

ENV_OUT = "QRAMNAV_OUT"
REPORT_COLUMNS = ["scheme", "n_runs", "mean_track_error_m", "std_track_error_m", "mean_self_loc_error_m",
                  "search_s", "track_s", "nav_s", "timeline_violations"]


def _default_out() -> str:
    return os.environ.get(ENV_OUT, "qramnav_out")


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and not math.isfinite(v)) else repr(float(v))


def write_series(path, metrics):
    n_t = metrics.track_error.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "self_loc_error_m"] + [f"track_error_{k}_m" for k in range(n_t)])
        for i, t in enumerate(metrics.times):
            w.writerow([_fmt(t), _fmt(metrics.self_loc_error[i])] + [_fmt(x) for x in metrics.track_error[i]])


def write_plan_log(path, plan_log):
    if not plan_log:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(plan_log[0]))
        w.writeheader()
        for row in plan_log:
            w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in row.items()})


def _majorant_dumper(path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(["interval_start", "task_id", "config_id", "resource_s", "utility", "on_hull"])

    def dump(snap, plan):
        if plan.scheme.startswith("tb"):
            return
        tasks = interval_taskmodels(snap, plan.nav_config)
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh)
            for t in tasks:
                hull = {p.config_id for p in qram.concave_majorant(t).vertices}
                tid = t.task_id if isinstance(t.task_id, str) else "-".join(map(str, t.task_id))
                for p in t.points:
                    w.writerow([_fmt(snap.time), tid, p.config_id, _fmt(p.resource[0]), _fmt(p.utility),
                                int(p.config_id in hull)])
    return dump


# --- commands -------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    scheme = scheme_name(args.scheme, args.nav_interval)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    dump = _majorant_dumper(out / "majorants.csv") if args.dump_majorants else None
    if cfg.scenario.trajectory_file or cfg.scenario.constellation_file:
        scenario = build_scenario(cfg, args.seed)
    else:
        scenario = scenario_for_seed(cfg, args.seed)
    m = run(scenario, scheme, cfg, dump)
    write_series(out / "series.csv", m)
    write_plan_log(out / "plan_log.csv", m.plan_log)
    write_json(out / "aggregate.json", m.aggregates())
    print(f"{scheme} seed {args.seed}: mean track error {m.mean_track_error:.1f} m, "
          f"mean self-localisation error {m.mean_self_loc_error:.1f} m -> {out}")
    return 0


def compare(cfg, n_runs: int, jobs: int, schemes=SCHEMES):
    """Monte-Carlo summaries for each scheme on shared seeds; (report, runs by scheme)."""
    report, runs = {}, {}
    for s in schemes:
        summary, r = monte_carlo(cfg, n_runs, s, jobs)
        report[s] = summary
        runs[s] = r
    return report, runs


def report_rows(report: dict) -> list[dict]:
    rows = []
    for s, summ in report.items():
        res = summ["resource_s"]
        rows.append({
            "scheme": s, "n_runs": summ["n_runs"], "mean_track_error_m": summ["mean_track_error"],
            "std_track_error_m": summ["std_track_error"], "mean_self_loc_error_m": summ["mean_self_loc_error"],
            "search_s": res["search_sector"], "track_s": res["track_update"], "nav_s": res["nav_update"],
            "timeline_violations": summ["timeline_violations"],
        })
    return rows


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    if args.runs < 1:
        raise SystemExit(_usage_error("--runs must be >= 1"))
    schemes = args.schemes.split(",") if args.schemes else list(SCHEMES)
    for s in schemes:
        if s not in SCHEMES:
            raise SystemExit(_usage_error(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}"))
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    report, runs = compare(cfg, args.runs, args.jobs, schemes)
    write_json(out / "report.json", {"schemes": report, "config": cfg.to_dict()})
    rows = report_rows(report)
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in row.items()})
    with open(out / "error_vs_time.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "seed", "t_s", "self_loc_error_m", "mean_track_error_m"])
        for s, rs in runs.items():
            for r in rs:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN rows
                    te = np.nanmean(r.track_error, axis=1)
                for t, a, b in zip(r.times, r.self_loc_error, te):
                    w.writerow([s, r.seed, _fmt(t), _fmt(a), _fmt(b)])
    with open(out / "resource_usage.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "kind", "seconds"])
        for s, summ in report.items():
            for k, v in sorted(summ["resource_s"].items()):
                w.writerow([s, k, _fmt(v)])
    if args.svg:
        from .plots import error_svg, resource_svg
        (out / "error_vs_time.svg").write_text(error_svg(runs))
        (out / "resource_usage.svg").write_text(resource_svg(report))
    width = max(len(s) for s in schemes)
    print(f"{'scheme':<{width}}  {'track mean':>10}  {'std':>7}  {'self-loc':>8}  {'nav s':>7}")
    for row in rows:
        print(f"{row['scheme']:<{width}}  {row['mean_track_error_m']:10.1f}  {row['std_track_error_m']:7.1f}  "
              f"{row['mean_self_loc_error_m']:8.1f}  {row['nav_s']:7.1f}")
    return 0


def cmd_export_scenario(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg, args.seed)
    save_trajectory(out / "trajectory.csv", scenario.fighter, args.stride)
    save_constellation(out / "constellation.csv", scenario.constellation)
    with open(out / "targets.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target_id", "t_ref_s", "x", "y", "z", "vx", "vy", "vz", "rcs_m2"])
        for tg in scenario.targets:
            w.writerow([tg.target_id, _fmt(tg.t_ref), *map(_fmt, tg.p_ref), *map(_fmt, tg.velocity), _fmt(tg.rcs)])
    print(f"scenario written to {out}")
    return 0


# --- parser ----------------------------------------------------------------------

def _usage_error(msg: str) -> int:
    print(f"qramnav: error: {msg}", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qramnav",
        description="Radar resource management with satellite-aided self-localisation.",
        epilog=f"Default output directory: ${ENV_OUT} or ./qramnav_out. Exit codes: 0 ok, 1 runtime error, 2 usage.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config file (INI sections [radar], [scenario], ...)")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./qramnav_out)")

    r = sub.add_parser("run", parents=[common], help="simulate one run")
    r.add_argument("--scheme", required=True, choices=["tb", "qram-fixed", "qram-nav"])
    r.add_argument("--nav-interval", type=int, choices=[10, 20, 30], default=10,
                   help="navigation update interval of the fixed schemes (s)")
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--dump-majorants", action="store_true", help="write the per-interval Q-RAM task models")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", parents=[common], help="Monte-Carlo comparison of all schemes")
    c.add_argument("--runs", type=int, default=18)
    c.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    c.add_argument("--schemes", help=f"comma-separated subset of {','.join(SCHEMES)}")
    c.add_argument("--svg", action="store_true", help="also write simple SVG charts")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("export-scenario", parents=[common], help="write trajectory/constellation/targets CSVs")
    e.add_argument("--seed", type=int, default=1, help="seed for target placement")
    e.add_argument("--stride", type=int, default=1, help="write every n-th trajectory sample")
    e.set_defaults(func=cmd_export_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ScenarioFileError, OSError, ValueError) as exc:
        print(f"qramnav: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
