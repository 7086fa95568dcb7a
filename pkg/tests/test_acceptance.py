"""Acceptance criteria, one PASS/FAIL line each (summary printed at session end).

The desk-scale scheme comparison runs 18 seeded runs of all seven schemes and
takes a few minutes on one core; it is shared by criteria 4 and 7.
"""
import math
import random
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from qramnav import qram
from qramnav.cli import compare, main
from qramnav.config import Config
from qramnav.geodesy import geodetic_to_ecef
from qramnav.managers import SCHEMES, Snapshot, rule_based_nav_request, search_quality_utility
from qramnav.nav import Attitude, ImuModel, NavState, body_matrix, ecef_to_measurement, ekf_update, numeric_jacobian
from qramnav.nav import propagate_span
from qramnav.radar import (Dwell, RadarParams, db_to_linear, detection_probability, linear_to_db, measurement_noise,
                           range_sigma, snr)
from qramnav.scenario import build_scenario
from qramnav.sim import run, scenario_for_seed
from qramnav.tracking import track_quality

from test_nav import _symbolic_jacobian
from test_qram import _random_instance, brute_force, check_invariants, max_jump


# --- 1: formula unit suite --------------------------------------------------------

def test_criterion_1_formulas(criterion):
    t0 = time.perf_counter()
    p = RadarParams()
    rs = range_sigma(p)
    s_db = float(linear_to_db(snr(p, Dwell(0.0, 0.0, 590e-6, 5.9e-3), 1e6, 1.0)))
    pd = float(detection_probability(db_to_linear(13.1), 1e-6))
    q = track_quality(np.eye(6)).q_track
    u = search_quality_utility(1.0, np.diag([100.0, 100.0, 100.0]))[1]
    dt = time.perf_counter() - t0
    ok = (abs(rs - 1.0065) <= 0.001 and abs(s_db + 14.3) <= 0.1 and abs(pd - 0.90) <= 0.02 and q == 10.0
          and u == 1.0 and dt < 1.0)
    criterion("1 formulas", ok, f"range_sigma={rs:.4f} m snr={s_db:.2f} dB pd={pd:.3f} q_track={q!r} "
              f"u_search={u!r} ({dt * 1e3:.0f} ms)")
    assert ok


# --- 2: optimizer oracle -----------------------------------------------------------

def test_criterion_2_optimizer_oracle(criterion):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    worst = math.inf
    for _ in range(500):
        tasks, budget = _random_instance(rng)
        ms = [qram.concave_majorant(t) for t in tasks]
        for t, m in zip(tasks, ms):
            check_invariants(t, m)
        a = qram.solve(tasks, budget)
        worst = min(worst, a.total_utility - (brute_force(tasks, budget) - max_jump(ms)))
    dt = time.perf_counter() - t0
    ok = worst >= -1e-9 and dt < 30
    criterion("2 optimizer oracle", ok, f"500 instances, min slack over bound {worst:.3g} ({dt:.1f} s)")
    assert ok


# --- 3: filter consistency ------------------------------------------------------------

def nav_nees(n_runs=50, duration=180.0):
    """NEES of the nav EKF on the straight leg, 3-satellite updates every 10 s."""
    cfg = Config()
    cfg = cfg.replace(scenario=replace(cfg.scenario, duration=duration))
    sc = build_scenario(cfg, 0)
    traj, cons = sc.fighter, sc.constellation
    imu = ImuModel(cfg.nav.imu_sigma, cfg.nav.imu_rate)
    steps = int(round(1.0 / imu.dt))
    n_t = int(duration)
    sp, sv = sc.initial_nav_error
    P0 = np.diag([sp * sp] * 3 + [sv * sv] * 3)
    out = np.zeros((n_runs, n_t))
    for r in range(n_runs):
        rng = np.random.default_rng([r, 3])
        acc = traj.acceleration + rng.standard_normal(traj.acceleration.shape) * imu.accel_noise_sigma
        x0 = np.concatenate([traj.position[0], traj.velocity[0]]) + rng.standard_normal(6) * np.sqrt(np.diag(P0))
        nav = NavState(0.0, x0[:3], x0[3:], P0)
        for i in range(n_t):
            k = i * steps
            if i and i % 10 == 0:
                att = traj.attitude(k)
                for req in rule_based_nav_request(Snapshot(nav.time, nav, att, (), cons, cfg)):
                    sat = cons.position(req.subject, nav.time)
                    z_true = ecef_to_measurement(traj.position[k], att, sat)
                    s = float(snr(cfg.radar, req.dwell, z_true[2], cons.rcs_of(req.subject)))
                    noise = measurement_noise(cfg.radar, req.dwell.steer_az, req.dwell.steer_el, s)
                    z = z_true + rng.standard_normal(3) * [noise.sigma_az, noise.sigma_el, noise.sigma_range]
                    nav, _ = ekf_update(nav, z, noise, att, sat, cfg.nav.gate)
            e = nav.mean - np.concatenate([traj.position[k], traj.velocity[k]])
            out[r, i] = e @ np.linalg.solve(nav.covariance, e)
            nav = propagate_span(nav, acc[k:k + steps], imu)
    return out


def test_criterion_3_nees(criterion):
    nees = nav_nees()
    anees = nees.mean(axis=0)
    lo, hi = stats.chi2.ppf([0.025, 0.975], 6 * nees.shape[0]) / nees.shape[0]
    inside = float(np.mean((anees >= lo) & (anees <= hi)))
    ok = lo <= anees.mean() <= hi and inside >= 0.9
    criterion("3a nav NEES", ok, f"time-averaged ANEES {anees.mean():.2f} in [{lo:.2f}, {hi:.2f}], "
              f"{inside:.0%} of samples inside")
    assert ok


def test_criterion_3_jacobian(criterion):
    oracle = _symbolic_jacobian()
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(100):
        own = geodetic_to_ecef(rng.uniform(-1.3, 1.3), rng.uniform(-3, 3), rng.uniform(0, 1.5e4))
        att = Attitude(*rng.uniform(-0.7, 0.7, 3))
        sat = own + rng.normal(size=3) * 10 ** rng.uniform(3.5, 6.5)
        J = numeric_jacobian(own, att, sat)[:, :3]
        Js = np.array(oracle(own, sat, body_matrix(own, att).ravel()), dtype=float)
        worst = max(worst, float(np.max(np.abs(J - Js) / np.linalg.norm(Js, axis=1, keepdims=True))))
    ok = worst < 1e-5
    criterion("3b Jacobian vs symbolic", ok, f"max relative error {worst:.2e} over 100 geometries")
    assert ok


# --- 4 and 7: scheme comparison ------------------------------------------------------

@pytest.fixture(scope="module")
def comparison():
    cfg = Config()
    t0 = time.perf_counter()
    report, runs = compare(cfg, 18, cfg.monte_carlo.jobs, SCHEMES)
    return report, runs, time.perf_counter() - t0


def _table(report):
    return ", ".join(f"{s} {v['mean_track_error']:.1f}/{v['mean_self_loc_error']:.1f}" for s, v in report.items())


def test_criterion_4a_track_error_vs_tb(comparison, criterion):
    report, _, elapsed = comparison
    q = report["qram-nav"]["mean_track_error"]
    tb = {s: report[s]["mean_track_error"] for s in ("tb-10", "tb-20", "tb-30")}
    ok = all(q <= v for v in tb.values()) and elapsed < 1800
    criterion("4a qram-nav track <= every tb", ok,
              f"qram-nav {q:.1f} m vs " + ", ".join(f"{s} {v:.1f}" for s, v in tb.items())
              + f" ({elapsed / 60:.1f} min; track/self-loc m: {_table(report)})")
    assert ok


def test_criterion_4b_track_error_vs_fixed_qram(comparison, criterion):
    report, _, _ = comparison
    q = report["qram-nav"]["mean_track_error"]
    best = min(report[s]["mean_track_error"] for s in ("qram-10", "qram-20", "qram-30"))
    ok = q <= 1.1 * best
    criterion("4b qram-nav track <= 1.1 x best fixed qram", ok, f"{q:.1f} m vs 1.1 x {best:.1f} m")
    assert ok


def test_criterion_4c_self_localisation(comparison, criterion):
    report, _, _ = comparison
    sl = {s: report[s]["mean_self_loc_error"] for s in SCHEMES}
    bound = min(sl["tb-20"], sl["tb-30"])
    bad = [s for s in SCHEMES if s.startswith("qram") and sl[s] > bound]
    ok = not bad
    criterion("4c every qram self-loc <= tb-20 and tb-30", ok,
              ", ".join(f"{s} {v:.1f} m" for s, v in sl.items()) + (f"; violated by {', '.join(bad)}" if bad else ""))
    assert ok


def test_criterion_4d_nav_resource(comparison, criterion):
    report, _, _ = comparison
    a, b = report["qram-nav"]["resource_s"]["nav_update"], report["qram-10"]["resource_s"]["nav_update"]
    ok = a <= b
    criterion("4d qram-nav nav seconds <= qram-10", ok, f"{a:.1f} s vs {b:.1f} s")
    assert ok


def test_criterion_7_timeline_conservation(comparison, criterion):
    report, runs, _ = comparison
    n_intervals = sum(len(r.plan_log) for rs in runs.values() for r in rs)
    violations = sum(v["timeline_violations"] for v in report.values())
    worst = max(sum(row[k] for k in row if k.startswith("resource_")) for rs in runs.values() for r in rs
                for row in r.plan_log)
    ok = violations == 0 and worst <= 10.0 + 1e-9
    criterion("7 timeline conservation", ok, f"{violations} violations in {n_intervals} intervals, "
              f"max booked {worst:.4f} s")
    assert ok


# --- 5: coupling ablation ----------------------------------------------------------

def test_criterion_5_coupling_ablation(criterion):
    cfg = Config()
    off = cfg.replace(managers=replace(cfg.managers, coupling=False))
    chosen = [c for seed in (1, 2, 3) for c in run(scenario_for_seed(off, seed), "qram-nav", off).nav_configs]
    skip_frac = chosen.count("skip") / len(chosen)
    sc = cfg.scenario
    loud = cfg.replace(scenario=replace(sc, initial_pos_sigma=10 * sc.initial_pos_sigma,
                                        initial_vel_sigma=10 * sc.initial_vel_sigma))
    short = loud.replace(scenario=replace(loud.scenario, duration=10.0))
    first = run(scenario_for_seed(short, 1), "qram-nav", short).nav_configs[0]
    ok = skip_frac >= 0.95 and first != "skip"
    criterion("5 coupling ablation", ok, f"coupling off: skip in {skip_frac:.0%} of {len(chosen)} intervals; "
              f"10x initial sigma: first interval {first}")
    assert ok


# --- 6: determinism across --jobs ---------------------------------------------------

def test_criterion_6_determinism(tmp_path, criterion):
    ini = tmp_path / "c.ini"
    ini.write_text("[scenario]\nduration = 60\n")
    for jobs in (1, 2):
        assert main(["compare", "--config", str(ini), "--runs", "3", "--jobs", str(jobs),
                     "--out", str(tmp_path / f"j{jobs}")]) == 0
    a = (tmp_path / "j1" / "report.json").read_bytes()
    b = (tmp_path / "j2" / "report.json").read_bytes()
    ok = a == b
    criterion("6 determinism across --jobs", ok, f"report.json {len(a)} bytes, identical={ok}")
    assert ok
