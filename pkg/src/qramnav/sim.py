"""Discrete-event simulation of one fighter, its radar and the chosen manager."""
from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import Config
from .managers import Plan, Planner, Snapshot, TaskKind, search_raster
from .nav import ImuModel, NavState, body_matrix, ecef_to_measurement, ekf_update, propagate_span
from .radar import (Measurement, _snr_per_second, detection_probability, gain, measurement_noise,
                    simulate_detection)
from .scenario import (STREAM_DETECTION, STREAM_IMU, STREAM_MEAS_NOISE, STREAM_NAV_INIT, STREAM_PLACEMENT,
                       Scenario, build_scenario, place_targets, substream)
from .tracking import (TrackStatus, cv_predict, ekf_track_update, initiate_track, register_outcome)

log = logging.getLogger(__name__)


@dataclass
class RunMetrics:
    scheme: str
    seed: int
    times: np.ndarray
    self_loc_error: np.ndarray
    track_error: np.ndarray  # (n_times, n_targets), NaN where no confirmed track
    resource_by_kind: dict
    utility_trace: list
    plan_log: list = field(default_factory=list)
    timeline_violations: int = 0
    nav_configs: list = field(default_factory=list)

    @property
    def mean_track_error(self) -> float:
        v = self.track_error[np.isfinite(self.track_error)]
        return float(v.mean()) if v.size else math.nan

    @property
    def std_track_error(self) -> float:
        v = self.track_error[np.isfinite(self.track_error)]
        return float(v.std()) if v.size else math.nan

    @property
    def mean_self_loc_error(self) -> float:
        return float(self.self_loc_error.mean())

    @property
    def confirmed_fraction(self) -> float:
        return float(np.isfinite(self.track_error).mean())

    def aggregates(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "mean_track_error": self.mean_track_error,
            "std_track_error": self.std_track_error,
            "mean_self_loc_error": self.mean_self_loc_error,
            "confirmed_track_fraction": self.confirmed_fraction,
            "resource_s": dict(self.resource_by_kind),
            "timeline_violations": self.timeline_violations,
        }


class World:
    """Single-owner simulation state: truth, nav filter, tracks, search pointer."""

    def __init__(self, scenario: Scenario, config: Config, scheme: str):
        self.scenario = scenario
        self.config = config
        self.planner = Planner(scheme)
        self.scheme = scheme
        traj = scenario.fighter
        self.traj = traj
        self.imu = ImuModel(config.nav.imu_sigma, config.nav.imu_rate)
        dt = self.imu.dt
        if abs((traj.t[1] - traj.t[0]) - dt) > 1e-9:
            raise ValueError("fighter trajectory must be sampled at the IMU rate")
        self.dt = dt
        seed = scenario.seed
        self.rng_detect = substream(seed, STREAM_DETECTION)
        self.rng_meas = substream(seed, STREAM_MEAS_NOISE)
        imu_noise = substream(seed, STREAM_IMU).standard_normal((len(traj), 3)) * self.imu.accel_noise_sigma
        self.accel_meas = traj.acceleration + imu_noise
        sp, sv = scenario.initial_nav_error
        e = substream(seed, STREAM_NAV_INIT).standard_normal(6)
        P0 = np.diag([sp * sp] * 3 + [sv * sv] * 3)
        self.nav = NavState(traj.t[0], traj.position[0] + sp * e[:3], traj.velocity[0] + sv * e[3:], P0)
        self.k = 0  # IMU grid index of the nav state
        self.tracks: dict = {}  # target index -> Track
        self.next_track_id = 0
        self.raster = search_raster(config.radar, config.managers, config.scenario.target_rcs)
        self.raster_pointer = 0
        self.target_rcs = np.array([tg.rcs for tg in scenario.targets])
        self.resource = {k.value: 0.0 for k in TaskKind}

    # --- truth ---------------------------------------------------------
    def grid_index(self, t: float) -> int:
        return int(min(max(round((t - self.traj.t[0]) / self.dt), 0), len(self.traj) - 1))

    def truth(self, k: int):
        return self.traj.position[k], self.traj.attitude(k)

    def target_positions(self, t: float) -> np.ndarray:
        return np.array([tg.position(t) for tg in self.scenario.targets]).reshape(-1, 3)

    # --- nav -----------------------------------------------------------
    def advance_nav(self, k: int):
        if k > self.k:
            self.nav = propagate_span(self.nav, self.accel_meas[self.k:k], self.imu)
            self.k = k

    def snapshot(self, t: float) -> Snapshot:
        k = self.grid_index(t)
        self.advance_nav(k)
        tracks = tuple(cv_predict(tr, max(self.nav.time - tr.time, 0.0), self.config.tracking.process_noise)
                       for _, tr in sorted(self.tracks.items()))
        return Snapshot(self.nav.time, self.nav, self.traj.attitude(k), tracks, self.scenario.constellation,
                        self.config, self.raster_pointer)

    # --- dwell execution -------------------------------------------------
    def _track_key(self, track_id):
        for tgt, tr in self.tracks.items():
            if tr.track_id == track_id:
                return tgt
        return None

    def execute_nav(self, sat_id, dwell, t: float):
        k = self.grid_index(t)
        self.advance_nav(k)
        own, att = self.truth(k)
        sat = self.scenario.constellation.position(sat_id, min(self.nav.time, self.scenario.constellation.times[-1]))
        az, el, _ = ecef_to_measurement(self.nav.position, att, sat)
        d = replace(dwell, steer_az=float(az), steer_el=float(el))
        m = simulate_detection(self.rng_detect, self.config.radar, d, ecef_to_measurement(own, att, sat),
                               self.scenario.constellation.rcs_of(sat_id), self.rng_meas)
        if m is not None:
            self.nav, _ = ekf_update(self.nav, m, m.noise, att, sat, self.config.nav.gate)

    def execute_track(self, track_id, dwell, t: float):
        tgt = self._track_key(track_id)
        if tgt is None:
            return
        k = self.grid_index(t)
        self.advance_nav(k)
        own, att = self.truth(k)
        tc = self.config.tracking
        tr = cv_predict(self.tracks[tgt], max(self.nav.time - self.tracks[tgt].time, 0.0), tc.process_noise)
        az, el, _ = ecef_to_measurement(self.nav.position, att, tr.position)
        d = replace(dwell, steer_az=float(az), steer_el=float(el))
        truth = ecef_to_measurement(own, att, self.scenario.targets[tgt].position(self.nav.time))
        m = None
        if _in_front(own, att, self.scenario.targets[tgt].position(self.nav.time)):
            m = simulate_detection(self.rng_detect, self.config.radar, d, truth, self.target_rcs[tgt], self.rng_meas)
        hit = False
        if m is not None:
            tr, hit = ekf_track_update(tr, m, m.noise, self.nav, att, tc.gate, self.config.managers.coupling)
        tr = register_outcome(tr, hit, (tc.confirm_m, tc.confirm_n), tc.max_misses, tc.max_det_root)
        if tr.status is TrackStatus.DROPPED:
            del self.tracks[tgt]
        else:
            self.tracks[tgt] = tr

    def execute_search(self, burst, start: float):
        beams = self.raster.burst_beams(burst)
        cost = self.raster.beam_cost
        n = len(beams)
        self.raster_pointer = (burst.first_beam + n) % len(self.raster)
        if len(self.scenario.targets) == 0:
            return
        t_mid = start + 0.5 * n * cost
        k = self.grid_index(t_mid)
        self.advance_nav(k)
        own, att = self.truth(k)
        tpos = self.target_positions(self.nav.time)
        radar = self.config.radar
        C = body_matrix(own, att)
        body = (tpos - own) @ C.T
        rng_t = np.linalg.norm(body, axis=1)
        t_az = np.arctan2(body[:, 1], body[:, 0])
        t_el = np.arcsin(np.clip(-body[:, 2] / rng_t, -1, 1))
        g = gain(radar, t_az[None, :], beams[:, :1], t_el[None, :], beams[:, 1:2])
        s = _snr_per_second(radar, g, rng_t[None, :], self.target_rcs[None, :]) * self.raster.beam_dwell.transmit_time
        s = np.where((body[:, 0] > 0)[None, :], s, 0.0)
        pd = detection_probability(s, radar.false_alarm_probability)
        hits = (self.rng_detect.random(pd.shape) < pd) & (s > 0)
        tc = self.config.tracking
        for b, j in zip(*np.nonzero(hits)):
            noise = measurement_noise(radar, beams[b, 0], beams[b, 1], s[b, j])
            e = self.rng_meas.standard_normal(3)
            m = Measurement(t_az[j] + noise.sigma_az * e[0], t_el[j] + noise.sigma_el * e[1],
                            rng_t[j] + noise.sigma_range * e[2], noise, float(s[b, j]))
            if j in self.tracks:
                tr = cv_predict(self.tracks[j], max(self.nav.time - self.tracks[j].time, 0.0), tc.process_noise)
                tr, _ = ekf_track_update(tr, m, noise, self.nav, att, tc.gate, self.config.managers.coupling)
                self.tracks[j] = tr
            else:
                self.tracks[j] = initiate_track(m, self.nav, att, tc.initial_velocity_sigma**2, self.next_track_id,
                                                self.nav.time, self.config.managers.coupling)
                self.next_track_id += 1

    # --- metrics -------------------------------------------------------------
    def sample(self, t: float):
        k = self.grid_index(t)
        self.advance_nav(k)
        own = self.traj.position[k]
        loc = float(np.linalg.norm(self.nav.position - own))
        errs = np.full(len(self.scenario.targets), np.nan)
        for tgt, tr in self.tracks.items():
            if tr.status is TrackStatus.CONFIRMED:
                p = tr.position + tr.velocity * (self.nav.time - tr.time)
                errs[tgt] = np.linalg.norm(p - self.scenario.targets[tgt].position(self.nav.time))
        return loc, errs


def _in_front(own, att, target) -> bool:
    return float((body_matrix(own, att) @ (np.asarray(target) - own))[0]) > 0


def _execute_interval(world: World, plan: Plan, metric_times):
    """Interleave dwell execution and metric sampling in time order."""
    events = []
    for i, s in enumerate(plan.timeline):
        r = s.request
        t_evt = s.start + (0.0 if r.kind is TaskKind.SEARCH else 0.5 * r.dwell.timeline_cost)
        events.append((t_evt, 1, i))
    for t in metric_times:
        events.append((t, 0, -1))
    events.sort()
    samples = []
    for t, kind, i in events:
        if kind == 0:
            samples.append(world.sample(t))
            continue
        s = plan.timeline[i]
        r = s.request
        world.resource[r.kind.value] += r.dwell.timeline_cost
        if r.kind is TaskKind.NAV:
            world.execute_nav(r.subject, r.dwell, t)
        elif r.kind is TaskKind.TRACK:
            world.execute_track(r.subject, r.dwell, t)
        else:
            world.execute_search(r.subject, s.start)
    return samples


def run(scenario: Scenario, scheme: str, config: Config | None = None, dump_majorants=None) -> RunMetrics:
    config = config or Config()
    world = World(scenario, config, scheme)
    T = config.managers.interval
    mdt = config.monte_carlo.metric_dt
    n_metric = int(round(scenario.duration / mdt))
    metric_t = mdt * np.arange(n_metric)
    n_intervals = int(math.ceil(scenario.duration / T - 1e-9))
    loc, terr = [], []
    utility, plan_log, nav_cfgs = [], [], []
    violations = 0
    for i in range(n_intervals):
        t0 = i * T
        snap = world.snapshot(t0)
        plan = world.planner.plan(snap)
        if plan.total_cost > T + 1e-9:
            violations += 1
        if dump_majorants is not None:
            dump_majorants(snap, plan)
        in_iv = metric_t[(metric_t >= t0 - 1e-9) & (metric_t < t0 + T - 1e-9)]
        for a, b in _execute_interval(world, plan, in_iv):
            loc.append(a)
            terr.append(b)
        utility.append(plan.declared_utility)
        nav_cfgs.append(plan.nav_config)
        plan_log.append({
            "interval_start": t0,
            "scheme": scheme,
            "chosen_nav_config": plan.nav_config,
            **{f"resource_{k}": v for k, v in plan.resource_used_by_kind.items()},
            "declared_utility": plan.declared_utility,
        })
    return RunMetrics(scheme, scenario.seed, metric_t, np.array(loc), np.array(terr).reshape(n_metric, -1),
                      dict(world.resource), utility, plan_log, violations, nav_cfgs)


# --- Monte Carlo -----------------------------------------------------------------

@functools.lru_cache(maxsize=4)
def _cached_base(config: Config):
    # trajectory and constellation do not depend on the seed
    return build_scenario(config, 0)


def scenario_for_seed(config: Config, seed: int) -> Scenario:
    base = _cached_base(config)
    targets = place_targets(base.fighter, config.scenario, substream(seed, STREAM_PLACEMENT))
    return replace(base, targets=targets, seed=seed)


def _run_one(args):
    config, seed, scheme = args
    m = run(scenario_for_seed(config, seed), scheme, config)
    return m


def run_seeds(config: Config, seeds, scheme: str, jobs: int = 1) -> list[RunMetrics]:
    tasks = [(config, int(s), scheme) for s in seeds]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_one, tasks))  # map keeps rank order


def summarize(runs: list[RunMetrics]) -> dict:
    """Across-run statistics; per-run aggregates are included for recomputation."""
    te = np.array([r.mean_track_error for r in runs])
    sl = np.array([r.mean_self_loc_error for r in runs])
    kinds = sorted(runs[0].resource_by_kind)
    finite = te[np.isfinite(te)]
    return {
        "scheme": runs[0].scheme,
        "n_runs": len(runs),
        "mean_track_error": float(finite.mean()) if finite.size else math.nan,
        "std_track_error": float(finite.std()) if finite.size else math.nan,
        "mean_self_loc_error": float(sl.mean()),
        "std_self_loc_error": float(sl.std()),
        "resource_s": {k: float(np.mean([r.resource_by_kind[k] for r in runs])) for k in kinds},
        "timeline_violations": int(sum(r.timeline_violations for r in runs)),
        "runs": [r.aggregates() for r in runs],
    }


def monte_carlo(config: Config, n_runs: int, scheme: str, jobs: int = 1, base_seed: int | None = None):
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base = config.monte_carlo.base_seed if base_seed is None else base_seed
    runs = run_seeds(config, range(base, base + n_runs), scheme, jobs)
    return summarize(runs), runs
