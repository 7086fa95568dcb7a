"""Radar resource managers: time-balanced, Q-RAM with fixed nav intervals, Q-RAM nav.

Every manager turns an immutable :class:`Snapshot` of the estimated world into
a :class:`Plan` for one planning interval. Dwell steering angles in a plan are
those predicted at planning time; the simulator re-steers at execution.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Hashable, Sequence

import numpy as np

from . import qram
from .config import Config, ManagerSettings
from .kalman import PlannedMeasurement
from .nav import (Attitude, Constellation, ImuModel, NavState, ecef_to_measurement, forecast_covariance,
                  planned_nav_measurement, select_satellite, visible_satellites)
from .radar import (Dwell, DwellInfeasible, Purpose, RadarParams, beamwidth, db_to_linear, detection_probability,
                    dwell_for_target_snr, measurement_noise, snr)
from .tracking import (Track, forecast_track_covariance, planned_track_measurement, track_quality)

_TOL = 1e-9


class TaskKind(str, Enum):
    SEARCH = "search_sector"
    TRACK = "track_update"
    NAV = "nav_update"


@dataclass(frozen=True)
class SearchBurst:
    """``n_beams`` consecutive raster positions starting at ``first_beam`` (wrapping)."""

    first_beam: int
    n_beams: int


@dataclass(frozen=True)
class RadarTaskRequest:
    kind: TaskKind
    due_time: float
    priority: int
    dwell: Dwell
    subject: Hashable
    seq: int = 0  # stable order among otherwise equal requests

    def __post_init__(self):
        if not self.dwell.timeline_cost > 0:
            raise ValueError("dwell timeline cost must be positive")


@dataclass(frozen=True)
class ScheduledTask:
    start: float
    request: RadarTaskRequest

    @property
    def end(self) -> float:
        return self.start + self.request.dwell.timeline_cost


@dataclass(frozen=True)
class SatelliteDwell:
    sat_id: Hashable
    dwell: Dwell
    snr: float
    pd: float


@dataclass(frozen=True)
class NavConfig:
    config_id: str
    satellite_dwells: tuple = ()
    total_resource: float = 0.0

    def __post_init__(self):
        if len(self.satellite_dwells) > 3:
            raise ValueError("at most three satellites per navigation update")
        total = sum(s.dwell.timeline_cost for s in self.satellite_dwells)
        if abs(total - self.total_resource) > 1e-9 * max(1.0, total):
            raise ValueError("total_resource must equal the summed dwell timeline costs")

    @property
    def sat_ids(self):
        return tuple(s.sat_id for s in self.satellite_dwells)


SKIP_NAV = NavConfig("skip")


class PlanError(AssertionError):
    pass


@dataclass(frozen=True)
class Plan:
    scheme: str
    interval_start: float
    interval_end: float
    timeline: tuple[ScheduledTask, ...]
    declared_utility: float = 0.0
    resource_used_by_kind: dict = field(default_factory=dict)
    nav_config: str = "skip"
    branch_utilities: dict = field(default_factory=dict)
    warnings: tuple = ()

    @property
    def length(self) -> float:
        return self.interval_end - self.interval_start

    @property
    def total_cost(self) -> float:
        return sum(s.request.dwell.timeline_cost for s in self.timeline)

    def check(self):
        """Raise :class:`PlanError` if the plan overbooks or leaves its interval."""
        prev_end = self.interval_start
        for s in self.timeline:
            if s.start < prev_end - _TOL:
                raise PlanError(f"dwell at {s.start:.6f} overlaps the previous one ending {prev_end:.6f}")
            prev_end = s.end
        if prev_end > self.interval_end + _TOL:
            raise PlanError(f"timeline ends at {prev_end:.6f}, after interval end {self.interval_end:.6f}")
        if self.total_cost > self.length + _TOL:
            raise PlanError("summed timeline cost exceeds the interval length")
        return self


def _resource_by_kind(timeline) -> dict:
    out = {k.value: 0.0 for k in TaskKind}
    for s in timeline:
        out[s.request.kind.value] += s.request.dwell.timeline_cost
    return out


# --- snapshot ---------------------------------------------------------------

@dataclass(frozen=True)
class SearchRaster:
    """Beam positions covering the search sector at beamwidth spacing in sine space."""

    beams: np.ndarray  # (n, 2) steering az, el
    beam_dwell: Dwell  # identical sizing for every beam

    def __len__(self):
        return len(self.beams)

    @property
    def beam_cost(self) -> float:
        return self.beam_dwell.timeline_cost

    @property
    def scan_time(self) -> float:
        return len(self) * self.beam_cost

    def burst_beams(self, burst: SearchBurst) -> np.ndarray:
        idx = (burst.first_beam + np.arange(burst.n_beams)) % len(self)
        return self.beams[idx]

    def burst_dwell(self, burst: SearchBurst) -> Dwell:
        az, el = self.beams[burst.first_beam % len(self)]
        d = self.beam_dwell
        n = burst.n_beams
        return Dwell(float(az), float(el), n * d.transmit_time, n * d.timeline_cost, Purpose.SEARCH,
                     n * d.n_pulses)


@functools.lru_cache(maxsize=8)
def search_raster(radar: RadarParams, ms: ManagerSettings, target_rcs: float) -> SearchRaster:
    spacing, _ = beamwidth(radar, 0.0, 0.0)  # sine-space width is scan independent
    v_lo, v_hi = math.sin(math.radians(ms.search_el_min_deg)), math.sin(math.radians(ms.search_el_max_deg))
    beams = []
    n_rows = max(1, int(math.floor((v_hi - v_lo) / spacing)) + 1)
    for i in range(n_rows):
        v = v_lo + (i + 0.5) * (v_hi - v_lo) / n_rows
        el = math.asin(v)
        u_max = math.cos(el) * math.sin(math.radians(ms.search_az_limit_deg))
        n_cols = max(1, int(math.floor(2 * u_max / spacing)) + 1)
        us = -u_max + (np.arange(n_cols) + 0.5) * (2 * u_max / n_cols)
        # alternate direction row by row
        if i % 2:
            us = us[::-1]
        for u in us:
            beams.append((math.asin(u / math.cos(el)), el))
    beams = np.array(beams)
    dwell = dwell_for_target_snr(radar, 0.0, 0.0, ms.search_range, target_rcs, db_to_linear(ms.search_snr_db),
                                 Purpose.SEARCH)
    return SearchRaster(beams, dwell)


@dataclass(frozen=True)
class Snapshot:
    """Estimated world at the start of a planning interval."""

    time: float
    nav: NavState
    attitude: Attitude
    tracks: tuple  # Track objects predicted to ``time``
    constellation: Constellation
    config: Config
    raster_pointer: int = 0

    @property
    def interval(self) -> float:
        return self.config.managers.interval

    @property
    def radar(self) -> RadarParams:
        return self.config.radar

    @property
    def imu(self) -> ImuModel:
        return ImuModel(self.config.nav.imu_sigma, self.config.nav.imu_rate)

    @property
    def raster(self) -> SearchRaster:
        return search_raster(self.config.radar, self.config.managers, self.config.scenario.target_rcs)


# --- scheduling -------------------------------------------------------------

def time_balanced_next(tasks: Sequence[RadarTaskRequest], now: float) -> RadarTaskRequest:
    """Highest-priority overdue task (earliest due on ties), else the task due next."""
    if not tasks:
        raise ValueError("no tasks to choose from")
    overdue = [(i, t) for i, t in enumerate(tasks) if t.due_time < now]
    if overdue:
        return min(overdue, key=lambda it: (-it[1].priority, it[1].due_time, it[0]))[1]
    return min(enumerate(tasks), key=lambda it: (it[1].due_time, it[0]))[1]


def schedule(requests: Sequence[RadarTaskRequest], start: float, end: float) -> tuple[ScheduledTask, ...]:
    """Place requests on ``[start, end]`` in time-balanced order.

    A task starts at its due time or as soon as the antenna is free, but never
    so late that the remaining work would overrun the interval. The caller
    guarantees the summed cost fits.
    """
    pending = list(requests)
    remaining = sum(r.dwell.timeline_cost for r in pending)
    if remaining > end - start + _TOL:
        raise PlanError("requests exceed the interval")
    now = start
    out = []
    while pending:
        r = time_balanced_next(pending, now)
        pending.remove(r)
        t = min(max(now, r.due_time), end - remaining)
        t = max(t, now)
        out.append(ScheduledTask(t, r))
        now = t + r.dwell.timeline_cost
        remaining -= r.dwell.timeline_cost
    return tuple(out)


# --- navigation requests ----------------------------------------------------

def _greedy_satellites(snap: Snapshot, max_sats: int) -> list[tuple[SatelliteDwell, PlannedMeasurement]]:
    """Up to ``max_sats`` satellites, each picked against the re-forecast covariance."""
    cfg, radar, nav = snap.config, snap.radar, snap.nav
    t0, att = snap.time, snap.attitude
    ids = visible_satellites(snap.constellation, t0, nav.position, att,
                             math.radians(cfg.nav.min_elevation_deg), radar.field_of_regard)
    target = db_to_linear(cfg.nav.nav_snr_db)
    cands = {}
    for sid in ids:
        p = snap.constellation.position(sid, t0)
        az, el, r = ecef_to_measurement(nav.position, att, p)
        try:
            d = dwell_for_target_snr(radar, az, el, r, snap.constellation.rcs_of(sid), target, Purpose.NAV)
        except DwellInfeasible:
            continue
        cands[sid] = (p, d)
    chosen = []
    planned: list[PlannedMeasurement] = []
    t_next = t0
    imu = snap.imu
    t_last = snap.constellation.times[-1] if hasattr(snap.constellation, "times") else math.inf
    while cands and len(chosen) < max_sats:
        horizon = max(t_next - t0, imu.dt)
        P = forecast_covariance(nav, planned, horizon, imu)
        sid = select_satellite([(s, p - nav.position) for s, (p, _) in sorted(cands.items(), key=lambda kv: _key(kv[0]))],
                               P[:3, :3])
        p, d = cands.pop(sid)
        tm = min(t_next + 0.5 * d.timeline_cost, t_last)
        s = float(snr(radar, d, ecef_to_measurement(nav.position, att, p)[2], snap.constellation.rcs_of(sid)))
        pd = float(detection_probability(s, radar.false_alarm_probability))
        noise = measurement_noise(radar, d.steer_az, d.steer_el, s)
        pm = planned_nav_measurement(nav, att, snap.constellation.position(sid, tm), tm, noise, pd)
        planned.append(pm)
        chosen.append((SatelliteDwell(sid, d, s, pd), pm))
        t_next += d.timeline_cost
    return chosen


def _key(x):
    return (type(x).__name__, x)


def rule_based_nav_request(snap: Snapshot, due_time: float | None = None) -> list[RadarTaskRequest]:
    """Navigation dwells (up to the configured three) at the nav SNR target."""
    due = snap.time if due_time is None else due_time
    sats = _greedy_satellites(snap, snap.config.nav.max_satellites)
    return [RadarTaskRequest(TaskKind.NAV, due, snap.config.managers.tb_priority_nav, sd.dwell, sd.sat_id, i)
            for i, (sd, _) in enumerate(sats)]


def enumerate_nav_configs(snap: Snapshot) -> list[NavConfig]:
    """Skip plus the incremental best-1, best-2, best-3 satellite configurations."""
    sats = _greedy_satellites(snap, snap.config.nav.max_satellites)
    configs = [SKIP_NAV]
    for n in range(1, len(sats) + 1):
        dwells = tuple(sd for sd, _ in sats[:n])
        configs.append(NavConfig(f"nav{n}", dwells, sum(s.dwell.timeline_cost for s in dwells)))
    return configs


def _nav_config_measurements(snap: Snapshot, config: NavConfig) -> list[PlannedMeasurement]:
    out, t = [], snap.time
    t_last = snap.constellation.times[-1] if hasattr(snap.constellation, "times") else math.inf
    for sd in config.satellite_dwells:
        tm = min(t + 0.5 * sd.dwell.timeline_cost, t_last)
        noise = measurement_noise(snap.radar, sd.dwell.steer_az, sd.dwell.steer_el, sd.snr)
        out.append(planned_nav_measurement(snap.nav, snap.attitude, snap.constellation.position(sd.sat_id, tm), tm,
                                           noise, sd.pd))
        t += sd.dwell.timeline_cost
    return out


def nav_forecast(snap: Snapshot, config: NavConfig) -> np.ndarray:
    """Navigation covariance expected at the end of the interval under ``config``."""
    return forecast_covariance(snap.nav, _nav_config_measurements(snap, config), snap.interval, snap.imu)


# --- task models ------------------------------------------------------------

def search_quality_utility(resource: float, nav_cov) -> tuple[tuple[float, float], float]:
    if resource < 0:
        raise ValueError("search resource must be non-negative")
    P = np.asarray(nav_cov, dtype=float)[:3, :3]
    try:
        # det^(1/6) as cbrt of the Cholesky diagonal product: exact for diagonal P
        with np.errstate(over="ignore"):
            sqrt_det = float(np.prod(np.diag(np.linalg.cholesky(P))))
    except np.linalg.LinAlgError:
        sqrt_det = 0.0
    q2 = 10.0 / float(np.cbrt(sqrt_det)) if sqrt_det > 0 else math.inf
    u = 0.01 * resource + 0.99 * min(q2, 1.0)
    return (resource, q2), u


def build_search_taskmodel(snap: Snapshot, nav_cov) -> qram.TaskModel:
    raster = snap.raster
    points = []
    for g in snap.config.managers.search_grants:
        n_beams = int(math.floor(g / raster.beam_cost + 1e-9))
        cost = n_beams * raster.beam_cost
        q, u = search_quality_utility(cost, nav_cov)
        coverage = n_beams / len(raster)
        points.append(qram.ConfigurationPoint(f"search{g:g}", (cost,), u, (q[0], q[1], coverage), n_beams))
    return qram.TaskModel("search", points)


@dataclass(frozen=True)
class TrackOption:
    """One track configuration before nav coupling is applied."""

    config_id: str
    dwell: Dwell | None
    n_updates: int
    covariance: np.ndarray  # forecast at interval end, nav error excluded

    @property
    def resource(self) -> float:
        return 0.0 if self.dwell is None else self.n_updates * self.dwell.timeline_cost


def track_update_times(start: float, interval: float, n: int) -> list[float]:
    return [start + (j + 0.5) * interval / n for j in range(n)]


def track_options(snap: Snapshot, track: Track) -> list[TrackOption]:
    """Skip plus {1, 2 updates} x {dwell SNR menu}, omitting infeasible dwells."""
    ms, radar = snap.config.managers, snap.radar
    T, t0, q = snap.interval, snap.time, snap.config.tracking.process_noise
    skip = TrackOption("skip", None, 0, forecast_track_covariance(track, [], T, None, q))
    opts = [skip]
    nav = snap.nav
    mid = t0 + 0.5 * T
    own_mid = nav.position + nav.velocity * (mid - nav.time)
    tgt_mid = track.position + track.velocity * (mid - track.time)
    az, el, r = ecef_to_measurement(own_mid, snap.attitude, tgt_mid)
    if abs(az) > radar.field_of_regard or abs(el) > radar.field_of_regard:
        return opts
    rcs = snap.config.scenario.target_rcs
    for snr_db in ms.track_snr_menu_db:
        try:
            d = dwell_for_target_snr(radar, az, el, r, rcs, db_to_linear(snr_db), Purpose.TRACK)
        except DwellInfeasible:
            continue
        s = float(snr(radar, d, r, rcs))
        pd = float(detection_probability(s, radar.false_alarm_probability))
        noise = measurement_noise(radar, az, el, s)
        for n in ms.track_update_menu:
            planned = []
            for tm in track_update_times(t0, T, n):
                own = nav.position + nav.velocity * (tm - nav.time)
                planned.append(planned_track_measurement(track, own, snap.attitude, tm, noise, pd))
            P = forecast_track_covariance(track, planned, T, None, q)
            opts.append(TrackOption(f"{n}x{snr_db:g}dB", d, n, P))
    return opts


def _coupled_utility(P, nav_cov) -> tuple[float, float]:
    if nav_cov is not None:
        P = P.copy()
        P[:3, :3] += np.asarray(nav_cov)[:3, :3]
    tq = track_quality(P)
    return tq.q_track, tq.u_track


def build_track_taskmodel(snap: Snapshot, track: Track, nav_cov, options: list[TrackOption] | None = None
                          ) -> qram.TaskModel:
    """Track configurations with utility of the coupled end-of-interval covariance."""
    if options is None:
        options = track_options(snap, track)
    coupling = snap.config.managers.coupling
    points = []
    for o in options:
        qv, u = _coupled_utility(o.covariance, nav_cov if coupling else None)
        points.append(qram.ConfigurationPoint(o.config_id, (o.resource,), u, (qv,), o))
    return qram.TaskModel(("track", track.track_id), points)


# --- Q-RAM plans --------------------------------------------------------------

def _nav_requests(config: NavConfig, t0: float, priority: int) -> list[RadarTaskRequest]:
    return [RadarTaskRequest(TaskKind.NAV, t0, priority, sd.dwell, sd.sat_id, i)
            for i, sd in enumerate(config.satellite_dwells)]


def _allocation_requests(snap: Snapshot, alloc: qram.Allocation) -> list[RadarTaskRequest]:
    ms = snap.config.managers
    t0, T = snap.time, snap.interval
    reqs = []
    for task_id, p in alloc.points.items():
        if task_id == "search":
            n_beams = p.payload or 0
            if n_beams == 0:
                continue
            n_bursts = max(1, math.ceil(n_beams / ms.search_burst_beams))
            ptr = snap.raster_pointer
            for k in range(n_bursts):
                nb = min(ms.search_burst_beams, n_beams - k * ms.search_burst_beams)
                burst = SearchBurst(ptr % len(snap.raster), nb)
                reqs.append(RadarTaskRequest(TaskKind.SEARCH, t0 + k * T / n_bursts, ms.tb_priority_search,
                                             snap.raster.burst_dwell(burst), burst, k))
                ptr += nb
        elif isinstance(task_id, tuple) and task_id[0] == "track":
            o: TrackOption = p.payload
            if o is None or o.dwell is None:
                continue
            for j, tm in enumerate(track_update_times(t0, T, o.n_updates)):
                reqs.append(RadarTaskRequest(TaskKind.TRACK, tm, ms.tb_priority_track, o.dwell, task_id[1], j))
    return reqs


def _qram_tasks(snap: Snapshot, nav_cov, options_by_track: dict) -> list[qram.TaskModel]:
    cov = nav_cov if snap.config.managers.coupling else np.zeros((3, 3))
    tasks = [build_search_taskmodel(snap, cov)]
    for tr in snap.tracks:
        tasks.append(build_track_taskmodel(snap, tr, nav_cov, options_by_track[tr.track_id]))
    return tasks


def _finish(snap: Snapshot, scheme: str, requests, utility: float, nav_id: str, branches=None, warnings=()) -> Plan:
    t0 = snap.time
    tl = schedule(requests, t0, t0 + snap.interval)
    return Plan(scheme, t0, t0 + snap.interval, tl, float(utility), _resource_by_kind(tl), nav_id,
                dict(branches or {}), tuple(warnings)).check()


def qram_fixed_plan(snap: Snapshot, nav_due: bool, scheme: str = "qram-fixed") -> Plan:
    """Q-RAM over search and tracks after a mandatory rule-based nav update (when due)."""
    T = snap.interval
    warnings = []
    sats = [sd for sd, _ in _greedy_satellites(snap, snap.config.nav.max_satellites)] if nav_due else []
    # truncate a floor that cannot fit
    while sats and sum(sd.dwell.timeline_cost for sd in sats) > T + _TOL:
        sats.pop()
        warnings.append("navigation floor truncated to fit the interval")
    nav_cfg = (NavConfig(f"nav{len(sats)}", tuple(sats), sum(sd.dwell.timeline_cost for sd in sats))
               if sats else SKIP_NAV)
    P_nav = nav_forecast(snap, nav_cfg)
    options = {tr.track_id: track_options(snap, tr) for tr in snap.tracks}
    tasks = _qram_tasks(snap, P_nav, options)
    floor = qram.ConfigurationPoint("nav", (nav_cfg.total_resource,), 0.0)
    tasks.append(qram.TaskModel("nav", (floor,), mandatory_floor="nav"))
    alloc = qram.solve(tasks, (T,))
    reqs = _nav_requests(nav_cfg, snap.time, snap.config.managers.tb_priority_nav) + _allocation_requests(snap, alloc)
    return _finish(snap, scheme, reqs, alloc.total_utility, nav_cfg.config_id,
                   {nav_cfg.config_id: alloc.total_utility}, warnings)


@dataclass(frozen=True)
class Branch:
    config: NavConfig
    nav_cov: np.ndarray
    allocation: qram.Allocation | None

    @property
    def utility(self) -> float:
        return -math.inf if self.allocation is None else self.allocation.total_utility


def evaluate_nav_branches(snap: Snapshot) -> list[Branch]:
    """Re-solve Q-RAM once per navigation configuration."""
    T = snap.interval
    options = {tr.track_id: track_options(snap, tr) for tr in snap.tracks}
    branches = []
    for c in enumerate_nav_configs(snap):
        if c.total_resource > T + _TOL:
            continue
        P_nav = nav_forecast(snap, c)
        tasks = _qram_tasks(snap, P_nav, options)
        branches.append(Branch(c, P_nav, qram.solve(tasks, (T - c.total_resource,))))
    return branches


def qram_nav_plan(snap: Snapshot, scheme: str = "qram-nav") -> Plan:
    branches = evaluate_nav_branches(snap)
    best = branches[0]
    for b in branches[1:]:  # configs come in increasing resource order
        if b.utility > best.utility + 1e-12:
            best = b
    if any(b.utility > best.utility + 1e-12 for b in branches):
        raise PlanError("chosen navigation branch is not optimal")
    reqs = _nav_requests(best.config, snap.time, snap.config.managers.tb_priority_nav)
    reqs += _allocation_requests(snap, best.allocation)
    return _finish(snap, scheme, reqs, best.utility, best.config.config_id,
                   {b.config.config_id: b.utility for b in branches})


# --- time-balanced --------------------------------------------------------------

@dataclass(frozen=True)
class TBState:
    nav_due: float = -math.inf
    search_due: float = -math.inf
    track_due: dict = field(default_factory=dict)


def time_balanced_plan(snap: Snapshot, state: TBState, nav_interval: float, scheme: str = "tb"
                       ) -> tuple[Plan, TBState]:
    """Simulate the rule-based scheduler over one interval.

    Tasks that cannot finish before the interval ends are carried over (they
    stay overdue); a nav update that does not start at all is retried.
    """
    ms, cfg = snap.config.managers, snap.config
    t0 = snap.time
    t_end = t0 + snap.interval
    raster = snap.raster
    beams_per_burst = min(ms.search_burst_beams, len(raster))
    burst_spacing = ms.tb_search_revisit * beams_per_burst / len(raster)

    nav_reqs = rule_based_nav_request(snap, max(state.nav_due, t0 - nav_interval)) if state.nav_due < t_end else []
    track_dwells = {}
    for tr in snap.tracks:
        az, el, r = ecef_to_measurement(snap.nav.position, snap.attitude, tr.position)
        if abs(az) > snap.radar.field_of_regard or abs(el) > snap.radar.field_of_regard:
            continue
        try:
            track_dwells[tr.track_id] = dwell_for_target_snr(snap.radar, az, el, r, cfg.scenario.target_rcs,
                                                             db_to_linear(ms.tb_track_snr_db), Purpose.TRACK)
        except DwellInfeasible:
            continue
    track_due = {tid: state.track_due.get(tid, t0) for tid in track_dwells}
    search_due = max(state.search_due, t0 - snap.interval)
    ptr = snap.raster_pointer
    nav_pending = list(nav_reqs)
    nav_started = None
    now = t0
    timeline = []
    skipped = set()
    seq = 0
    while True:
        cands = [r for r in nav_pending if ("nav", r.seq) not in skipped]
        for tid, d in track_dwells.items():
            if track_due[tid] < t_end and ("track", tid) not in skipped:
                cands.append(RadarTaskRequest(TaskKind.TRACK, track_due[tid], ms.tb_priority_track, d, tid))
        if search_due < t_end and "search" not in skipped:
            burst = SearchBurst(ptr % len(raster), beams_per_burst)
            cands.append(RadarTaskRequest(TaskKind.SEARCH, search_due, ms.tb_priority_search,
                                          raster.burst_dwell(burst), burst))
        cands = [c for c in cands if c.due_time < t_end]
        if not cands:
            break
        r = time_balanced_next(cands, now)
        start = max(now, r.due_time)
        if start + r.dwell.timeline_cost > t_end + _TOL:
            skipped.add(("nav", r.seq) if r.kind is TaskKind.NAV else
                        ("track", r.subject) if r.kind is TaskKind.TRACK else "search")
            continue
        timeline.append(ScheduledTask(start, replace(r, seq=seq)))
        seq += 1
        now = start + r.dwell.timeline_cost
        if r.kind is TaskKind.NAV:
            nav_pending.remove(r)
            if nav_started is None:
                nav_started = start
        elif r.kind is TaskKind.TRACK:
            track_due[r.subject] = start + ms.tb_track_revisit
        else:
            ptr += r.subject.n_beams
            search_due += burst_spacing
    nav_due = state.nav_due
    if nav_started is not None:
        nav_due = nav_started + nav_interval
    elif not nav_reqs and state.nav_due < t_end:
        nav_due = state.nav_due  # nothing visible: stays overdue
    new_state = TBState(nav_due, search_due, track_due)
    tl = tuple(timeline)
    n_nav = sum(1 for s in tl if s.request.kind is TaskKind.NAV)
    plan = Plan(scheme, t0, t_end, tl, 0.0, _resource_by_kind(tl), f"nav{n_nav}" if n_nav else "skip").check()
    return plan, new_state


# --- planner objects ------------------------------------------------------------

SCHEMES = ("tb-10", "tb-20", "tb-30", "qram-10", "qram-20", "qram-30", "qram-nav")


def scheme_name(kind: str, nav_interval: float | None = None) -> str:
    if kind == "qram-nav":
        return kind
    base = {"tb": "tb", "qram-fixed": "qram", "qram": "qram"}[kind]
    return f"{base}-{int(nav_interval)}"


class Planner:
    """Stateful wrapper owned by one simulation run."""

    def __init__(self, scheme: str):
        if scheme not in SCHEMES and not scheme.startswith(("tb-", "qram-")):
            raise ValueError(f"unknown scheme {scheme!r}")
        self.scheme = scheme
        self.nav_interval = None if scheme == "qram-nav" else float(scheme.split("-")[1])
        self.tb_state = TBState()
        self.last_nav = -math.inf

    def plan(self, snap: Snapshot) -> Plan:
        if self.scheme == "qram-nav":
            return qram_nav_plan(snap, self.scheme)
        if self.scheme.startswith("tb-"):
            plan, self.tb_state = time_balanced_plan(snap, self.tb_state, self.nav_interval, self.scheme)
            return plan
        due = snap.time >= self.last_nav + self.nav_interval - _TOL
        plan = qram_fixed_plan(snap, due, self.scheme)
        if plan.nav_config != "skip":
            self.last_nav = snap.time
        return plan


def interval_taskmodels(snap: Snapshot, nav_config_id: str) -> list[qram.TaskModel]:
    """The search/track task models Q-RAM saw for ``nav_config_id`` (for inspection)."""
    by_id = {c.config_id: c for c in enumerate_nav_configs(snap)}
    cfg = by_id.get(nav_config_id, SKIP_NAV)
    options = {tr.track_id: track_options(snap, tr) for tr in snap.tracks}
    return _qram_tasks(snap, nav_forecast(snap, cfg), options)
