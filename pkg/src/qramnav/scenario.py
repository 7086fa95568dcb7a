"""World description: own-ship trajectory, targets, satellite constellation."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import Config, ConstellationSettings, ScenarioSettings
from .geodesy import (MU_EARTH, OMEGA_EARTH, WGS84_A, WGS84_E2, ecef_to_geodetic,
                      geodetic_to_ecef, ned_matrix)
from .nav import Attitude, Constellation, SatelliteEphemeris
from .radar import RadarParams

log = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t_s", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az", "roll", "pitch", "yaw"]
EPHEMERIS_COLUMNS = ["sat_id", "t_s", "x_ecef_m", "y_ecef_m", "z_ecef_m"]

# Random substreams derived from the run seed; fixed indices keep schemes comparable.
STREAM_NAV_INIT, STREAM_IMU, STREAM_DETECTION, STREAM_MEAS_NOISE, STREAM_PLACEMENT = range(5)


def substream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stream)])


class ScenarioFileError(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Sampled own-ship truth; ECEF position/velocity/acceleration and NED Euler angles."""

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    yaw: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing with >= 2 samples")
        for name in ("position", "velocity", "acceleration", "roll", "pitch", "yaw"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if len(arr) != len(t) or not np.all(np.isfinite(arr)):
                raise ValueError(f"trajectory field {name} malformed")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", t)

    def __len__(self):
        return len(self.t)

    def attitude(self, i: int) -> Attitude:
        return Attitude(self.yaw[i], self.pitch[i], self.roll[i])

    def _interp(self, arr, t):
        if arr.ndim == 1:
            return float(np.interp(t, self.t, arr))
        return np.array([np.interp(t, self.t, arr[:, k]) for k in range(arr.shape[1])])

    def at(self, t: float):
        """Linearly interpolated (position, velocity, acceleration, attitude)."""
        if t < self.t[0] - 1e-9 or t > self.t[-1] + 1e-9:
            raise ValueError(f"time {t} outside trajectory span")
        yaw = float(np.interp(t, self.t, np.unwrap(self.yaw)))
        return (self._interp(self.position, t), self._interp(self.velocity, t),
                self._interp(self.acceleration, t),
                Attitude(yaw, self._interp(self.pitch, t), self._interp(self.roll, t)))

    def resample(self, dt: float) -> "Trajectory":
        """Resample on a uniform grid so that position is the exact trapezoidal
        integral of velocity and acceleration the forward difference of velocity.

        This is the form the IMU mechanisation assumes; with zero sensor noise
        the dead-reckoned estimate then tracks truth exactly.
        """
        n = int(round((self.t[-1] - self.t[0]) / dt))
        t = self.t[0] + dt * np.arange(n + 1)
        vel = np.stack([np.interp(t, self.t, self.velocity[:, k]) for k in range(3)], axis=1)
        pos = np.empty_like(vel)
        pos[0] = self.position[0]
        pos[1:] = self.position[0] + np.cumsum(0.5 * dt * (vel[:-1] + vel[1:]), axis=0)
        acc = np.empty_like(vel)
        acc[:-1] = np.diff(vel, axis=0) / dt
        acc[-1] = acc[-2]
        yaw = np.interp(t, self.t, np.unwrap(self.yaw))
        return Trajectory(t, pos, vel, acc, np.interp(t, self.t, self.roll), np.interp(t, self.t, self.pitch), yaw)

    def body_matrices(self) -> np.ndarray:
        """ECEF -> antenna rotation at every sample, shape (n, 3, 3)."""
        lat, lon, _ = ecef_to_geodetic(self.position)
        sl, cl, so, co = np.sin(lat), np.cos(lat), np.sin(lon), np.cos(lon)
        T = np.empty((len(self), 3, 3))
        T[:, 0] = np.stack([-sl * co, -sl * so, cl], axis=1)
        T[:, 1] = np.stack([-so, co, np.zeros_like(so)], axis=1)
        T[:, 2] = np.stack([-cl * co, -cl * so, -sl], axis=1)
        cy, sy = np.cos(self.yaw), np.sin(self.yaw)
        cp, sp = np.cos(self.pitch), np.sin(self.pitch)
        cr, sr = np.cos(self.roll), np.sin(self.roll)
        E = np.empty((len(self), 3, 3))
        # rx(roll) @ ry(pitch) @ rz(yaw), written out
        E[:, 0, 0] = cp * cy
        E[:, 0, 1] = cp * sy
        E[:, 0, 2] = -sp
        E[:, 1, 0] = sr * sp * cy - cr * sy
        E[:, 1, 1] = sr * sp * sy + cr * cy
        E[:, 1, 2] = sr * cp
        E[:, 2, 0] = cr * sp * cy + sr * sy
        E[:, 2, 1] = cr * sp * sy - sr * cy
        E[:, 2, 2] = cr * cp
        return E @ T


@dataclass(frozen=True)
class Target:
    """Constant-velocity ECEF truth: position ``p_ref`` at ``t_ref``."""

    target_id: int
    p_ref: np.ndarray
    velocity: np.ndarray
    t_ref: float = 0.0
    rcs: float = 0.1

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return self.p_ref + (t - self.t_ref)[..., None] * self.velocity if t.ndim else \
            self.p_ref + (float(t) - self.t_ref) * self.velocity


@dataclass
class Scenario:
    duration: float
    fighter: Trajectory
    targets: list
    constellation: Constellation
    radar: RadarParams = field(default_factory=RadarParams)
    initial_nav_error: tuple = (100.0, 10.0)
    seed: int = 0


# --- own-ship trajectory -------------------------------------------------------

def fighter_trajectory(settings: ScenarioSettings, dt: float = 0.01) -> Trajectory:
    """Level constant-speed flight with one coordinated heading change."""
    n = int(round(settings.duration / dt))
    t = dt * np.arange(n + 1)
    h0 = math.radians(settings.initial_heading_deg)
    h1 = math.radians(settings.final_heading_deg)
    rate = settings.turn_rate * np.sign(h1 - h0)
    t_end = settings.turn_command_time + abs(h1 - h0) / max(abs(rate), 1e-12)
    heading = np.where(
        t < settings.turn_command_time, h0,
        np.where(t < t_end, h0 + rate * (t - settings.turn_command_time), h1),
    )
    V, alt = settings.speed, settings.altitude
    vn, ve = V * np.cos(heading), V * np.sin(heading)

    lat0, lon0 = math.radians(settings.origin_lat_deg), math.radians(settings.origin_lon_deg)
    s0 = math.sin(lat0)
    m_rad = WGS84_A * (1 - WGS84_E2) / (1 - WGS84_E2 * s0 * s0) ** 1.5 + alt
    lat = lat0 + np.concatenate([[0.0], np.cumsum(0.5 * dt * (vn[:-1] + vn[1:]))]) / m_rad
    n_rad = WGS84_A / np.sqrt(1 - WGS84_E2 * np.sin(lat) ** 2) + alt
    lon_rate = ve / (n_rad * np.cos(lat))
    lon = lon0 + np.concatenate([[0.0], np.cumsum(0.5 * dt * (lon_rate[:-1] + lon_rate[1:]))])

    sl, cl, so, co = np.sin(lat), np.cos(lat), np.sin(lon), np.cos(lon)
    # NED -> ECEF applied to (vn, ve, 0)
    vel = np.stack([-sl * co * vn - so * ve, -sl * so * vn + co * ve, cl * vn], axis=1)
    p0 = geodetic_to_ecef(lat0, lon0, alt)
    pos = p0 + np.concatenate([np.zeros((1, 3)), np.cumsum(0.5 * dt * (vel[:-1] + vel[1:]), axis=0)])
    acc = np.empty_like(vel)
    acc[:-1] = np.diff(vel, axis=0) / dt
    acc[-1] = acc[-2]
    in_turn = (t >= settings.turn_command_time) & (t < t_end)
    roll = np.where(in_turn, np.arctan(V * abs(rate) / 9.80665) * np.sign(rate), 0.0)
    return Trajectory(t, pos, vel, acc, roll, np.zeros_like(t), heading)


# --- targets ------------------------------------------------------------------

# range m, bearing deg, altitude m, speed m/s, heading deg; relative to the
# own-ship position at the nominal end of the turn
NOMINAL_TARGETS = (
    (45e3, 175.0, 4000.0, 200.0, 270.0),
    (55e3, 190.0, 6000.0, 250.0, 95.0),
    (65e3, 165.0, 8000.0, 300.0, 220.0),
    (75e3, 200.0, 5000.0, 150.0, 10.0),
)


def place_targets(fighter: Trajectory, settings: ScenarioSettings, rng: np.random.Generator) -> list[Target]:
    i_ref = int(np.searchsorted(fighter.t, settings.nominal_turn_end))
    i_ref = min(i_ref, len(fighter) - 1)
    t_ref = float(fighter.t[i_ref])
    lat, lon, _ = ecef_to_geodetic(fighter.position[i_ref])
    T = ned_matrix(float(lat), float(lon))
    targets = []
    for k, (rng_m, bearing, alt, speed, heading) in enumerate(NOMINAL_TARGETS):
        rng_m += settings.target_jitter_range * rng.uniform(-1, 1)
        bearing = math.radians(bearing + settings.target_jitter_bearing_deg * rng.uniform(-1, 1))
        heading = math.radians(heading + settings.target_jitter_heading_deg * rng.uniform(-1, 1))
        speed = min(speed * rng.uniform(0.9, 1.1), 300.0)
        # place on the local tangent plane then lift to the requested altitude
        ned = np.array([rng_m * math.cos(bearing), rng_m * math.sin(bearing), 0.0])
        p = fighter.position[i_ref] + T.T @ ned
        plat, plon, _ = ecef_to_geodetic(p)
        p = geodetic_to_ecef(float(plat), float(plon), alt)
        v = ned_matrix(float(plat), float(plon)).T @ np.array([speed * math.cos(heading), speed * math.sin(heading), 0.0])
        targets.append(Target(k, p, v, t_ref, settings.target_rcs))
    return targets


# --- constellation ------------------------------------------------------------

def generate_constellation(n_planes: int, sats_per_plane: int, altitude_m: float, inclination_rad: float,
                           duration: float, dt: float = 1.0, phasing: int = 1, rcs: float = 1.0,
                           epoch_offset: float = 0.0) -> list[SatelliteEphemeris]:
    """Walker-delta shell of circular orbits, sampled in ECEF."""
    if not altitude_m > 0:
        raise ValueError("altitude must be positive")
    r = WGS84_A + altitude_m
    mean_motion = math.sqrt(MU_EARTH / r**3)
    n_t = int(math.ceil(duration / dt)) + 1
    t = dt * np.arange(n_t)
    total = n_planes * sats_per_plane
    plane = np.repeat(np.arange(n_planes), sats_per_plane)
    slot = np.tile(np.arange(sats_per_plane), n_planes)
    raan = 2 * np.pi * plane / n_planes
    m0 = 2 * np.pi * slot / sats_per_plane + 2 * np.pi * phasing * plane / total
    u = m0[:, None] + mean_motion * (t[None, :] + epoch_offset)
    cu, su = np.cos(u), np.sin(u)
    cO, sO = np.cos(raan)[:, None], np.sin(raan)[:, None]
    ci, si = math.cos(inclination_rad), math.sin(inclination_rad)
    x = r * (cu * cO - su * ci * sO)
    y = r * (cu * sO + su * ci * cO)
    z = r * (su * si)
    theta = OMEGA_EARTH * (t + epoch_offset)[None, :]
    xe = np.cos(theta) * x + np.sin(theta) * y
    ye = -np.sin(theta) * x + np.cos(theta) * y
    pos = np.stack([xe, ye, z], axis=-1)
    return [SatelliteEphemeris(int(i), t, pos[i], rcs) for i in range(total)]


def constellation_from_settings(cs: ConstellationSettings, duration: float) -> Constellation:
    return Constellation(generate_constellation(
        cs.n_planes, cs.sats_per_plane, cs.altitude, math.radians(cs.inclination_deg), duration,
        cs.sample_dt, cs.phasing, cs.rcs, cs.epoch_offset))


# --- file IO ------------------------------------------------------------------

def _read_csv(path, required):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ScenarioFileError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ScenarioFileError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise ScenarioFileError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ScenarioFileError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append((lineno, row))
    return header, idx, rows


def load_trajectory(path) -> Trajectory:
    header, _, rows = _read_csv(path, TRAJECTORY_COLUMNS)
    cols = [header.index(c) for c in TRAJECTORY_COLUMNS]
    data = np.empty((len(rows), len(cols)))
    prev_t = -math.inf
    for i, (lineno, row) in enumerate(rows):
        try:
            vals = [float(row[c]) for c in cols]
        except ValueError:
            raise ScenarioFileError(f"{path}:{lineno}: non-numeric value") from None
        if not all(math.isfinite(v) for v in vals):
            raise ScenarioFileError(f"{path}:{lineno}: non-finite value")
        if vals[0] <= prev_t:
            raise ScenarioFileError(f"{path}:{lineno}: timestamps must increase strictly")
        if vals[0] - prev_t > 5.0 and i > 0:
            log.warning("%s:%d: time gap of %.3g s", path, lineno, vals[0] - prev_t)
        prev_t = vals[0]
        data[i] = vals
    if len(data) < 2:
        raise ScenarioFileError(f"{path}: need at least two samples")
    return Trajectory(data[:, 0], data[:, 1:4], data[:, 4:7], data[:, 7:10], data[:, 10], data[:, 11], data[:, 12])


def save_trajectory(path, traj: Trajectory, stride: int = 1):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(0, len(traj), stride):
            w.writerow([repr(float(v)) for v in (
                traj.t[i], *traj.position[i], *traj.velocity[i], *traj.acceleration[i],
                traj.roll[i], traj.pitch[i], traj.yaw[i])])


def load_constellation(path, default_rcs: float = 1.0) -> Constellation:
    header, _, rows = _read_csv(path, EPHEMERIS_COLUMNS)
    ci = {c: header.index(c) for c in EPHEMERIS_COLUMNS}
    rcs_col = header.index("rcs_m2") if "rcs_m2" in header else None
    per_sat: dict = {}
    rcs: dict = {}
    for lineno, row in rows:
        sid_raw = row[ci["sat_id"]].strip()
        sid = int(sid_raw) if sid_raw.lstrip("-").isdigit() else sid_raw
        try:
            vals = [float(row[ci[c]]) for c in EPHEMERIS_COLUMNS[1:]]
        except ValueError:
            raise ScenarioFileError(f"{path}:{lineno}: non-numeric value") from None
        if not all(math.isfinite(v) for v in vals):
            raise ScenarioFileError(f"{path}:{lineno}: non-finite value")
        samples = per_sat.setdefault(sid, [])
        if samples and vals[0] <= samples[-1][0]:
            raise ScenarioFileError(f"{path}:{lineno}: timestamps of satellite {sid!r} must increase strictly")
        samples.append(vals)
        if rcs_col is not None:
            rcs[sid] = float(row[rcs_col])
    ephs = []
    for sid, samples in per_sat.items():
        arr = np.array(samples)
        if len(arr) < 2:
            raise ScenarioFileError(f"{path}: satellite {sid!r} has fewer than two samples")
        ephs.append(SatelliteEphemeris(sid, arr[:, 0], arr[:, 1:], rcs.get(sid, default_rcs)))
    return Constellation(ephs)


def save_constellation(path, constellation: Constellation):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EPHEMERIS_COLUMNS + ["rcs_m2"])
        for e in constellation.ephemerides:
            for t, p in zip(e.times, e.positions):
                w.writerow([e.sat_id, repr(float(t)), repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                            repr(float(e.rcs))])


# --- assembly -----------------------------------------------------------------

def build_scenario(config: Config, seed: int) -> Scenario:
    """Scenario for one Monte-Carlo run; only target placement depends on ``seed``."""
    sc = config.scenario
    imu_dt = 1.0 / config.nav.imu_rate
    if sc.trajectory_file:
        fighter = load_trajectory(sc.trajectory_file).resample(imu_dt)
    else:
        fighter = fighter_trajectory(sc, imu_dt)
    if sc.constellation_file:
        constellation = load_constellation(sc.constellation_file, config.constellation.rcs)
    else:
        constellation = constellation_from_settings(config.constellation, sc.duration)
    targets = place_targets(fighter, sc, substream(seed, STREAM_PLACEMENT))
    return Scenario(sc.duration, fighter, targets, constellation, config.radar,
                    (sc.initial_pos_sigma, sc.initial_vel_sigma), seed)


def builtin_scenario(seed: int, config: Config | None = None) -> Scenario:
    config = config or Config()
    sc = config.scenario
    if sc.trajectory_file or sc.constellation_file:
        config = config.replace(scenario=replace(sc, trajectory_file="", constellation_file=""))
    return build_scenario(config, seed)
