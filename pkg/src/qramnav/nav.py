"""Self-localisation: IMU-driven EKF aided by radar measurements of satellites."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .geodesy import ecef_to_geodetic, euler_matrix, ned_matrix, ned_matrix_at, wrap_angle
from .kalman import PlannedMeasurement, expected_information_update, joseph_update, mahalanobis2, symmetrize
from .radar import MeasurementNoise


class NoSatelliteError(LookupError):
    pass


@dataclass(frozen=True)
class NavState:
    time: float
    position: np.ndarray
    velocity: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float).reshape(6, 6))

    @property
    def mean(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    @property
    def position_covariance(self) -> np.ndarray:
        return self.covariance[:3, :3]


@dataclass(frozen=True)
class ImuModel:
    accel_noise_sigma: float = 0.02  # m/s^2 per axis and sample
    update_rate: float = 100.0  # Hz

    def __post_init__(self):
        if not (self.accel_noise_sigma > 0 and self.update_rate > 0):
            raise ValueError("IMU sigma and rate must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.update_rate


@dataclass(frozen=True)
class Attitude:
    """Yaw, pitch, roll (rad) of the antenna relative to local NED."""

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", float(wrap_angle(self.yaw)))
        object.__setattr__(self, "roll", float(wrap_angle(self.roll)))
        if not all(math.isfinite(a) for a in (self.yaw, self.pitch, self.roll)):
            raise ValueError("attitude angles must be finite")

    def matrix(self) -> np.ndarray:
        return euler_matrix(self.yaw, self.pitch, self.roll)


@dataclass(frozen=True)
class SatelliteEphemeris:
    sat_id: Hashable
    times: np.ndarray
    positions: np.ndarray
    rcs: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        pos = np.asarray(self.positions, dtype=float).reshape(len(t), 3)
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError(f"ephemeris {self.sat_id!r} needs >= 2 strictly increasing samples")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", pos)

    def position_at(self, t: float) -> np.ndarray:
        if t < self.times[0] - 1e-9 or t > self.times[-1] + 1e-9:
            raise ValueError(f"time {t} outside ephemeris span of {self.sat_id!r}")
        return np.array([np.interp(t, self.times, self.positions[:, k]) for k in range(3)])


class Constellation:
    """Read-only set of ephemerides with vectorised interpolation."""

    def __init__(self, ephemerides: Sequence[SatelliteEphemeris]):
        self.ephemerides = list(ephemerides)
        self.ids = [e.sat_id for e in self.ephemerides]
        self.rcs = np.array([e.rcs for e in self.ephemerides], dtype=float)
        self._index = {sid: i for i, sid in enumerate(self.ids)}
        grids = [e.times for e in self.ephemerides]
        self._shared = bool(grids) and all(len(g) == len(grids[0]) and np.array_equal(g, grids[0]) for g in grids)
        if self._shared:
            self.times = grids[0]
            self._stack = np.stack([e.positions for e in self.ephemerides])  # (n_sat, n_t, 3)

    def __len__(self):
        return len(self.ephemerides)

    def positions_at(self, t: float) -> np.ndarray:
        if not self.ephemerides:
            return np.zeros((0, 3))
        if not self._shared:
            return np.array([e.position_at(t) for e in self.ephemerides])
        ts = self.times
        if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
            raise ValueError(f"time {t} outside constellation span [{ts[0]}, {ts[-1]}]")
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        return (1 - w) * self._stack[:, i] + w * self._stack[:, i + 1]

    def position(self, sat_id, t: float) -> np.ndarray:
        i = self._index[sat_id]
        if self._shared:
            return self._interp_one(i, t)
        return self.ephemerides[i].position_at(t)

    def _interp_one(self, i, t):
        ts = self.times
        if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
            raise ValueError(f"time {t} outside constellation span [{ts[0]}, {ts[-1]}]")
        j = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        w = (t - ts[j]) / (ts[j + 1] - ts[j])
        return (1 - w) * self._stack[i, j] + w * self._stack[i, j + 1]

    def rcs_of(self, sat_id) -> float:
        return float(self.rcs[self._index[sat_id]])


# --- propagation -----------------------------------------------------------

def _transition(tau: float) -> np.ndarray:
    F = np.eye(6)
    F[:3, 3:] = tau * np.eye(3)
    return F


def process_noise(imu: ImuModel, n_steps: int) -> np.ndarray:
    """Accumulated discrete process noise of ``n_steps`` IMU samples."""
    dt, s2 = imu.dt, imu.accel_noise_sigma**2
    n = n_steps
    s1 = n * n / 2.0
    sq = n**3 / 3.0 - n / 12.0
    q = s2 * np.array([[dt**4 * sq, dt**3 * s1], [dt**3 * s1, n * dt**2]])
    return np.kron(q, np.eye(3))


def propagate_covariance(P: np.ndarray, imu: ImuModel, n_steps: int) -> np.ndarray:
    if n_steps <= 0:
        return P
    F = _transition(n_steps * imu.dt)
    return symmetrize(F @ P @ F.T + process_noise(imu, n_steps))


def imu_propagate(state: NavState, measured_accel, dt: float, imu: ImuModel) -> NavState:
    """One double-integrator step with a constant measured acceleration."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    a = np.asarray(measured_accel, dtype=float)
    p = state.position + state.velocity * dt + 0.5 * a * dt * dt
    v = state.velocity + a * dt
    F = _transition(dt)
    g = np.array([[dt * dt / 2.0], [dt]])
    Q = imu.accel_noise_sigma**2 * np.kron(g @ g.T, np.eye(3))
    P = symmetrize(F @ state.covariance @ F.T + Q)
    return NavState(state.time + dt, p, v, P)


def propagate_span(state: NavState, measured_accels: np.ndarray, imu: ImuModel) -> NavState:
    """Apply ``len(measured_accels)`` IMU samples at once (same result as stepping)."""
    a = np.asarray(measured_accels, dtype=float).reshape(-1, 3)
    n = len(a)
    if n == 0:
        return state
    dt = imu.dt
    w = (n - np.arange(n) - 0.5)[:, None]
    v = state.velocity + dt * a.sum(axis=0)
    p = state.position + n * dt * state.velocity + dt * dt * (w * a).sum(axis=0)
    return NavState(state.time + n * dt, p, v, propagate_covariance(state.covariance, imu, n))


# --- measurement model ------------------------------------------------------

def body_matrix(own_position, attitude: Attitude) -> np.ndarray:
    """ECEF -> antenna frame rotation at ``own_position``."""
    return attitude.matrix() @ ned_matrix_at(own_position)


def spherical(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    r = np.linalg.norm(c, axis=-1)
    az = np.arctan2(c[..., 1], c[..., 0])
    el = np.arcsin(np.clip(-c[..., 2] / r, -1.0, 1.0))
    return np.stack([az, el, r], axis=-1)


def ecef_to_measurement(own_position, attitude: Attitude, sat_position, C: np.ndarray | None = None) -> np.ndarray:
    """(az, el, range) of ``sat_position`` in the antenna frame."""
    own = np.asarray(own_position, dtype=float)
    d = np.asarray(sat_position, dtype=float) - own
    if not np.any(d):
        raise ValueError("object coincides with own position")
    if C is None:
        C = body_matrix(own, attitude)
    return spherical(C @ d)


def measurement_to_ecef(own_position, attitude: Attitude, az, el, rng, C: np.ndarray | None = None) -> np.ndarray:
    own = np.asarray(own_position, dtype=float)
    if C is None:
        C = body_matrix(own, attitude)
    c = rng * np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), -np.sin(el)])
    return own + C.T @ c


def numeric_jacobian(own, attitude: Attitude, sat_position) -> np.ndarray:
    """3x6 Jacobian of the measurement w.r.t. the own state, by central differences.

    The antenna orientation in ECEF is known (attitude is taken as truth), so
    it is held at the linearisation point while the position is perturbed.
    """
    p = own.position if isinstance(own, NavState) else np.asarray(own, dtype=float)
    sat = np.asarray(sat_position, dtype=float)
    C = body_matrix(p, attitude)
    h = max(1e-3, 1e-8 * float(np.linalg.norm(p)))
    J = np.zeros((3, 6))
    for k in range(3):
        dp = np.zeros(3)
        dp[k] = h
        fp = spherical(C @ (sat - (p + dp)))
        fm = spherical(C @ (sat - (p - dp)))
        diff = fp - fm
        diff[:2] = wrap_angle(diff[:2])
        J[:, k] = diff / (2 * h)
    return J


def _innovation(z, zhat):
    y = np.asarray(z, dtype=float) - zhat
    y[:2] = wrap_angle(y[:2])
    return y


def ekf_update(state: NavState, measurement, noise: MeasurementNoise, attitude: Attitude, sat_position,
               gate: float = 5.0):
    """Joseph-form EKF update with a satellite measurement.

    Returns ``(new_state, accepted)``; a measurement outside the ``gate``
    (Mahalanobis sigmas) leaves the state untouched.
    """
    z = measurement.vector() if hasattr(measurement, "vector") else measurement
    H = numeric_jacobian(state, attitude, sat_position)
    R = noise.covariance()
    y = _innovation(z, ecef_to_measurement(state.position, attitude, sat_position))
    if gate is not None and mahalanobis2(state.covariance, H, R, y) > gate * gate:
        return state, False
    x, P = joseph_update(state.mean, state.covariance, H, R, y)
    return NavState(state.time, x[:3], x[3:], P), True


# --- satellites ---------------------------------------------------------------

def satellite_geometry(constellation: Constellation, t: float, own_position, attitude: Attitude):
    """Antenna-frame (az, el, range) and local elevation for every satellite."""
    own = np.asarray(own_position, dtype=float)
    lat, lon, _ = ecef_to_geodetic(own)
    T = ned_matrix(float(lat), float(lon))
    d = constellation.positions_at(t) - own
    ned = d @ T.T
    body = ned @ attitude.matrix().T
    sph = spherical(body)
    local_el = np.arcsin(np.clip(-ned[:, 2] / sph[:, 2], -1, 1)) if len(d) else np.zeros(0)
    return sph, local_el


def visible_satellites(constellation: Constellation, t: float, own_position, attitude: Attitude,
                       min_elevation: float = math.radians(15.0),
                       field_of_regard: float = math.radians(60.0)) -> list:
    if len(constellation) == 0:
        return []
    sph, local_el = satellite_geometry(constellation, t, own_position, attitude)
    ok = (np.abs(sph[:, 0]) <= field_of_regard) & (np.abs(sph[:, 1]) <= field_of_regard) & (local_el >= min_elevation)
    return [constellation.ids[i] for i in np.flatnonzero(ok)]


def selection_score(p, P_pos) -> float:
    p = np.asarray(p, dtype=float)
    return float(p @ P_pos @ p / (p @ p))


def select_satellite(candidates, P_pos):
    """Pick the candidate whose direction carries the most position variance.

    ``candidates`` is a sequence of ``(sat_id, vector)``; ties go to the lower id.
    """
    if not candidates:
        raise NoSatelliteError("no candidate satellites")
    best = None
    for sid, p in candidates:
        key = (-selection_score(p, P_pos), sid)
        if best is None or key < best:
            best = key
    return best[1]


def planned_nav_measurement(state: NavState, attitude: Attitude, sat_position, time: float,
                            noise: MeasurementNoise, pd: float) -> PlannedMeasurement:
    own = state.position + state.velocity * (time - state.time)
    H = numeric_jacobian(own, attitude, sat_position)
    return PlannedMeasurement(time, H, noise.covariance(), pd)


def forecast_covariance(state: NavState, planned: Sequence[PlannedMeasurement], horizon: float,
                        imu: ImuModel) -> np.ndarray:
    """Covariance at ``state.time + horizon`` given expected measurements.

    Each planned measurement contributes its information weighted by its
    detection probability; no state mean is involved.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    P = state.covariance
    t = state.time
    end = state.time + horizon
    for m in sorted(planned, key=lambda m: m.time):
        tm = min(max(m.time, t), end)
        P = propagate_covariance(P, imu, int(round((tm - t) / imu.dt)))
        t = tm
        P = expected_information_update(P, m.H, m.R, m.pd)
    return propagate_covariance(P, imu, int(round((end - t) / imu.dt)))


forecast_covariance_after_update = forecast_covariance
