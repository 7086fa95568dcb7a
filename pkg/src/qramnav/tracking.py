"""Constant-velocity target tracks and their quality/utility model."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Hashable, Sequence

import numpy as np

from .kalman import PlannedMeasurement, expected_information_update, joseph_update, mahalanobis2, symmetrize
from .nav import Attitude, NavState, body_matrix, ecef_to_measurement, measurement_to_ecef, numeric_jacobian
from .geodesy import wrap_angle
from .radar import MeasurementNoise

DEFAULT_PROCESS_NOISE = 9.0  # (m/s^2)^2 per s, white acceleration


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DROPPED = "dropped"


@dataclass(frozen=True)
class Track:
    track_id: Hashable
    time: float
    state: np.ndarray
    covariance: np.ndarray
    last_update: float
    status: TrackStatus = TrackStatus.TENTATIVE
    hits: int = 1
    attempts: int = 1
    misses: int = 0  # consecutive

    @property
    def position(self):
        return self.state[:3]

    @property
    def velocity(self):
        return self.state[3:]


@dataclass(frozen=True)
class TrackTaskQuality:
    q_track: float
    u_track: float


def _cv_matrices(dt: float, q: float):
    F = np.eye(6)
    F[:3, 3:] = dt * np.eye(3)
    Q = q * np.kron(np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]]), np.eye(3))
    return F, Q


def cv_predict_covariance(P, dt: float, q: float = DEFAULT_PROCESS_NOISE):
    if dt <= 0:
        return P
    F, Q = _cv_matrices(dt, q)
    return symmetrize(F @ P @ F.T + Q)


def cv_predict(track: Track, dt: float, q: float = DEFAULT_PROCESS_NOISE) -> Track:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return track
    F, Q = _cv_matrices(dt, q)
    return replace(track, time=track.time + dt, state=F @ track.state,
                   covariance=symmetrize(F @ track.covariance @ F.T + Q))


def target_jacobian(own_position, attitude: Attitude, target_position) -> tuple[np.ndarray, np.ndarray]:
    """(H w.r.t. the 6-d target state, H w.r.t. own position)."""
    H_own = numeric_jacobian(own_position, attitude, target_position)[:, :3]
    H = np.zeros((3, 6))
    H[:, :3] = -H_own
    return H, H_own


def ekf_track_update(track: Track, measurement, noise: MeasurementNoise, own_nav: NavState,
                     attitude: Attitude, gate: float = 5.0, coupling: bool = True):
    """Update a track (already predicted to the measurement time).

    The measurement is interpreted from the estimated own position, and its
    noise is inflated by the own-position uncertainty seen through the
    measurement Jacobian. Returns ``(track, accepted)``.
    """
    z = measurement.vector() if hasattr(measurement, "vector") else np.asarray(measurement, dtype=float)
    H, H_own = target_jacobian(own_nav.position, attitude, track.position)
    R = noise.covariance()
    if coupling:
        R = R + H_own @ own_nav.position_covariance @ H_own.T
    y = z - ecef_to_measurement(own_nav.position, attitude, track.position)
    y[:2] = wrap_angle(y[:2])
    if gate is not None and mahalanobis2(track.covariance, H, R, y) > gate * gate:
        return track, False
    x, P = joseph_update(track.state, track.covariance, H, R, y)
    return replace(track, state=x, covariance=P, last_update=track.time), True


def track_quality(P) -> TrackTaskQuality:
    P = np.asarray(P, dtype=float)
    sign, logdet = np.linalg.slogdet(P)
    if sign <= 0 or not np.isfinite(logdet):
        raise ValueError("track covariance must be positive definite")
    q = 10.0 / math.exp(logdet / 6.0)
    return TrackTaskQuality(q, (1.0 - math.exp(-10.0 * q)) / 10.0)


def det_root(P) -> float:
    sign, logdet = np.linalg.slogdet(P)
    return math.exp(logdet / P.shape[0]) if sign > 0 else math.inf


def planned_track_measurement(track: Track, own_position, attitude: Attitude, time: float,
                              noise: MeasurementNoise, pd: float) -> PlannedMeasurement:
    pos = track.position + track.velocity * (time - track.time)
    H, _ = target_jacobian(own_position, attitude, pos)
    return PlannedMeasurement(time, H, noise.covariance(), pd)


def forecast_track_covariance(track: Track, planned: Sequence[PlannedMeasurement], horizon: float,
                              nav_forecast_cov=None, q: float = DEFAULT_PROCESS_NOISE) -> np.ndarray:
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    P = track.covariance
    t, end = track.time, track.time + horizon
    for m in sorted(planned, key=lambda m: m.time):
        tm = min(max(m.time, t), end)
        P = cv_predict_covariance(P, tm - t, q)
        t = tm
        P = expected_information_update(P, m.H, m.R, m.pd)
    P = cv_predict_covariance(P, end - t, q)
    if nav_forecast_cov is not None:
        P = P.copy()
        P[:3, :3] += np.asarray(nav_forecast_cov)[:3, :3]
    return P


def forecast_track_quality(track: Track, planned: Sequence[PlannedMeasurement], horizon: float = 10.0,
                           nav_forecast_cov=None, q: float = DEFAULT_PROCESS_NOISE) -> TrackTaskQuality:
    """Quality at the end of the planning interval, navigation error included."""
    return track_quality(forecast_track_covariance(track, planned, horizon, nav_forecast_cov, q))


def initiate_track(measurement, own_nav: NavState, attitude: Attitude, initial_velocity_cov=200.0**2,
                   track_id: Hashable = 0, time: float | None = None, coupling: bool = True) -> Track:
    """New tentative track from a single detection."""
    z = measurement.vector() if hasattr(measurement, "vector") else np.asarray(measurement, dtype=float)
    az, el, r = z
    C = body_matrix(own_nav.position, attitude)
    pos = measurement_to_ecef(own_nav.position, attitude, az, el, r, C=C)
    ca, sa, ce, se = np.cos(az), np.sin(az), np.cos(el), np.sin(el)
    dc = np.array([
        [-r * ce * sa, -r * se * ca, ce * ca],
        [r * ce * ca, -r * se * sa, ce * sa],
        [0.0, -r * ce, -se],
    ])
    J = C.T @ dc
    P = np.zeros((6, 6))
    P[:3, :3] = J @ measurement.noise.covariance() @ J.T
    if coupling:
        P[:3, :3] += own_nav.position_covariance
    P[3:, 3:] = np.eye(3) * initial_velocity_cov
    t = own_nav.time if time is None else time
    return Track(track_id, t, np.concatenate([pos, np.zeros(3)]), symmetrize(P), t)


def register_outcome(track: Track, hit: bool, m_of_n=(2, 3), max_misses: int = 3,
                     max_det_root: float = 1e4) -> Track:
    """M-of-N confirmation and miss-based dropping."""
    m, n = m_of_n
    hits = track.hits + int(hit)
    attempts = track.attempts + 1
    misses = 0 if hit else track.misses + 1
    status = track.status
    if status is TrackStatus.TENTATIVE:
        if hits >= m:
            status = TrackStatus.CONFIRMED
        elif attempts >= n:
            status = TrackStatus.DROPPED
    elif misses >= max_misses or det_root(track.covariance) > max_det_root:
        status = TrackStatus.DROPPED
    return replace(track, hits=hits, attempts=attempts, misses=misses, status=status)
