"""Small shared Kalman-filter algebra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlannedMeasurement:
    """A measurement expected at ``time``; only its information content matters."""

    time: float
    H: np.ndarray  # 3 x 6
    R: np.ndarray  # 3 x 3
    pd: float = 1.0


def symmetrize(P):
    return 0.5 * (P + P.T)


def is_spd(P) -> bool:
    if not np.all(np.isfinite(P)):
        return False
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        return False
    return True


def joseph_update(x, P, H, R, innovation):
    S = H @ P @ H.T + R
    K = np.linalg.solve(S, H @ P).T
    ikh = np.eye(P.shape[0]) - K @ H
    P_new = symmetrize(ikh @ P @ ikh.T + K @ R @ K.T)
    return x + K @ innovation, P_new


def mahalanobis2(P, H, R, innovation) -> float:
    S = H @ P @ H.T + R
    return float(innovation @ np.linalg.solve(S, innovation))


def expected_information_update(P, H, R, pd: float):
    """Covariance after a measurement that arrives with probability ``pd``.

    Adds ``pd`` times the measurement's Fisher information, i.e. a standard
    update with noise ``R / pd``.
    """
    if pd <= 0:
        return P
    R_eff = R / pd
    S = H @ P @ H.T + R_eff
    K = np.linalg.solve(S, H @ P).T
    ikh = np.eye(P.shape[0]) - K @ H
    return symmetrize(ikh @ P @ ikh.T + K @ R_eff @ K.T)
