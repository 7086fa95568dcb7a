"""WGS-84 frames: ECEF <-> geodetic, ECEF -> NED, and Euler attitude."""
import numpy as np

WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563
WGS84_E2 = WGS84_F * (2 - WGS84_F)
WGS84_B = WGS84_A * (1 - WGS84_F)
OMEGA_EARTH = 7.2921150e-5  # rad/s
MU_EARTH = 3.986004418e14  # m^3/s^2


def geodetic_to_ecef(lat, lon, alt):
    lat, lon, alt = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lat, lon, alt)))
    slat, clat = np.sin(lat), np.cos(lat)
    n = WGS84_A / np.sqrt(1 - WGS84_E2 * slat**2)
    return np.stack(
        [(n + alt) * clat * np.cos(lon), (n + alt) * clat * np.sin(lon), (n * (1 - WGS84_E2) + alt) * slat],
        axis=-1,
    )


def ecef_to_geodetic(xyz):
    """Returns (lat, lon, alt); Bowring's start plus two Newton refinements."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    ep2 = (WGS84_A**2 - WGS84_B**2) / WGS84_B**2
    th = np.arctan2(z * WGS84_A, p * WGS84_B)
    lat = np.arctan2(z + ep2 * WGS84_B * np.sin(th) ** 3, p - WGS84_E2 * WGS84_A * np.cos(th) ** 3)
    for _ in range(2):
        n = WGS84_A / np.sqrt(1 - WGS84_E2 * np.sin(lat) ** 2)
        alt = p / np.cos(lat) - n
        lat = np.arctan2(z, p * (1 - WGS84_E2 * n / (n + alt)))
    n = WGS84_A / np.sqrt(1 - WGS84_E2 * np.sin(lat) ** 2)
    alt = p * np.cos(lat) + z * np.sin(lat) - WGS84_A**2 / n
    return lat, lon, alt


def ned_matrix(lat, lon):
    """Rotation taking ECEF vectors into the local north-east-down frame."""
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    return np.array([
        [-sl * co, -sl * so, cl],
        [-so, co, 0.0],
        [-cl * co, -cl * so, -sl],
    ])


def ned_matrix_at(ecef_position):
    lat, lon, _ = ecef_to_geodetic(ecef_position)
    return ned_matrix(float(lat), float(lon))


def euler_matrix(yaw, pitch, roll):
    """NED -> body rotation for a yaw-pitch-roll (z-y-x) sequence."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    rz = np.array([[cy, sy, 0.0], [-sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, -sp], [0.0, 1.0, 0.0], [sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, sr], [0.0, -sr, cr]])
    return rx @ ry @ rz


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi
