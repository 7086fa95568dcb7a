"""Phased-array nose radar: gain, SNR, accuracies, detection and dwell sizing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

C_LIGHT = 299_792_458.0
K_BOLTZMANN = 1.380649e-23


class DwellInfeasible(ValueError):
    pass


class Purpose(str, Enum):
    SEARCH = "search"
    TRACK = "track"
    NAV = "nav"


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RadarParams:
    """Hardware description. Defaults are the nose radar used throughout."""

    frequency: float = 10e9
    peak_power: float = 10e3
    elements_az: int = 60
    elements_el: int = 60
    element_spacing_az: float | None = None  # m, None -> half wavelength
    element_spacing_el: float | None = None
    max_pulse_duration: float = 590e-6
    duty_cycle: float = 0.10
    bandwidth: float = 86e6
    broadside_gain: float = 10.0 ** 4.2
    noise_temperature: float = 330.0
    noise_factor: float = 2.0
    system_losses: float = 0.5
    air_loss: float = 1.0
    false_alarm_probability: float = 1e-6
    field_of_regard: float = math.radians(60.0)
    max_dwell_timeline: float = 5.0

    def __post_init__(self):
        half = self.wavelength / 2.0
        if self.element_spacing_az is None:
            object.__setattr__(self, "element_spacing_az", half)
        if self.element_spacing_el is None:
            object.__setattr__(self, "element_spacing_el", half)
        for name in ("frequency", "peak_power", "elements_az", "elements_el", "element_spacing_az",
                     "element_spacing_el", "max_pulse_duration", "bandwidth", "broadside_gain",
                     "noise_temperature", "noise_factor", "system_losses", "air_loss",
                     "field_of_regard", "max_dwell_timeline"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RadarParams.{name} must be positive")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in (0, 1]")
        if not 0 < self.false_alarm_probability < 1:
            raise ValueError("false_alarm_probability must lie in (0, 1)")

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.frequency


@dataclass(frozen=True)
class Dwell:
    steer_az: float
    steer_el: float
    transmit_time: float
    timeline_cost: float
    purpose: Purpose = Purpose.TRACK
    n_pulses: int = 1

    def __post_init__(self):
        if not self.transmit_time > 0:
            raise ValueError("transmit_time must be positive")
        if self.timeline_cost < self.transmit_time * (1 - 1e-12):
            raise ValueError("timeline_cost must not be shorter than transmit_time")


@dataclass(frozen=True)
class MeasurementNoise:
    sigma_az: float
    sigma_el: float
    sigma_range: float

    def __post_init__(self):
        for v in (self.sigma_az, self.sigma_el, self.sigma_range):
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"measurement sigmas must be positive and finite: {self}")

    def covariance(self) -> np.ndarray:
        return np.diag([self.sigma_az**2, self.sigma_el**2, self.sigma_range**2])


@dataclass(frozen=True)
class Measurement:
    az: float
    el: float
    range: float
    noise: MeasurementNoise
    snr: float = field(default=float("nan"), compare=False)

    def vector(self) -> np.ndarray:
        return np.array([self.az, self.el, self.range])


def array_factor(eval_angle, steer_angle, n_elements: int, spacing: float, wavelength: float):
    """Normalised power pattern of a uniform linear array.

    Angles are cone angles measured from the array axis, so broadside is
    pi/2. Returns |sum_k exp(i 2 pi k d (cos a - cos s) / lambda)|^2 / N^2.
    """
    psi = np.pi * spacing / wavelength * (np.cos(eval_angle) - np.cos(steer_angle))
    s = np.sin(psi)
    num = np.sin(n_elements * psi)
    small = np.abs(s) < 1e-12
    ratio = np.where(small, 1.0, num / (n_elements * np.where(small, 1.0, s)))
    af = np.clip(ratio * ratio, 0.0, 1.0)
    return float(af) if np.ndim(af) == 0 else af


def _cone_angles(az, el):
    # body az/el -> cone angles of the horizontal and vertical array axes
    u = np.cos(el) * np.sin(az)
    v = np.sin(el)
    return np.arccos(np.clip(u, -1, 1)), np.arccos(np.clip(v, -1, 1))


def gain(params: RadarParams, eval_az, steer_az, eval_el, steer_el):
    """Two-way-symmetric array gain G_bs * AF_az * AF_el."""
    ta, pa = _cone_angles(eval_az, eval_el)
    ts, ps = _cone_angles(steer_az, steer_el)
    lam = params.wavelength
    g = (
        params.broadside_gain
        * array_factor(ta, ts, params.elements_az, params.element_spacing_az, lam)
        * array_factor(pa, ps, params.elements_el, params.element_spacing_el, lam)
    )
    return g


def _snr_per_second(params: RadarParams, g, range_m, rcs):
    lam = params.wavelength
    num = params.peak_power * g * g * lam * lam * params.system_losses * rcs
    den = (4 * np.pi) ** 3 * np.power(range_m, 4) * K_BOLTZMANN * params.noise_temperature
    return num / (den * params.noise_factor * params.air_loss)


def snr(params: RadarParams, dwell: Dwell, range_m, rcs, eval_az=None, eval_el=None):
    """Radar-equation SNR of a dwell.

    Without ``eval_az``/``eval_el`` the target sits on the beam axis. Passing
    them evaluates the pattern off-axis, which is how pointing errors cost SNR.
    """
    if eval_az is None:
        eval_az, eval_el = dwell.steer_az, dwell.steer_el
    g = gain(params, eval_az, dwell.steer_az, eval_el, dwell.steer_el)
    return _snr_per_second(params, g, range_m, rcs) * dwell.transmit_time


def dwell_for_target_snr(
    params: RadarParams, steer_az: float, steer_el: float, range_m: float, rcs: float,
    target_snr: float, purpose: Purpose = Purpose.TRACK,
) -> Dwell:
    """Shortest whole number of max-length pulses reaching ``target_snr`` on axis."""
    if not target_snr > 0:
        raise ValueError("target_snr must be positive")
    g = gain(params, steer_az, steer_az, steer_el, steer_el)
    rate = _snr_per_second(params, g, range_m, rcs)
    if not rate > 0:
        raise DwellInfeasible(f"no signal at range {range_m:.3g} m")
    needed = target_snr / rate
    n = max(1, math.ceil(needed / params.max_pulse_duration - 1e-9))
    tx = n * params.max_pulse_duration
    cost = tx / params.duty_cycle
    if not math.isfinite(cost) or cost > params.max_dwell_timeline:
        raise DwellInfeasible(
            f"dwell needs {cost:.3g} s of timeline (cap {params.max_dwell_timeline} s) at range {range_m:.3g} m"
        )
    return Dwell(steer_az, steer_el, tx, cost, purpose, n)


def beamwidth(params: RadarParams, steer_az: float, steer_el: float) -> tuple[float, float]:
    """3 dB beamwidths (az, el) in rad, broadened by electronic scan."""
    ta, pa = _cone_angles(steer_az, steer_el)
    lam = params.wavelength
    bw_az = 0.886 * lam / (params.elements_az * params.element_spacing_az * max(np.sin(ta), 1e-3))
    bw_el = 0.886 * lam / (params.elements_el * params.element_spacing_el * max(np.sin(pa), 1e-3))
    return float(bw_az), float(bw_el)


def angular_sigma(beamwidth: float, snr: float) -> float:
    return 0.628 * beamwidth / (2.0 * np.sqrt(snr))


def range_sigma(params: RadarParams) -> float:
    return C_LIGHT / (math.sqrt(12.0) * params.bandwidth)


def measurement_noise(params: RadarParams, steer_az: float, steer_el: float, snr_lin: float) -> MeasurementNoise:
    bw_az, bw_el = beamwidth(params, steer_az, steer_el)
    return MeasurementNoise(angular_sigma(bw_az, snr_lin), angular_sigma(bw_el, snr_lin), range_sigma(params))


def detection_probability(snr_lin, pfa: float):
    """Single-pulse Pd of a non-fluctuating target in a square-law detector.

    Exact Marcum-Q form: Pd = Q1(sqrt(2 snr), sqrt(-2 ln pfa)), evaluated via
    the non-central chi-square survival function with two degrees of freedom.
    """
    snr_lin = np.maximum(np.asarray(snr_lin, dtype=float), 0.0)
    threshold = -2.0 * np.log(pfa)
    pd = 1.0 - special.chndtr(threshold, 2.0, 2.0 * snr_lin)
    pd = np.clip(np.where(snr_lin == 0, pfa, pd), 0.0, 1.0)
    return float(pd) if pd.ndim == 0 else pd


def albersheim_snr_db(pd: float, pfa: float, n_pulses: int = 1) -> float:
    """Albersheim's required single-pulse SNR (dB) for a non-fluctuating target."""
    a = math.log(0.62 / pfa)
    b = math.log(pd / (1.0 - pd))
    n = n_pulses
    return -5 * math.log10(n) + (6.2 + 4.54 / math.sqrt(n + 0.44)) * math.log10(a + 0.12 * a * b + 1.7 * b)


def simulate_detection(rng: np.random.Generator, params: RadarParams, dwell: Dwell, true_spherical, rcs: float,
                       noise_rng: np.random.Generator | None = None):
    """Bernoulli detection draw; on success a noisy (az, el, range) measurement.

    ``true_spherical`` is the true (az, el, range) of the object in the
    antenna frame. Returns ``None`` on a miss. A zero-SNR return (array null)
    never detects: false alarms are not modelled. Measurement noise is drawn from
    ``noise_rng`` when given, else from ``rng``.
    """
    az, el, rng_m = true_spherical
    s = snr(params, dwell, rng_m, rcs, az, el)
    pd = detection_probability(s, params.false_alarm_probability)
    if rng.random() >= pd or not s > 0:
        return None
    noise = measurement_noise(params, dwell.steer_az, dwell.steer_el, s)
    e = (rng if noise_rng is None else noise_rng).standard_normal(3)
    return Measurement(
        az + noise.sigma_az * e[0], el + noise.sigma_el * e[1], rng_m + noise.sigma_range * e[2], noise, s
    )
