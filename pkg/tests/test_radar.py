import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, special

from qramnav.radar import (C_LIGHT, Dwell, DwellInfeasible, Purpose, RadarParams, albersheim_snr_db,
                           angular_sigma, array_factor, beamwidth, db_to_linear, detection_probability,
                           dwell_for_target_snr, gain, linear_to_db, measurement_noise, range_sigma,
                           simulate_detection, snr)

P = RadarParams()
BROADSIDE = (0.0, 0.0)


def direct_af(theta, steer, n, d, lam):
    k = np.arange(n)
    s = np.exp(1j * 2 * np.pi * k / lam * d * (np.cos(theta) - np.cos(steer))).sum()
    return abs(s) ** 2 / n**2


def test_array_factor_peak_and_single_element():
    for steer in (0.3, 1.0, math.pi / 2, 2.0):
        assert array_factor(steer, steer, 60, 0.015, 0.03) == pytest.approx(1.0)
    assert array_factor(0.2, 1.4, 1, 0.015, 0.03) == pytest.approx(1.0)


def test_array_factor_first_null():
    lam, n, d = 0.03, 60, 0.015
    steer = math.pi / 2
    theta = math.acos(math.cos(steer) + lam / (n * d))
    assert array_factor(theta, steer, n, d, lam) < 1e-6


def test_array_factor_matches_direct_summation():
    rng = np.random.default_rng(3)
    for _ in range(50):
        th, st = rng.uniform(0.3, math.pi - 0.3, 2)
        n = int(rng.integers(1, 80))
        assert array_factor(th, st, n, 0.015, 0.03) == pytest.approx(direct_af(th, st, n, 0.015, 0.03), abs=1e-12)


def test_gain_broadside_and_null():
    assert gain(P, 0, 0, 0, 0) == pytest.approx(10**4.2)
    bw_null = P.wavelength / (P.elements_az * P.element_spacing_az)
    assert gain(P, math.asin(bw_null), 0.0, 0.0, 0.0) / 10**4.2 < 1e-6


def test_gain_scan_pattern_is_normalised():
    # eval = steer: the normalised pattern has no scan loss
    assert gain(P, 0.5, 0.5, 0.2, 0.2) == pytest.approx(10**4.2)


def snr_oracle(tau, r, rcs=1.0):
    mpmath.mp.dps = 40
    num = mpmath.mpf(10e3) * mpmath.mpf(10) ** 8.4 * tau * mpmath.mpf(C_LIGHT / 10e9) ** 2 * mpmath.mpf("0.5") * rcs
    den = (4 * mpmath.pi) ** 3 * mpmath.mpf(r) ** 4 * mpmath.mpf("1.380649e-23") * 330 * 2
    return float(num / den)


def test_snr_documented_example():
    d = Dwell(*BROADSIDE, 590e-6, 5.9e-3)
    s = snr(P, d, 1e6, 1.0)
    assert s == pytest.approx(snr_oracle(mpmath.mpf("590e-6"), 1e6), rel=1e-12)
    assert s == pytest.approx(0.0369, abs=5e-4)
    assert linear_to_db(s) == pytest.approx(-14.3, abs=0.1)


def test_snr_scaling_laws():
    d1 = Dwell(*BROADSIDE, 590e-6, 5.9e-3)
    d2 = Dwell(*BROADSIDE, 1180e-6, 11.8e-3)
    assert snr(P, d2, 5e4, 0.1) == pytest.approx(2 * snr(P, d1, 5e4, 0.1))
    assert snr(P, d1, 2.5e4, 0.1) == pytest.approx(16 * snr(P, d1, 5e4, 0.1))


def test_dwell_for_13db_at_1000km():
    d = dwell_for_target_snr(P, 0.0, 0.0, 1e6, 1.0, db_to_linear(13), Purpose.NAV)
    assert d.transmit_time == pytest.approx(0.319, abs=0.001)
    assert d.timeline_cost == pytest.approx(3.19, abs=0.01)
    assert snr(P, d, 1e6, 1.0) >= db_to_linear(13)
    # one pulse fewer would not reach the target
    shorter = Dwell(0, 0, d.transmit_time - P.max_pulse_duration, d.timeline_cost)
    assert snr(P, shorter, 1e6, 1.0) < db_to_linear(13)


def test_dwell_boundary_single_pulse():
    one = snr(P, Dwell(0, 0, P.max_pulse_duration, P.max_pulse_duration / P.duty_cycle), 5e4, 0.1)
    d = dwell_for_target_snr(P, 0, 0, 5e4, 0.1, one)
    assert d.n_pulses == 1


def test_dwell_infeasible_far_away():
    with pytest.raises(DwellInfeasible):
        dwell_for_target_snr(P, 0, 0, 1e9, 1.0, db_to_linear(13))


def test_angular_and_range_sigma():
    assert angular_sigma(0.030, 100) == pytest.approx(0.000942)
    assert angular_sigma(0.03, 400) == pytest.approx(angular_sigma(0.03, 100) / 2)
    assert angular_sigma(0.0, 10) == 0
    assert range_sigma(P) == pytest.approx(1.0065, abs=1e-3)
    assert range_sigma(RadarParams(bandwidth=172e6)) == pytest.approx(range_sigma(P) / 2)
    assert range_sigma(RadarParams(bandwidth=1e9)) == pytest.approx(0.0866, abs=1e-4)


def test_beamwidth_broadside():
    bw_az, bw_el = beamwidth(P, 0, 0)
    assert bw_az == pytest.approx(0.886 / 60 * 2, rel=1e-9)
    assert bw_el == pytest.approx(bw_az)
    assert beamwidth(P, 0.8, 0)[0] > bw_az


def rician_pd(snr_lin, pfa):
    """Independent oracle: integrate the Rician envelope density above threshold."""
    a = math.sqrt(2 * snr_lin)
    thr = math.sqrt(-2 * math.log(pfa))
    f = lambda r: r * math.exp(-((r - a) ** 2) / 2) * special.i0e(a * r)
    val, _ = integrate.quad(f, thr, thr + a + 40, limit=200)
    return val


def test_detection_probability_examples():
    assert detection_probability(0.0, 1e-6) < 0.01
    assert detection_probability(db_to_linear(13.1), 1e-6) == pytest.approx(0.90, abs=0.02)
    assert detection_probability(db_to_linear(30), 1e-6) > 0.999


def test_detection_probability_matches_rician_integral():
    for db in (0, 5, 10, 12, 13, 15, 18):
        s = db_to_linear(db)
        assert detection_probability(s, 1e-6) == pytest.approx(rician_pd(s, 1e-6), abs=1e-6)


def test_detection_consistent_with_albersheim():
    assert albersheim_snr_db(0.9, 1e-6) == pytest.approx(13.11, abs=0.02)
    # Albersheim is an approximation to the same curve, good to a few tenths of a dB
    assert detection_probability(db_to_linear(albersheim_snr_db(0.9, 1e-6)), 1e-6) == pytest.approx(0.9, abs=0.02)


def test_detection_probability_monotone():
    s = np.logspace(-2, 3, 200)
    pd = detection_probability(s, 1e-6)
    assert np.all(np.diff(pd) >= -1e-15)
    assert pd[0] >= 1e-6 and pd[-1] <= 1


def test_simulate_detection_certain_hit_and_determinism():
    d = Dwell(0.1, 0.05, 0.1, 1.0)
    truth = (0.1, 0.05, 2e4)
    m1 = simulate_detection(np.random.default_rng(5), P, d, truth, 10.0)
    m2 = simulate_detection(np.random.default_rng(5), P, d, truth, 10.0)
    assert m1 == m2 or np.array_equal(m1.vector(), m2.vector())
    n = m1.noise
    assert abs(m1.az - truth[0]) < 5 * n.sigma_az
    assert abs(m1.el - truth[1]) < 5 * n.sigma_el
    assert abs(m1.range - truth[2]) < 5 * n.sigma_range
    assert n == measurement_noise(P, 0.1, 0.05, m1.snr)


def test_simulate_detection_miss_without_signal():
    d = Dwell(0, 0, 1e-9, 1e-8)
    assert simulate_detection(np.random.default_rng(0), P, d, (0, 0, 1e8), 1e-6) is None


def test_zero_snr_never_detects():
    class Lucky:
        def random(self):
            return 0.0

    d = Dwell(0, 0, 590e-6, 5.9e-3)
    assert simulate_detection(Lucky(), P, d, (0, 0, 5e4), 0.0, np.random.default_rng(0)) is None
    assert simulate_detection(Lucky(), P, d, (0, 0, 5e4), 1.0, np.random.default_rng(0)) is not None


def test_simulate_detection_rate_matches_pd():
    rng = np.random.default_rng(11)
    d = Dwell(0, 0, 590e-6, 5.9e-3)
    r = 6e4
    pd = detection_probability(snr(P, d, r, 0.1), P.false_alarm_probability)
    hits = sum(simulate_detection(rng, P, d, (0, 0, r), 0.1) is not None for _ in range(4000))
    assert hits / 4000 == pytest.approx(pd, abs=4 * math.sqrt(pd * (1 - pd) / 4000) + 1e-3)
