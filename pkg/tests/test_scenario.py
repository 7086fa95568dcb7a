import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from qramnav.config import Config, ScenarioSettings
from qramnav.geodesy import OMEGA_EARTH, ecef_to_geodetic, ned_matrix
from qramnav.nav import visible_satellites
from qramnav.scenario import (ScenarioFileError, build_scenario, constellation_from_settings, fighter_trajectory,
                              generate_constellation, load_constellation, load_trajectory, place_targets,
                              save_constellation, save_trajectory, substream)

SETTINGS = ScenarioSettings()


@pytest.fixture(scope="module")
def fighter():
    return fighter_trajectory(SETTINGS, 0.01)


def heading_deg(traj, i):
    lat, lon, _ = ecef_to_geodetic(traj.position[i])
    v = ned_matrix(float(lat), float(lon)) @ traj.velocity[i]
    return math.degrees(math.atan2(v[1], v[0])) % 360


def test_fighter_altitude_speed_heading(fighter):
    _, _, alt = ecef_to_geodetic(fighter.position)
    assert np.all(np.abs(alt - 1830.0) < 1.0)
    speed = np.linalg.norm(fighter.velocity, axis=1)
    assert np.all(np.abs(speed - 113.0) < 0.5)
    assert heading_deg(fighter, 0) == pytest.approx(90.0, abs=1e-6)
    assert heading_deg(fighter, int(400 / 0.01)) == pytest.approx(180.0, abs=1e-6)
    assert fighter.t[-1] == pytest.approx(500.0)


def test_fighter_turn_timing_and_bank(fighter):
    i190, i250 = int(189.9 / 0.01), int(250 / 0.01)
    assert heading_deg(fighter, i190) == pytest.approx(90.0, abs=1e-6)
    assert 90 < heading_deg(fighter, i250) < 180
    assert fighter.roll[i250] > 0 and fighter.roll[0] == 0
    # yaw column agrees with the ground track
    assert math.degrees(fighter.yaw[i250]) % 360 == pytest.approx(heading_deg(fighter, i250), abs=1e-6)


def test_position_is_integral_of_velocity(fighter):
    dp = np.diff(fighter.position, axis=0)
    assert np.allclose(dp, 0.005 * (fighter.velocity[:-1] + fighter.velocity[1:]), atol=1e-6)


def test_walker_radius_and_period():
    eph = generate_constellation(2, 3, 550e3, math.radians(53), 6000.0)
    r = np.linalg.norm(eph[0].positions, axis=1)
    assert np.ptp(r) < 1.0
    th = OMEGA_EARTH * eph[0].times
    x, y, z = eph[0].positions.T
    inertial = np.stack([np.cos(th) * x - np.sin(th) * y, np.sin(th) * x + np.cos(th) * y, z], axis=1)
    u = inertial / np.linalg.norm(inertial, axis=1, keepdims=True)
    e1 = u[0]
    e2 = u[100] - (u[100] @ e1) * e1
    e2 /= np.linalg.norm(e2)
    ang = np.unwrap(np.arctan2(u @ e2, u @ e1))
    period = 2 * math.pi / np.polyfit(eph[0].times, ang, 1)[0]
    assert period == pytest.approx(5736.0, abs=10.0)
    assert len(eph) == 6


def test_median_visible_at_least_three(fighter):
    c = constellation_from_settings(Config().constellation, 500.0)
    counts = []
    for t in np.arange(0, 500, 10.0):
        i = int(round(t / 0.01))
        counts.append(len(visible_satellites(c, t, fighter.position[i], fighter.attitude(i), math.radians(15))))
    assert np.median(counts) >= 3


def test_targets_deterministic_and_bounded(fighter):
    a = place_targets(fighter, SETTINGS, substream(3, 4))
    b = place_targets(fighter, SETTINGS, substream(3, 4))
    c = place_targets(fighter, SETTINGS, substream(4, 4))
    assert all(np.array_equal(x.p_ref, y.p_ref) for x, y in zip(a, b))
    assert not np.array_equal(a[0].p_ref, c[0].p_ref)
    for tg in a:
        assert np.linalg.norm(tg.velocity) <= 300.0 + 1e-9
        assert tg.rcs == 0.1


def test_trajectory_csv_round_trip(tmp_path, fighter):
    p = tmp_path / "traj.csv"
    save_trajectory(p, fighter, stride=100)
    back = load_trajectory(p)
    assert np.array_equal(back.t, fighter.t[::100])
    assert np.array_equal(back.position, fighter.position[::100])
    assert np.array_equal(back.yaw, fighter.yaw[::100])


def test_constellation_csv_round_trip(tmp_path):
    c = constellation_from_settings(replace(Config().constellation, n_planes=2, sats_per_plane=2), 20.0)
    p = tmp_path / "c.csv"
    save_constellation(p, c)
    back = load_constellation(p)
    assert back.ids == c.ids
    for e1, e2 in zip(c.ephemerides, back.ephemerides):
        assert np.array_equal(e1.times, e2.times) and np.array_equal(e1.positions, e2.positions)
        assert np.all(np.diff(e2.times) > 0)


def test_missing_column_named(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t_s,x,y,z,vx,vy,vz,ax,ay,az,roll,pitch\n0,1,2,3,4,5,6,7,8,9,0,0\n")
    with pytest.raises(ScenarioFileError, match="yaw"):
        load_trajectory(p)


def test_non_monotone_timestamps(tmp_path):
    p = tmp_path / "bad.csv"
    row = ",".join(["0"] * 12)
    p.write_text("t_s,x,y,z,vx,vy,vz,ax,ay,az,roll,pitch,yaw\n0," + row + "\n1," + row + "\n1," + row + "\n")
    with pytest.raises(ScenarioFileError, match=":4:"):
        load_trajectory(p)


def test_large_gap_warns(tmp_path, caplog):
    p = tmp_path / "gap.csv"
    row = ",".join(["0"] * 12)
    p.write_text("t_s,x,y,z,vx,vy,vz,ax,ay,az,roll,pitch,yaw\n0," + row + "\n10," + row + "\n")
    with caplog.at_level(logging.WARNING):
        load_trajectory(p)
    assert "gap" in caplog.text


def test_build_scenario_from_files_matches_builtin(tmp_path):
    cfg = Config()
    sc = build_scenario(cfg, 5)
    save_trajectory(tmp_path / "t.csv", sc.fighter)
    save_constellation(tmp_path / "c.csv", sc.constellation)
    cfg2 = cfg.replace(scenario=replace(cfg.scenario, trajectory_file=str(tmp_path / "t.csv"),
                                        constellation_file=str(tmp_path / "c.csv")))
    sc2 = build_scenario(cfg2, 5)
    assert np.allclose(sc2.fighter.position, sc.fighter.position, rtol=0, atol=1e-6)
    assert np.array_equal(sc2.constellation.positions_at(123.4), sc.constellation.positions_at(123.4))
    assert all(np.array_equal(a.p_ref, b.p_ref) for a, b in zip(sc.targets, sc2.targets))
