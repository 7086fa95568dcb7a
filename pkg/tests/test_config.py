import math

import pytest

from qramnav.config import Config, ConfigError, dump_config, load_config, parse_config
from qramnav.radar import RadarParams


def test_defaults_match_radar_table():
    p = RadarParams()
    assert (p.frequency, p.peak_power, p.elements_az, p.elements_el) == (10e9, 10e3, 60, 60)
    assert (p.max_pulse_duration, p.duty_cycle, p.bandwidth) == (590e-6, 0.1, 86e6)
    assert p.broadside_gain == pytest.approx(10**4.2)
    assert (p.noise_temperature, p.noise_factor, p.system_losses) == (330.0, 2.0, 0.5)


def test_db_and_degree_suffixes():
    cfg = parse_config("[radar]\nbroadside_gain_db = 40\nfield_of_regard_deg = 45\n")
    assert cfg.radar.broadside_gain == pytest.approx(1e4)
    assert cfg.radar.field_of_regard == pytest.approx(math.radians(45))


def test_sections_and_types():
    cfg = parse_config("[managers]\ncoupling = off\ntrack_update_menu = 1, 2\n[scenario]\nduration = 60\n")
    assert cfg.managers.coupling is False
    assert cfg.managers.track_update_menu == (1, 2)
    assert cfg.scenario.duration == 60.0


@pytest.mark.parametrize("text", ["[radar]\nbogus = 1\n", "[nowhere]\nx = 1\n", "[radar]\nduty_cycle = abc\n",
                                  "[radar]\nduty_cycle = 1.5\n", "not an ini"])
def test_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_dump_round_trip(tmp_path):
    cfg = Config()
    p = tmp_path / "c.ini"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg
    assert load_config(None) == cfg
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_relative_files_resolve_against_config_dir(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[scenario]\ntrajectory_file = traj.csv\n")
    assert load_config(p).scenario.trajectory_file == str(tmp_path / "traj.csv")
