"""Simulation settings and the INI-style scenario config file.

Sections: ``[radar]``, ``[scenario]``, ``[constellation]``, ``[nav]``,
``[tracking]``, ``[managers]``, ``[monte_carlo]``. Keys mirror the dataclass
field names below. Radar keys ending in ``_db`` are converted to linear.
Degrees are given with a ``_deg`` suffix.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .radar import RadarParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSettings:
    duration: float = 500.0
    altitude: float = 1830.0
    speed: float = 113.0
    initial_heading_deg: float = 90.0
    final_heading_deg: float = 180.0
    turn_command_time: float = 190.0
    # turn commanded at 190 s, heading settled by 300 s
    nominal_turn_end: float = 300.0
    origin_lat_deg: float = 50.6
    origin_lon_deg: float = 7.2
    target_rcs: float = 0.1
    target_jitter_range: float = 5000.0  # m
    target_jitter_bearing_deg: float = 5.0
    target_jitter_heading_deg: float = 20.0
    initial_pos_sigma: float = 100.0
    initial_vel_sigma: float = 10.0
    trajectory_file: str = ""
    constellation_file: str = ""

    @property
    def turn_rate(self) -> float:
        """rad/s, chosen so the heading change completes at ``nominal_turn_end``."""
        dh = math.radians(abs(self.final_heading_deg - self.initial_heading_deg))
        return dh / max(self.nominal_turn_end - self.turn_command_time, 1e-6)


@dataclass(frozen=True)
class ConstellationSettings:
    n_planes: int = 24
    sats_per_plane: int = 24
    altitude: float = 550e3
    inclination_deg: float = 53.0
    phasing: int = 1
    sample_dt: float = 1.0
    rcs: float = 1.0
    epoch_offset: float = 0.0  # s, rotates the whole shell along-track


@dataclass(frozen=True)
class NavSettings:
    imu_sigma: float = 0.02
    imu_rate: float = 100.0
    min_elevation_deg: float = 15.0
    gate: float = 5.0
    max_satellites: int = 3
    nav_snr_db: float = 13.0


@dataclass(frozen=True)
class TrackingSettings:
    process_noise: float = 9.0
    initial_velocity_sigma: float = 200.0
    confirm_m: int = 2
    confirm_n: int = 3
    max_misses: int = 3
    max_det_root: float = 1e4
    gate: float = 5.0


@dataclass(frozen=True)
class ManagerSettings:
    interval: float = 10.0
    coupling: bool = True
    track_snr_menu_db: tuple = (13.0, 17.0)
    track_update_menu: tuple = (1, 2, 5, 10)
    search_grants: tuple = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
    search_az_limit_deg: float = 60.0
    search_el_min_deg: float = -5.0
    search_el_max_deg: float = 30.0
    search_range: float = 100e3
    search_snr_db: float = 13.0
    search_burst_beams: int = 16
    tb_priority_nav: int = 3
    tb_priority_track: int = 2
    tb_priority_search: int = 1
    tb_track_revisit: float = 1.0
    tb_search_revisit: float = 8.0
    tb_track_snr_db: float = 13.0


@dataclass(frozen=True)
class MonteCarloSettings:
    runs: int = 18
    base_seed: int = 1
    jobs: int = 1
    metric_dt: float = 1.0


@dataclass(frozen=True)
class Config:
    radar: RadarParams = field(default_factory=RadarParams)
    scenario: ScenarioSettings = field(default_factory=ScenarioSettings)
    constellation: ConstellationSettings = field(default_factory=ConstellationSettings)
    nav: NavSettings = field(default_factory=NavSettings)
    tracking: TrackingSettings = field(default_factory=TrackingSettings)
    managers: ManagerSettings = field(default_factory=ManagerSettings)
    monte_carlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)

    def replace(self, **sections) -> "Config":
        return dataclasses.replace(self, **sections)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "radar": RadarParams,
    "scenario": ScenarioSettings,
    "constellation": ConstellationSettings,
    "nav": NavSettings,
    "tracking": TrackingSettings,
    "managers": ManagerSettings,
    "monte_carlo": MonteCarloSettings,
}

_RADAR_DEG = {"field_of_regard"}


def _coerce(cls, name, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, tuple):
            items = [x for x in raw.replace(",", " ").split() if x]
            kind = type(default[0]) if default else float
            return tuple(kind(float(x)) if kind is int else kind(x) for x in items)
        if isinstance(default, int):
            return int(float(raw))
        if isinstance(default, float) or default is None:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"[{cls.__name__}] {name}: cannot parse {raw!r}") from exc


def _build_section(cls, items: dict[str, str]):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, raw in items.items():
        name = key
        value_transform = None
        if cls is RadarParams and key.endswith("_db"):
            name = key[:-3]
            value_transform = lambda v: 10.0 ** (v / 10.0)
        elif key.endswith("_deg") and key[:-4] in fields:
            name = key[:-4]
            value_transform = math.radians
        if name not in fields:
            raise ConfigError(f"unknown key {key!r} in section [{_section_name(cls)}]")
        default = getattr(defaults, name)
        value = _coerce(cls, key, raw, default if default is not None else 0.0)
        if value_transform is not None:
            value = value_transform(float(value))
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{_section_name(cls)}] {exc}") from exc


def _section_name(cls):
    for k, v in _SECTIONS.items():
        if v is cls:
            return k
    return cls.__name__


def parse_config(text: str) -> Config:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sections = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        sections[name] = _build_section(_SECTIONS[name], dict(parser.items(name)))
    return Config(**sections)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text)
    sc = cfg.scenario
    # relative data files resolve against the config's directory
    updates = {}
    for key in ("trajectory_file", "constellation_file"):
        value = getattr(sc, key)
        if value and not Path(value).is_absolute():
            updates[key] = str((path.parent / value).resolve())
    if updates:
        cfg = cfg.replace(scenario=dataclasses.replace(sc, **updates))
    return cfg


def dump_config(cfg: Config) -> str:
    """Render a config back to the file format (linear units, radians as ``_deg``)."""
    lines = []
    for name, cls in _SECTIONS.items():
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in dataclasses.fields(cls):
            value = getattr(section, f.name)
            if value is None:
                continue
            key = f.name
            if cls is RadarParams and f.name in _RADAR_DEG:
                key, value = f.name + "_deg", math.degrees(value)
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
