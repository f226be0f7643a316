"""Simulation configuration: nested dataclasses, YAML loading and validation."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .mobility import MobilityConfig
from .radio import BLOCKAGE_LEVELS, GRIPS

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScenarioConfig:
    n_ue: int = 420
    sim_time_s: float = 30.0
    dt_ms: float = 10.0
    ssb_period_ms: float = 20.0
    seed: int = 0
    grip: str = "FREE"
    o_p_db: float = 0.0
    o_b_db: float = 0.0
    speed_kmh: float = 60.0
    isd_m: float = 200.0
    fc_ghz: float = 28.0
    tx_power_dbm: float = 40.0
    h_bs_m: float = 10.0
    h_ut_m: float = 1.5
    translate: int = 0  # replica offset index applied to the initial UE drop


@dataclass(frozen=True)
class ChannelConfig:
    los_mode: str = "soft"
    los_d1_m: float = 18.0
    los_d2_m: float = 36.0
    los_window_m: float = 20.0
    shadowing: bool = True
    sigma_los_db: float = 4.0
    sigma_nlos_db: float = 7.82
    decorr_los_m: float = 10.0
    decorr_nlos_m: float = 13.0
    shadow_grid_m: float = 2.5
    fading: bool = True
    fading_per_panel: bool = True
    n_sinusoids: int = 32
    meas_error_db: float = 0.0


@dataclass(frozen=True)
class MeasureConfig:
    n_l1: int = 2
    l3_k: float = 4.0
    bandwidth_hz: float = 100e6
    noise_figure_db: float = 10.0
    k_b: int = 4
    n_mc: int = 20
    interference: str = "full"  # "full": all K_b scheduled beams active; "draw": one random beam per cell


@dataclass(frozen=True)
class AntennaConfig:
    tx_outer_el_deg: float = -4.0
    tx_inner_el_deg: float = -10.0
    mask_levels: dict = field(default_factory=lambda: dict(BLOCKAGE_LEVELS))
    mask_file: str | None = None
    mask_rotation: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class KpiConfig:
    t_fh_s: float = 1.0


@dataclass(frozen=True)
class TraceConfig:
    measurements: bool = False
    selection: bool = False
    channel: bool = False
    ues: tuple = (0,)


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    antenna: AntennaConfig = field(default_factory=AntennaConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    kpi: KpiConfig = field(default_factory=KpiConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)

    @property
    def n_steps(self) -> int:
        return int(round(self.scenario.sim_time_s * 1000.0 / self.scenario.dt_ms))

    @property
    def ssb_steps(self) -> int:
        return int(round(self.scenario.ssb_period_ms / self.scenario.dt_ms))

    def with_scenario(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, scenario=dataclasses.replace(self.scenario, **kw))

    def problems(self) -> list[str]:
        s, ch, me, mo = self.scenario, self.channel, self.measure, self.mobility
        out = []
        if s.n_ue < 1:
            out.append("scenario.n_ue must be >= 1")
        if s.dt_ms <= 0:
            out.append("scenario.dt_ms must be positive")
        else:
            if s.ssb_period_ms <= 0 or not _multiple(s.ssb_period_ms, s.dt_ms):
                out.append("scenario.ssb_period_ms must be a positive multiple of dt_ms")
            if s.sim_time_s < 0 or not _multiple(s.sim_time_s * 1000.0, s.dt_ms):
                out.append("scenario.sim_time_s must be a non-negative multiple of dt_ms")
            out.extend(mo.problems(s.dt_ms))
        if s.grip not in GRIPS and self.antenna.mask_file is None:
            out.append(f"scenario.grip must be one of {GRIPS} or a mask_file must be given")
        if s.o_p_db < 0 or s.o_b_db < 0:
            out.append("scenario switching offsets must be non-negative")
        if s.isd_m <= 0:
            out.append("scenario.isd_m must be positive")
        if s.speed_kmh < 0:
            out.append("scenario.speed_kmh must be >= 0")
        if s.fc_ghz <= 0:
            out.append("scenario.fc_ghz must be positive")
        if s.h_bs_m <= s.h_ut_m:
            out.append("scenario.h_bs_m must exceed h_ut_m")
        if not 0 <= s.translate <= 6:
            out.append("scenario.translate must index a replica offset (0..6)")
        if ch.los_mode not in ("soft", "los", "nlos"):
            out.append("channel.los_mode must be soft, los or nlos")
        if ch.sigma_los_db < 0 or ch.sigma_nlos_db < 0 or ch.meas_error_db < 0:
            out.append("channel standard deviations must be >= 0")
        if ch.decorr_los_m <= 0 or ch.decorr_nlos_m <= 0 or ch.shadow_grid_m <= 0:
            out.append("channel decorrelation distances and shadow grid must be positive")
        if ch.n_sinusoids < 2 or ch.n_sinusoids % 2:
            out.append("channel.n_sinusoids must be an even number >= 2")
        if me.n_l1 < 1:
            out.append("measure.n_l1 must be >= 1")
        if me.l3_k < 0:
            out.append("measure.l3_k must be >= 0")
        if me.k_b < 1 or me.n_mc < 1:
            out.append("measure.k_b and measure.n_mc must be >= 1")
        if me.interference not in ("full", "draw"):
            out.append("measure.interference must be full or draw")
        if self.kpi.t_fh_s <= 0:
            out.append("kpi.t_fh_s must be positive")
        unknown = set(self.antenna.mask_levels) - set(BLOCKAGE_LEVELS)
        if unknown:
            out.append(f"antenna.mask_levels has unknown levels {sorted(unknown)}")
        return out

    def validate(self) -> "SimConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return _plain(d)


def _multiple(x: float, step: float) -> bool:
    q = x / step
    return abs(q - round(q)) < 1e-9


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _build(cls, data, path: str, problems: list[str]):
    if not isinstance(data, dict):
        problems.append(f"{path or 'config'} must be a mapping")
        return cls()
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        if k not in names:
            problems.append(f"unknown key {path + '.' if path else ''}{k}")
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        v = data[f.name]
        hint = hints[f.name]
        where = f"{path + '.' if path else ''}{f.name}"
        if dataclasses.is_dataclass(hint):
            kw[f.name] = _build(hint, v, where, problems)
        else:
            kw[f.name] = _coerce(v, hint, where, problems)
    return cls(**kw)


def _coerce(v, hint, where, problems):
    origin = typing.get_origin(hint)
    if hint is bool:
        if not isinstance(v, bool):
            problems.append(f"{where} must be a boolean")
        return v
    if hint is int:
        if isinstance(v, bool) or not isinstance(v, int):
            problems.append(f"{where} must be an integer")
        return v
    if hint is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            problems.append(f"{where} must be a number")
            return v
        return float(v)
    if hint is str:
        if not isinstance(v, str):
            problems.append(f"{where} must be a string")
        return v
    if hint is tuple:
        if not isinstance(v, (list, tuple)):
            problems.append(f"{where} must be a list")
            return v
        return tuple(v)
    if hint is dict:
        if not isinstance(v, dict):
            problems.append(f"{where} must be a mapping")
            return v
        return dict(v)
    if origin in (typing.Union, getattr(__import__("types"), "UnionType", None)):
        if v is None:
            return None
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        return _coerce(v, args[0], where, problems)
    return v


def config_from_dict(data: dict) -> SimConfig:
    """Build and validate a :class:`SimConfig`; every problem is reported at once."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config document must be a mapping"])
    data = dict(data)
    version = data.pop("schema_version", None)
    if version is None:
        problems.append("schema_version is missing")
    elif version != SCHEMA_VERSION:
        problems.append(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    cfg = _build(SimConfig, data, "", problems)
    try:
        problems.extend(cfg.problems())
    except TypeError:
        pass  # type errors are already listed
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> SimConfig:
    with open(Path(path)) as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_dict(data)


def dump_config(cfg: SimConfig, path) -> None:
    with open(Path(path), "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)


def desk_preset(**scenario) -> SimConfig:
    """105 UEs for 10 s: the reduced scale used by the trend checks."""
    kw = {"n_ue": 105, "sim_time_s": 10.0}
    kw.update(scenario)
    return SimConfig().with_scenario(**kw)
