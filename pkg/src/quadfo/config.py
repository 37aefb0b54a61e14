"""Run configuration: JSON schema, validation, defaults and flag overrides."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .model import ModelDomainError, OscillatorParams, SmibParams, to_oscillator

SYSTEM_KEYS = {
    "omega_base_rad_s": "omega_base",
    "p_m_pu": "p_m",
    "p_max_pu": "p_max",
    "d_pu": "d",
    "h_s": "h",
    "p_d_pu": "p_d",
    "f_dist_hz": "f_dist_hz",
}
OSCILLATOR_KEYS = ("alpha", "c", "omega0", "f")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FreqGrid:
    start: float = 0.40
    end: float = 0.70
    points: int = 241

    def values(self):
        import numpy as np

        return np.linspace(self.start, self.end, self.points)

    @property
    def step(self) -> float:
        return (self.end - self.start) / (self.points - 1) if self.points > 1 else 0.0


@dataclass(frozen=True)
class AnalysisConfig:
    freq_grid_hz: FreqGrid = field(default_factory=FreqGrid)
    dwell_periods: int = 400
    step_per_period: int = 200
    transient_periods: int = 50


@dataclass(frozen=True)
class RunConfig:
    system: SmibParams = field(default_factory=SmibParams)
    oscillator_override: dict = field(default_factory=dict)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output_dir: str = "out"

    def oscillator(self) -> OscillatorParams:
        """Reduced oscillator, with any explicit override applied verbatim."""
        osc = to_oscillator(self.system)
        if self.oscillator_override:
            try:
                osc = osc.with_(**self.oscillator_override)
            except ModelDomainError as exc:
                raise ConfigError(f"invalid oscillator override: {exc}") from exc
        return osc

    def to_dict(self) -> dict:
        sys_d = {k: getattr(self.system, attr) for k, attr in SYSTEM_KEYS.items()}
        an = self.analysis
        return {
            "system": sys_d,
            "oscillator": dict(self.oscillator_override),
            "analysis": {
                "freq_grid_hz": asdict(an.freq_grid_hz),
                "dwell_periods": an.dwell_periods,
                "step_per_period": an.step_per_period,
                "transient_periods": an.transient_periods,
            },
            "output": {"dir": self.output_dir},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return merge(cls(), data)


def _num(section: str, key: str, value, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key} must be finite")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(value)
    return float(value)


def _check_keys(section: str, data: dict, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {', '.join(sorted(unknown))}")


def merge(cfg: RunConfig, data: dict) -> RunConfig:
    """Layer a (possibly partial) config document over ``cfg``."""
    _check_keys("config", data, ("system", "oscillator", "analysis", "output"))

    sys_changes = {}
    if "system" in data:
        _check_keys("system", data["system"], SYSTEM_KEYS)
        for key, value in data["system"].items():
            sys_changes[SYSTEM_KEYS[key]] = _num("system", key, value)

    override = dict(cfg.oscillator_override)
    if "oscillator" in data and data["oscillator"] is not None:
        _check_keys("oscillator", data["oscillator"], OSCILLATOR_KEYS)
        for key, value in data["oscillator"].items():
            if value is None:
                override.pop(key, None)
            else:
                override[key] = _num("oscillator", key, value)

    an = cfg.analysis
    if "analysis" in data:
        sec = data["analysis"]
        _check_keys("analysis", sec, [f.name for f in fields(AnalysisConfig)])
        changes = {}
        if "freq_grid_hz" in sec:
            g = sec["freq_grid_hz"]
            _check_keys("analysis.freq_grid_hz", g, ("start", "end", "points"))
            grid = an.freq_grid_hz
            grid = replace(
                grid,
                **{k: _num("analysis.freq_grid_hz", k, v, integer=(k == "points")) for k, v in g.items()},
            )
            changes["freq_grid_hz"] = grid
        for key in ("dwell_periods", "step_per_period", "transient_periods"):
            if key in sec:
                changes[key] = _num("analysis", key, sec[key], integer=True)
        an = replace(an, **changes)

    out = cfg.output_dir
    if "output" in data:
        _check_keys("output", data["output"], ("dir",))
        if "dir" in data["output"]:
            out = str(data["output"]["dir"])

    try:
        system = replace(cfg.system, **sys_changes)
    except ModelDomainError as exc:
        raise ConfigError(str(exc)) from exc
    new = RunConfig(system, override, an, out)
    validate(new)
    return new


def validate(cfg: RunConfig) -> None:
    g = cfg.analysis.freq_grid_hz
    if g.points < 2 or not 0 < g.start < g.end:
        raise ConfigError("analysis.freq_grid_hz needs 0 < start < end and points >= 2")
    if cfg.analysis.dwell_periods < 30:
        raise ConfigError("analysis.dwell_periods must be >= 30")
    if cfg.analysis.step_per_period < 8:
        raise ConfigError("analysis.step_per_period must be >= 8")
    if cfg.analysis.transient_periods < 0:
        raise ConfigError("analysis.transient_periods must be >= 0")
    cfg.oscillator()


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def resolve(config_path=None, flags: dict | None = None) -> tuple:
    """Resolve flag > file > default.  Returns (config, sources) where sources
    maps each dotted key that did not come from the defaults to its origin."""
    cfg = RunConfig()
    sources = {}
    if config_path is not None:
        doc = load(config_path)
        cfg = merge(cfg, doc)
        for key in _dotted(doc):
            sources[key] = "file"
    if flags:
        cfg = merge(cfg, flags)
        for key in _dotted(flags):
            sources[key] = "flag"
    return cfg, sources


def _dotted(doc: dict, prefix: str = "") -> list:
    out = []
    for k, v in doc.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict) and k != "freq_grid_hz":
            out.extend(_dotted(v, name + "."))
        else:
            out.append(name)
    return out


def output_path(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir)
