"""Scenario configuration.

Every default below reproduces the reference evaluation scenario (35 SNEs,
4 LC, 1 HC, one edge node and one cloud server; 100/50 MHz pools; 30 dB
intra-subnetwork SINR).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any

SCHEMES = ("deterministic", "benchmark", "random")


class ConfigError(ValueError):
    """Invalid configuration value; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class TopologyParams:
    n_sne: int = 35
    n_lc: int = 4
    n_hc: int = 1
    n_edge: int = 1
    n_cloud: int = 1
    power_lc: float = 2.5e9
    power_hc: float = 5e9
    power_edge: float = 70e9
    power_cloud: float = 150e9
    intra_bandwidth: float = 100e6
    parent_bandwidth: float = 50e6
    # one 5G-NR PRB: 12 subcarriers at 30 kHz
    resource_bandwidth: float = 360e3
    intra_sinr_db: float = 30.0
    parent_sinr_db: float = 27.0
    backhaul_rate: float = 1e9
    # None -> task generation horizon
    capacity_window: float | None = None


@dataclass(frozen=True)
class ChannelParams:
    fading: bool = True
    # activation thresholds in dB for QPSK, 16-QAM, 64-QAM, 256-QAM
    mcs_thresholds_db: tuple[float, float, float, float] = (5.0, 11.0, 18.0, 24.0)
    # optional fixed BER per scheme name, replaces the analytic formula
    ber_override: dict[str, float] | None = None


@dataclass(frozen=True)
class ScenarioParams:
    task_count: int = 45
    origin_shares: tuple[float, float, float] = (0.6, 0.2, 0.2)
    workload_range: tuple[float, float] = (20e6, 50e6)
    size_range: tuple[float, float] = (0.75e6, 2.25e6)
    result_fraction: float = 0.15
    deadline_range: tuple[float, float] = (0.020, 0.100)
    horizon: float = 0.100

    def validate(self, path: str = "tasks") -> None:
        if self.task_count < 0:
            raise ConfigError(f"{path}.task_count", "must be >= 0")
        if len(self.origin_shares) != 3 or any(a < 0 for a in self.origin_shares):
            raise ConfigError(f"{path}.origin_shares", "need three non-negative shares")
        if abs(sum(self.origin_shares) - 1.0) > 1e-9:
            raise ConfigError(f"{path}.origin_shares", f"shares sum to {sum(self.origin_shares)!r}, not 1")
        for name in ("workload_range", "size_range", "deadline_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(f"{path}.{name}", f"need 0 < low <= high, got ({lo}, {hi})")
        if not 0 < self.result_fraction < 1:
            raise ConfigError(f"{path}.result_fraction", "must lie in (0, 1)")
        if not self.horizon > 0:
            raise ConfigError(f"{path}.horizon", "must be > 0")


@dataclass(frozen=True)
class EngineParams:
    slot: float = 0.5e-3
    # resources granted to one task per slot; 0 means no cap (whole free pool)
    cap_per_task: int = 0
    check: bool = False


@dataclass(frozen=True)
class GaParams:
    population: int = 1000
    generations: int = 10
    crossover_prob: float = 0.9
    mutation_prob: float = 0.05
    tournament_size: int = 4
    elite_fraction: float = 0.01

    def validate(self, path: str = "ga") -> None:
        if self.population < 2:
            raise ConfigError(f"{path}.population", "must be >= 2")
        if self.generations < 1:
            raise ConfigError(f"{path}.generations", "must be >= 1")
        for name in ("crossover_prob", "mutation_prob", "elite_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigError(f"{path}.{name}", "must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ConfigError(f"{path}.tournament_size", "must be >= 1")


@dataclass(frozen=True)
class PenaltyConfig:
    M: float = 100.0

    def validate(self, path: str = "penalty") -> None:
        if not self.M > 0:
            raise ConfigError(f"{path}.M", "must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    topology: TopologyParams = field(default_factory=TopologyParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    tasks: ScenarioParams = field(default_factory=ScenarioParams)
    engine: EngineParams = field(default_factory=EngineParams)
    ga: GaParams = field(default_factory=GaParams)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    scheme: str = "deterministic"
    seeds: tuple[int, ...] = (0,)
    # evaluate metrics on the fading realization the solver trained on
    clairvoyant: bool = False
    oracle_budget: int = 1_000_000

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed required")
        self.tasks.validate()
        self.ga.validate()
        self.penalty.validate()
        if self.engine.slot <= 0:
            raise ConfigError("engine.slot", "must be > 0")
        if self.engine.cap_per_task < 0:
            raise ConfigError("engine.cap_per_task", "must be >= 0")

    @property
    def capacity_window(self) -> float:
        w = self.topology.capacity_window
        return self.tasks.horizon if w is None else w

    def replace(self, **changes: Any) -> "ScenarioConfig":
        """Return a copy with dotted-path overrides, e.g. ``{"tasks.task_count": 20}``."""
        return apply_overrides(self, changes)

    def to_dict(self) -> dict:
        return to_plain(self)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def to_plain(obj: Any) -> Any:
    if is_dataclass(obj):
        return {f.name: to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in sorted(obj.items())}
    if isinstance(obj, float) and math.isinf(obj):
        return str(obj)
    return obj


def _coerce(value: Any, template: Any, path: str) -> Any:
    if isinstance(template, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return value
    if isinstance(template, int) and not isinstance(template, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if isinstance(template, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(template, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {value!r}")
        if template and len(value) != len(template) and path != "seeds":
            raise ConfigError(path, f"expected {len(template)} entries, got {len(value)}")
        if path == "seeds":
            return tuple(_coerce(v, 0, f"{path}[{i}]") for i, v in enumerate(value))
        return tuple(_coerce(v, t, f"{path}[{i}]") for i, (v, t) in enumerate(zip(value, template)))
    return value


def from_dict(data: dict | None, base: Any = None, path: str = "") -> Any:
    """Build a (nested) config dataclass from plain data, rejecting unknown keys."""
    base = ScenarioConfig() if base is None else base
    if not data:
        return base
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    known = {f.name: f for f in fields(base)}
    changes = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(sub, "unknown field")
        current = getattr(base, key)
        if is_dataclass(current):
            changes[key] = from_dict(value, current, sub)
        elif current is None or isinstance(current, dict):
            if key == "capacity_window" and value is not None:
                value = _coerce(value, 0.0, sub)
            changes[key] = value
        else:
            changes[key] = _coerce(value, current, sub)
    return dataclasses.replace(base, **changes)


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    nested: dict = {}
    for dotted, value in overrides.items():
        node = nested
        parts = dotted.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return from_dict(nested, cfg)


def _yaml_loader():
    import re

    import yaml

    class Loader(yaml.SafeLoader):
        pass

    # YAML 1.1 wants a dot and a signed exponent; accept plain 2.5e9 as a float too
    Loader.add_implicit_resolver(
        "tag:yaml.org,2002:float",
        re.compile(r"^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9_]+)(?:[eE][-+]?[0-9]+)?$"
                   r"|^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$"),
        list("-+0123456789."))
    return Loader


def load_config(path: str | None, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    """Read a YAML scenario file (omitted fields keep their defaults) and apply dotted overrides."""
    import yaml

    cfg = ScenarioConfig()
    if path is not None:
        with open(path) as fh:
            data = yaml.load(fh, Loader=_yaml_loader())
        cfg = from_dict(data)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg


def parse_value(text: str) -> Any:
    """Interpret a command-line override value with the same rules as the config file."""
    import yaml

    return yaml.load(text, Loader=_yaml_loader())
