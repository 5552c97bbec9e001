"""Experiment configuration: YAML loading, validation and hashing."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .agents import AGENTS, AgentHyperparams
from .channel import FadingParams
from .env import Scenario
from .errors import ActiveRisError, ConfigError

KINDS = ("train", "antenna_sweep", "lr_study", "scale_study")


@dataclass(frozen=True)
class AntennaSweepConfig:
    antenna_counts: tuple[int, ...] = (4, 8, 12, 16)
    realizations_per_seed: int = 20


@dataclass(frozen=True)
class LrStudyConfig:
    learning_rates: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    agents: tuple[str, ...] = ("sac", "ddpg", "td3")


@dataclass(frozen=True)
class ScaleStudyConfig:
    # (users, elements per RIS); all cases keep the scenario's RIS count
    cases: tuple[tuple[int, int], ...] = ((4, 10), (6, 20), (8, 100))
    learning_rate: float = 5e-3
    action_dim_cap: int = 1000


@dataclass(frozen=True)
class ConvergenceConfig:
    window: int = 20
    tolerance: float = 0.05


@dataclass(frozen=True)
class EarlyStopConfig:
    enabled: bool = False
    window: int = 20
    patience: int = 50
    min_delta: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "train"
    agent: str = "sac"
    episodes: int = 300
    steps_per_episode: int = 50
    warmup_episodes: int = 1
    redraw_channels_each_episode: bool = True
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    scenario: Scenario = field(default_factory=Scenario)
    hyperparams: AgentHyperparams = field(default_factory=AgentHyperparams)
    antenna_sweep: AntennaSweepConfig = field(default_factory=AntennaSweepConfig)
    lr_study: LrStudyConfig = field(default_factory=LrStudyConfig)
    scale_study: ScaleStudyConfig = field(default_factory=ScaleStudyConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    early_stop: EarlyStopConfig = field(default_factory=EarlyStopConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.agent not in AGENTS:
            raise ConfigError(f"agent must be one of {sorted(AGENTS)}, got {self.agent!r}")
        if self.episodes < 1 or self.steps_per_episode < 1 or self.warmup_episodes < 0:
            raise ConfigError("episodes and steps_per_episode must be >= 1, warmup_episodes >= 0")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if any(m < 1 for m in self.antenna_sweep.antenna_counts):
            raise ConfigError("antenna counts must be >= 1")
        if self.antenna_sweep.realizations_per_seed < 1:
            raise ConfigError("realizations_per_seed must be >= 1")
        if any(lr <= 0 for lr in self.lr_study.learning_rates):
            raise ConfigError("learning rates must be > 0")
        for a in self.lr_study.agents:
            if a not in AGENTS:
                raise ConfigError(f"unknown agent {a!r} in lr_study")
        for case in self.scale_study.cases:
            if len(case) != 2 or min(case) < 1:
                raise ConfigError(f"scale-study case must be (users, elements) >= 1, got {case}")
        if self.convergence.window < 1 or self.convergence.tolerance <= 0:
            raise ConfigError("convergence window must be >= 1 and tolerance > 0")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict[str, Any]:
        return _plain(asdict(self))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def _build(cls, data: Optional[dict], section: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    known = {f.name for f in fields(cls) if f.init}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**{k: _tuplify(v) for k, v in data.items()})


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data or {})
    try:
        scen = dict(data.pop("scenario", None) or {})
        fading = _build(FadingParams, scen.pop("fading", None), "scenario.fading")
        scenario = _build(Scenario, {**scen, "fading": fading}, "scenario")
        sections = {
            "hyperparams": AgentHyperparams,
            "antenna_sweep": AntennaSweepConfig,
            "lr_study": LrStudyConfig,
            "scale_study": ScaleStudyConfig,
            "convergence": ConvergenceConfig,
            "early_stop": EarlyStopConfig,
        }
        built = {name: _build(cls, data.pop(name, None), name) for name, cls in sections.items()}
        return _build(ExperimentConfig, {**data, "scenario": scenario, **built}, "experiment")
    except ConfigError:
        raise
    except (ActiveRisError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return config_from_dict(data)
