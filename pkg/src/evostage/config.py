"""Run configuration with the two built-in profiles."""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class LLMSettings:
    coder_model: str = "gpt-4o"
    coordinator_model: str = "gpt-4o"
    coder_temperature: float = 0.2
    coordinator_temperature: float = 0.7
    max_retries: int = 2


@dataclass
class Flags:
    multi_stage_initialization: bool = True
    thoughts_of_code: bool = False


@dataclass
class SandboxConfig:
    call_timeout_ms: int = 2000
    startup_timeout_ms: int = 10000
    runtime_command: list[str] | None = None


@dataclass
class RunConfig:
    profile: str = "gp"
    population_size: int = 5
    generations: int = 5
    offspring_per_generation: int = 5
    selection_count: int = 2
    stage_count: int = 4
    domain: str = "placement"
    domain_options: dict = field(default_factory=dict)
    seed: int = 0
    budget_cap: int = 25
    parallel: bool = False
    llm: LLMSettings = field(default_factory=LLMSettings)
    flags: Flags = field(default_factory=Flags)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)

    def validate(self) -> "RunConfig":
        checks = [
            (self.population_size >= 1, "population_size must be >= 1"),
            (self.generations >= 0, "generations must be >= 0"),
            (self.offspring_per_generation >= 1, "offspring_per_generation must be >= 1"),
            (self.stage_count >= 1, "stage_count must be >= 1"),
            (self.selection_count >= 1, "selection_count must be >= 1"),
            (self.budget_cap >= 0, "budget_cap must be >= 0"),
            (0 <= self.llm.coder_temperature <= 2, "coder_temperature must be in [0, 2]"),
            (0 <= self.llm.coordinator_temperature <= 2, "coordinator_temperature must be in [0, 2]"),
            (self.llm.max_retries >= 0, "max_retries must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict:
        return asdict(self)


PROFILES = {
    "gp": {},
    "bo": {
        "population_size": 3,
        "generations": 3,
        "offspring_per_generation": 3,
        "stage_count": 3,
        "domain": "bo",
        "domain_options": {"objective": "Ackley2D"},
        "budget_cap": 9,
        "flags": {"thoughts_of_code": True},
    },
}

_NESTED = {"llm": LLMSettings, "flags": Flags, "sandbox": SandboxConfig}


def _build(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key{'s' if len(unknown) > 1 else ''} in {where}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED and cls is RunConfig:
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be a mapping")
            value = _build(_NESTED[key], value, key)
        kwargs[key] = value
    return cls(**kwargs)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "domain_options":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def config_from_dict(data: dict | None, profile: str | None = None) -> RunConfig:
    data = dict(data or {})
    profile = profile or data.pop("profile", None) or "gp"
    data.pop("profile", None)
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    merged = _merge(PROFILES[profile], data)
    merged["profile"] = profile
    try:
        cfg = _build(RunConfig, merged, "config")
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path, profile: str | None = None) -> RunConfig:
    """Read a YAML/JSON config; explicit keys override the profile defaults."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, profile)


def config_from_report(d: dict) -> RunConfig:
    return config_from_dict(d)
