"""Simulation configuration and TOML loading."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..agent.memory import MemoryConfig
from ..agent.profiles import DEFAULT_PROFILES, PROFILES_BY_NAME
from ..comms import DEFAULT_MAX_ROUNDS
from ..economy import DEFAULT_INITIAL_CCY, DEFAULT_SHOP_PRICE
from ..policy.llm import LLMConfig
from ..world import DENSITY_PRESETS, ScenarioConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BACKENDS = ("random", "rule", "scripted", "llm")


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    scenario_name: str = "rich"
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    agents: int = 10
    steps: int = 200
    repetitions: int = 5
    backend: str | Mapping[int, str] = "rule"
    profile_weights: tuple[float, ...] | None = None
    shop_price: int = DEFAULT_SHOP_PRICE
    initial_ccy: int = DEFAULT_INITIAL_CCY
    output_dir: str | None = None
    seed: int = 0
    llm: LLMConfig = field(default_factory=LLMConfig)
    llm_transcript: str | None = None  # record exchanges here
    llm_replay: str | None = None  # serve exchanges from here instead of the network
    max_rounds: int = DEFAULT_MAX_ROUNDS
    session_timeout: int = 5
    order_ttl: int | None = None
    book_depth: int = 5
    max_workers: int = 1
    scripted_personas: Mapping[str, str] = field(default_factory=dict)
    trace_memory: bool = False

    def __post_init__(self) -> None:
        if self.steps < 1 or self.repetitions < 1:
            raise ConfigError("steps and repetitions must be >= 1")
        if self.agents < 1:
            raise ConfigError("agents must be >= 1")
        if self.shop_price < 1 or self.initial_ccy < 0:
            raise ConfigError("shop_price must be >= 1 and initial_ccy >= 0")
        if self.max_rounds < 1 or self.session_timeout < 1 or self.book_depth < 1:
            raise ConfigError("max_rounds, session_timeout and book_depth must be >= 1")
        if self.order_ttl is not None and self.order_ttl < 1:
            raise ConfigError("order_ttl must be >= 1 or unset")
        kinds = [self.backend] if isinstance(self.backend, str) else list(self.backend.values())
        for kind in kinds:
            if kind not in BACKENDS:
                raise ConfigError(f"unknown backend {kind!r}; expected one of {BACKENDS}")
        if self.profile_weights is not None:
            w = np.asarray(self.profile_weights, dtype=float)
            if len(w) != len(DEFAULT_PROFILES) or (w < 0).any() or not np.isclose(w.sum(), 1.0):
                raise ConfigError(f"profile_weights must be {len(DEFAULT_PROFILES)} non-negative ratios summing to 1")
            self.profile_weights = tuple(float(v) for v in w)
        for name, persona in self.scripted_personas.items():
            if name not in PROFILES_BY_NAME:
                raise ConfigError(f"unknown profile {name!r} in scripted personas")
            if persona not in ("grinder", "pay_to_win"):
                raise ConfigError(f"unknown persona script {persona!r}")
        if self.scenario.agents != self.agents:
            self.scenario = dataclasses.replace(self.scenario, agents=self.agents)

    def backend_for(self, agent: int) -> str:
        if isinstance(self.backend, str):
            return self.backend
        return self.backend.get(agent, "rule")

    def with_scenario(self, name: str, **overrides) -> SimConfig:
        scenario = dataclasses.replace(self.scenario, density_fraction=DENSITY_PRESETS[name])
        return dataclasses.replace(self, scenario=scenario, scenario_name=name, **overrides)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        if not isinstance(self.backend, str):
            d["backend"] = {str(k): v for k, v in self.backend.items()}
        return d


def make_config(scenario: str = "rich", agents: int = 10, seed: int = 0, world: Mapping | None = None,
                memory: Mapping | None = None, **kw) -> SimConfig:
    if scenario not in DENSITY_PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {sorted(DENSITY_PRESETS)}")
    try:
        sc = ScenarioConfig.preset(scenario, agents=agents, seed=seed, **dict(world or {}))
        mem = MemoryConfig(**dict(memory or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return SimConfig(scenario=sc, scenario_name=scenario, memory=mem, agents=agents, seed=seed, **kw)


_TOP_LEVEL = {f.name for f in dataclasses.fields(SimConfig)} - {"scenario", "memory", "llm", "scripted_personas"}


def load_config(path: str | Path | None = None, **overrides) -> SimConfig:
    """Read a TOML config; keyword overrides (e.g. from the CLI) win when not None."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = dict(raw)
    scenario = raw.pop("scenario", "rich")
    world = raw.pop("world", {})
    memory = raw.pop("memory", {})
    llm = raw.pop("llm", {})
    scripted = raw.pop("scripted", {})
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "scenario":
            scenario = value
        else:
            raw[key] = value
    unknown = set(raw) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    weights = raw.get("profile_weights")
    if isinstance(weights, Mapping):
        unknown_profiles = set(weights) - set(PROFILES_BY_NAME)
        if unknown_profiles:
            raise ConfigError(f"unknown profiles in profile_weights: {sorted(unknown_profiles)}")
        raw["profile_weights"] = tuple(float(weights.get(p.name, 0.0)) for p in DEFAULT_PROFILES)
    backend = raw.get("backend")
    if isinstance(backend, Mapping):
        raw["backend"] = {int(k): v for k, v in backend.items()}
    try:
        llm_cfg = LLMConfig(**llm)
    except TypeError as exc:
        raise ConfigError(f"bad [llm] table: {exc}") from exc
    return make_config(str(scenario).lower(), world=world, memory=memory, llm=llm_cfg,
                       scripted_personas=dict(scripted.get("personas", {})), **raw)
