"""Model parameters, their YAML form, and world construction.

``defaults.yaml`` next to this file is the committed calibration. Every
experiment starts from it and applies overrides on top.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .affect import AffectParams
from .homeostat import HomeostatParams
from .planner import PlanConfig, Strategy
from .social import SocialConfig
from .worlds import (
    CorridorGeometry,
    FoodShareToy,
    LoadProfile,
    LoadScaling,
    SocialCorridorWorld,
    load_profile,
)

WORLDS = ("foodshare", "corridor")


@dataclass(frozen=True)
class FoodShareSetup:
    basal_cost: float = 0.01
    eat_gain: float = 0.25
    pass_gain: float = 0.25
    actor_energy: float = 0.55
    partner_energy: float = 0.20


@dataclass(frozen=True)
class CorridorSetup:
    length: int = 6
    start: int = 2
    food: int = 0
    partner: int = 5
    hazards: tuple[int, ...] = (2, 3)
    episode_steps: int = 18
    actor_energy: float = 0.84
    partner_energy: float = 0.20
    basal_cost: float = 0.01
    move_cost: float = 0.005
    hazard_cost: float = 0.01
    eat_gain: float = 0.095
    pass_gain: float = 0.25
    cost_scale: dict[str, float] = field(default_factory=lambda: {"low": 1.0, "medium": 2.5, "high": 4.0})
    gain_scale: dict[str, float] = field(default_factory=lambda: {"low": 1.0, "medium": 0.8, "high": 0.6})

    def geometry(self) -> CorridorGeometry:
        return CorridorGeometry(self.length, self.start, self.food, self.partner, frozenset(self.hazards))

    def base_load(self) -> LoadProfile:
        return LoadProfile("low", self.basal_cost, self.move_cost, self.hazard_cost, self.eat_gain, self.pass_gain)

    def load(self, level: str) -> LoadProfile:
        return load_profile(level, self.base_load(), LoadScaling(dict(self.cost_scale), dict(self.gain_scale)))


@dataclass(frozen=True)
class PlannerSetup:
    horizon: int = 10
    strategy: str = "beam"
    beam_width: int = 4

    def plan_config(self, world: str) -> PlanConfig:
        # the food-sharing choice is a single step
        horizon = 1 if world == "foodshare" else self.horizon
        return PlanConfig(horizon=horizon, strategy=Strategy(self.strategy), beam_width=self.beam_width)


@dataclass(frozen=True)
class ModelConfig:
    setpoint: float = 0.64
    distress_gain: float = 0.015
    model_lr: float = 0.76
    affect: AffectParams = AffectParams(1.6, 1.1, 0.9, 0.18)
    foodshare: FoodShareSetup = FoodShareSetup()
    corridor: CorridorSetup = CorridorSetup()
    planner: PlannerSetup = PlannerSetup()
    decoy_energy: float = 0.9
    recovery_threshold: float = 0.25

    def to_dict(self) -> dict[str, Any]:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelConfig":
        return _build(cls, data)

    def with_overrides(self, overrides: dict[str, Any] | None) -> "ModelConfig":
        if not overrides:
            return self
        return ModelConfig.from_dict(deep_merge(self.to_dict(), overrides))

    def homeostat(self, basal_cost: float, move_cost=0.0, hazard_cost=0.0, eat_gain=0.0, pass_gain=0.0) -> HomeostatParams:
        return HomeostatParams(
            setpoint=self.setpoint,
            basal_cost=basal_cost,
            move_cost=move_cost,
            hazard_cost=hazard_cost,
            eat_gain=eat_gain,
            pass_gain=pass_gain,
            distress_gain=self.distress_gain,
            model_lr=self.model_lr,
        )


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, frozenset, set)):
        return [_plain(v) for v in (sorted(obj) if isinstance(obj, (set, frozenset)) else obj)]
    return obj


def _build(cls, data: dict[str, Any]):
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        if is_dataclass(current) and isinstance(value, dict):
            kwargs[name] = _build(type(current), value)
        elif isinstance(current, tuple):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def deep_merge(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def default_config_path() -> Path:
    return Path(str(resources.files("homeocoupling") / "defaults.yaml"))


def load_model(path: str | Path | None = None) -> ModelConfig:
    path = Path(path) if path else default_config_path()
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return ModelConfig.from_dict(data.get("model", data))


def dump_model(model: ModelConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump({"model": model.to_dict()}, fh, sort_keys=False)


def make_world(world: str, social: SocialConfig, model: ModelConfig, load: str = "low", with_partner: bool = True):
    if world == "foodshare":
        fs = model.foodshare
        return FoodShareToy(
            model.homeostat(fs.basal_cost, eat_gain=fs.eat_gain),
            model.homeostat(fs.basal_cost, pass_gain=fs.pass_gain),
            model.affect,
            social,
            actor_energy=fs.actor_energy,
            partner_energy=fs.partner_energy,
        )
    if world == "corridor":
        c = model.corridor
        lp = c.load(load)
        return SocialCorridorWorld(
            model.homeostat(lp.basal_cost, lp.move_cost, lp.hazard_cost, lp.eat_gain),
            model.homeostat(lp.basal_cost, pass_gain=lp.pass_gain),
            model.affect,
            social,
            geometry=c.geometry(),
            actor_energy=c.actor_energy,
            partner_energy=c.partner_energy,
            horizon=c.episode_steps,
            with_partner=with_partner,
        )
    raise ValueError(f"unknown world {world!r}; expected one of {WORLDS}")
