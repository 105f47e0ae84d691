"""FoodShareToy and SocialCorridorWorld.

Both worlds hold one acting possessor and one passive partner. The possessor
runs the full homeostat + affect loop; the partner only metabolises and eats
whatever it is handed. Worlds are immutable: ``step`` returns a new state and
a :class:`StepInfo` describing what happened.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from .affect import NEUTRAL, AffectParams, AffectState, affect_step
from .homeostat import (
    ActionFlags,
    HomeostatParams,
    HomeostatState,
    RegulationTrace,
    appraise,
    distress,
    homeostat_step,
)
from .social import SocialConfig, effective_lambda, fixed_estimate


class Action(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    GET = 2
    EAT = 3
    PASS = 4
    STAY = 5

    @classmethod
    def parse(cls, name: str) -> "Action":
        return cls[name.upper()]


class StepInfo(NamedTuple):
    action: Action
    actor_flags: ActionFlags
    partner_flags: ActionFlags
    raw_trace: RegulationTrace  # pre-step distress, as the homeostat integrates it
    trace: RegulationTrace  # post-step appraisal fed to affect
    partner_estimate: float
    helped: bool
    partner_fed: bool
    wasted: bool


class Agents(NamedTuple):
    actor: HomeostatState
    affect: AffectState
    partner: HomeostatState


@dataclass(frozen=True)
class LoadProfile:
    level: str
    basal_cost: float
    move_cost: float
    hazard_cost: float
    eat_gain: float  # possessor eating the item
    pass_gain: float  # partner eating a passed item

    def __post_init__(self) -> None:
        for name in ("basal_cost", "move_cost", "hazard_cost", "eat_gain", "pass_gain"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


LOAD_LEVELS = ("low", "medium", "high")

# energies at or below this count as starved; absorbs float residue of repeated decay
DEATH_ENERGY = 1e-9


@dataclass(frozen=True)
class LoadScaling:
    """Multipliers applied to the low-load profile."""

    cost: dict[str, float] = field(default_factory=lambda: {"low": 1.0, "medium": 2.5, "high": 4.0})
    gain: dict[str, float] = field(default_factory=lambda: {"low": 1.0, "medium": 0.8, "high": 0.6})


def load_profile(level: str, base: LoadProfile, scaling: LoadScaling = LoadScaling()) -> LoadProfile:
    if level not in LOAD_LEVELS:
        raise ValueError(f"unknown load level {level!r}; expected one of {LOAD_LEVELS}")
    c, g = scaling.cost[level], scaling.gain[level]
    return LoadProfile(
        level=level,
        basal_cost=base.basal_cost * c,
        move_cost=base.move_cost * c,
        hazard_cost=base.hazard_cost,
        eat_gain=base.eat_gain * g,
        pass_gain=base.pass_gain * g,
    )


@functools.lru_cache(maxsize=32)
def _shared_memo(key: tuple) -> dict:
    # Worlds with equal dynamics share transition and search memos.
    return {}


def clear_caches() -> None:
    """Forget every memoised transition and plan (for cold-start audits)."""
    _shared_memo.cache_clear()


class _TwoAgentWorld:
    """Shared metabolism and appraisal for both worlds."""

    name = ""
    horizon = 1

    def __init__(
        self,
        actor_params: HomeostatParams,
        partner_params: HomeostatParams,
        affect_params: AffectParams,
        social: SocialConfig,
    ):
        self.actor_params = actor_params
        self.partner_params = partner_params
        self.affect_params = affect_params
        self.social = social
        self.lam = effective_lambda(social)
        self._fixed_estimate = self._fixed()
        self.memo = _shared_memo(self.dynamics_key())
        self._partner_memo: dict = self.memo.setdefault("partner", {})
        self._transition_memo: dict = self.memo.setdefault("transition", {})
        self._step_memo: dict = self.memo.setdefault("step", {})

    def _fixed(self) -> Optional[float]:
        return fixed_estimate(self.social, self.actor_params.setpoint)

    def _coupling_key(self) -> tuple:
        # A constant estimate adds a fixed term to coupled distress, so worlds
        # that differ only in how they reach that constant evolve identically.
        if self.lam == 0.0:
            return ("fixed", 0.0)
        if self._fixed_estimate is not None:
            return ("fixed", self.lam * distress(self.actor_params.setpoint, self._fixed_estimate))
        return ("live", self.lam)

    def _layout_key(self) -> tuple:
        return ()

    def dynamics_key(self) -> tuple:
        """Everything the next-state function depends on besides the state itself."""
        return (
            type(self).__name__,
            self.horizon,
            self.actor_params,
            self.partner_params,
            self.affect_params,
            self._coupling_key(),
            *self._layout_key(),
        )

    def estimate(self, partner: HomeostatState) -> float:
        fixed = self._fixed_estimate
        return partner.energy_true if fixed is None else fixed

    def _partner_step(self, partner: HomeostatState, fed: int) -> HomeostatState:
        key = (partner, fed)
        nxt = self._partner_memo.get(key)
        if nxt is None:
            pp = self.partner_params
            # the partner has no social input of its own
            nxt, _ = homeostat_step(partner, pp, ActionFlags(received_food=fed), 0.0, pp.setpoint)
            self._partner_memo[key] = nxt
        return nxt

    def _regulate(
        self, agents: Agents, actor_flags: ActionFlags, fed: int
    ) -> tuple[Agents, RegulationTrace, RegulationTrace, float]:
        partner = self._partner_step(agents.partner, fed)
        est_before = self.estimate(agents.partner)
        actor, raw = homeostat_step(agents.actor, self.actor_params, actor_flags, self.lam, est_before)
        est_after = self.estimate(partner)
        trace = appraise(actor, self.actor_params, raw, self.lam, est_after)
        affect = affect_step(agents.affect, trace, actor.energy_model, self.actor_params.setpoint, self.affect_params)
        return Agents(actor, affect, partner), raw, trace, est_after

    def step(self, state, action: Action):
        """(next state, StepInfo); invalid moves raise and are never cached."""
        key = (state, action)
        found = self._step_memo.get(key)
        if found is None:
            found = self._step_memo[key] = self._step(state, action)
        return found

    def _step(self, state, action: Action):
        raise NotImplementedError

    def transition(self, state, action: Action):
        """Next state only; memoised, used by the planner's rollouts."""
        key = (state, action)
        nxt = self._transition_memo.get(key)
        if nxt is None:
            nxt = self._transition_memo[key] = self._next(state, action)
        return nxt

    def _next(self, state, action: Action):
        return self.step(state, action)[0]

    def _advance(
        self, agents: Agents, action: Action, actor_flags: ActionFlags, partner_flags: ActionFlags
    ) -> tuple[Agents, StepInfo]:
        pp = self.partner_params
        new_agents, raw, trace, est_after = self._regulate(agents, actor_flags, partner_flags.received_food)
        fed = bool(partner_flags.received_food)
        info = StepInfo(
            action=action,
            actor_flags=actor_flags,
            partner_flags=partner_flags,
            raw_trace=raw,
            trace=trace,
            partner_estimate=est_after,
            helped=fed and agents.partner.energy_true < pp.setpoint,
            partner_fed=fed,
            wasted=False,
        )
        return new_agents, info


# ---------------------------------------------------------------------------
# FoodShareToy
# ---------------------------------------------------------------------------


class FoodShareState(NamedTuple):
    has_food: bool
    agents: Agents
    resolved: bool = False
    t: int = 0

    @property
    def actor(self) -> HomeostatState:
        return self.agents.actor

    @property
    def partner(self) -> HomeostatState:
        return self.agents.partner

    @property
    def affect(self) -> AffectState:
        return self.agents.affect


class FoodShareToy(_TwoAgentWorld):
    """One decision: eat the item, pass it to the partner, or hold still."""

    name = "foodshare"
    horizon = 1
    actions = (Action.EAT, Action.PASS, Action.STAY)

    def __init__(
        self,
        actor_params: HomeostatParams,
        partner_params: HomeostatParams,
        affect_params: AffectParams,
        social: SocialConfig,
        actor_energy: float = 0.55,
        partner_energy: float = 0.20,
    ):
        super().__init__(actor_params, partner_params, affect_params, social)
        self.actor_energy = actor_energy
        self.partner_energy = partner_energy

    def initial_state(self, has_food: bool = True) -> FoodShareState:
        return FoodShareState(
            has_food,
            Agents(HomeostatState.at(self.actor_energy), NEUTRAL, HomeostatState.at(self.partner_energy)),
        )

    def planning_actions(self, state: FoodShareState) -> tuple[Action, ...]:
        return self.actions if state.has_food else (Action.STAY,)

    def bucket(self, state: FoodShareState):
        return None, (state.has_food, state.resolved)

    def _step(self, state: FoodShareState, action: Action) -> tuple[FoodShareState, StepInfo]:
        if state.resolved:
            raise ValueError("FoodShareToy has a single decision step and is already resolved")
        if action not in self.actions:
            raise ValueError(f"{action.name} is not available in FoodShareToy")
        if action in (Action.EAT, Action.PASS) and not state.has_food:
            raise ValueError(f"{action.name} requires the possessor to hold food")
        actor_flags = ActionFlags(ate=int(action is Action.EAT))
        partner_flags = ActionFlags(received_food=int(action is Action.PASS))
        agents, info = self._advance(state.agents, action, actor_flags, partner_flags)
        has_food = state.has_food and action is Action.STAY
        return FoodShareState(has_food, agents, True, state.t + 1), info


# ---------------------------------------------------------------------------
# SocialCorridorWorld
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorridorGeometry:
    length: int = 6
    start: int = 2
    food: int = 0
    partner: int = 5
    hazards: frozenset[int] = frozenset({2, 3})

    def __post_init__(self) -> None:
        object.__setattr__(self, "hazards", frozenset(self.hazards))
        for name in ("start", "food", "partner"):
            if not 0 <= getattr(self, name) < self.length:
                raise ValueError(f"{name} cell outside corridor of length {self.length}")
        if any(not 0 <= h < self.length for h in self.hazards):
            raise ValueError("hazard cell outside corridor")


class CorridorState(NamedTuple):
    pos: int
    carrying: bool
    food_at: Optional[int]
    partner_pos: Optional[int]  # None when the partner is removed from the world
    agents: Agents
    t: int = 0
    eaten: int = 0
    passed: int = 0

    @property
    def actor(self) -> HomeostatState:
        return self.agents.actor

    @property
    def partner(self) -> HomeostatState:
        return self.agents.partner

    @property
    def affect(self) -> AffectState:
        return self.agents.affect

    def food_items(self) -> int:
        return int(self.food_at is not None) + int(self.carrying) + self.eaten + self.passed


class SocialCorridorWorld(_TwoAgentWorld):
    """1-D corridor: food at one end, a passive partner at the other, hazards between."""

    name = "corridor"
    actions = tuple(Action)

    def __init__(
        self,
        actor_params: HomeostatParams,
        partner_params: HomeostatParams,
        affect_params: AffectParams,
        social: SocialConfig,
        geometry: CorridorGeometry = CorridorGeometry(),
        actor_energy: float = 0.9,
        partner_energy: float = 0.20,
        horizon: int = 18,
        with_partner: bool = True,
    ):
        self.geometry = geometry
        self.horizon = horizon
        self.with_partner = with_partner
        super().__init__(actor_params, partner_params, affect_params, social)
        self.actor_energy = actor_energy
        self.partner_energy = partner_energy
        self._options_memo: dict = {}

    def initial_state(self) -> CorridorState:
        g = self.geometry
        return CorridorState(
            pos=g.start,
            carrying=False,
            food_at=g.food,
            partner_pos=g.partner if self.with_partner else None,
            agents=Agents(HomeostatState.at(self.actor_energy), NEUTRAL, HomeostatState.at(self.partner_energy)),
        )

    def _fixed(self) -> Optional[float]:
        if not self.with_partner:
            return self.actor_params.setpoint
        return super()._fixed()

    def _layout_key(self) -> tuple:
        return (self.geometry, self.with_partner)

    def _can_pass(self, state: CorridorState) -> bool:
        return (
            state.carrying
            and state.partner_pos == state.pos
            and state.agents.partner.energy_true > DEATH_ENERGY  # the dead cannot eat
        )

    def is_effective(self, state: CorridorState, action: Action) -> bool:
        if action is Action.LEFT:
            return state.pos > 0
        if action is Action.RIGHT:
            return state.pos < self.geometry.length - 1
        if action is Action.GET:
            return not state.carrying and state.food_at == state.pos
        if action is Action.EAT:
            return state.carrying
        if action is Action.PASS:
            return self._can_pass(state)
        return True

    def planning_actions(self, state: CorridorState) -> tuple[Action, ...]:
        """Actions that change something beyond the passage of time.

        Ineffective actions are lawful but behave as a costlier or equal Stay,
        so the planner never needs to consider them.
        """
        key = (state.pos, state.carrying, state.food_at, state.partner_pos, state.agents.partner.energy_true > DEATH_ENERGY)
        options = self._options_memo.get(key)
        if options is None:
            options = self._options_memo[key] = tuple(a for a in self.actions if self.is_effective(state, a))
        return options

    def bucket(self, state: CorridorState):
        """(place, inventory) summary used to group partial plans."""
        return state.pos, (state.carrying, state.food_at, state.eaten, state.passed)

    def _effects(self, state: CorridorState, action: Action):
        pos, carrying, food_at = state.pos, state.carrying, state.food_at
        eaten, passed = state.eaten, state.passed
        moved = ate = fed = 0
        wasted = action not in self.planning_actions(state)
        if action is Action.LEFT or action is Action.RIGHT:
            # bumping a wall still spends the movement effort
            moved = 1
            pos = max(0, pos - 1) if action is Action.LEFT else min(self.geometry.length - 1, pos + 1)
        elif not wasted:
            if action is Action.GET:
                carrying, food_at = True, None
            elif action is Action.EAT:
                carrying, eaten, ate = False, eaten + 1, 1
            elif action is Action.PASS:
                carrying, passed, fed = False, passed + 1, 1
        flags = ActionFlags(moved, int(pos in self.geometry.hazards), ate, 0)
        return (pos, carrying, food_at, eaten, passed), flags, fed, wasted

    def _next(self, state: CorridorState, action: Action) -> CorridorState:
        (pos, carrying, food_at, eaten, passed), flags, fed, _ = self._effects(state, action)
        agents = self._regulate(state.agents, flags, fed)[0]
        return CorridorState(pos, carrying, food_at, state.partner_pos, agents, state.t + 1, eaten, passed)

    def _step(self, state: CorridorState, action: Action) -> tuple[CorridorState, StepInfo]:
        if state.t >= self.horizon:
            raise ValueError(f"episode already finished at t={state.t}")
        if type(action) is not Action:
            action = Action(action)
        (pos, carrying, food_at, eaten, passed), flags, fed, wasted = self._effects(state, action)
        agents, info = self._advance(state.agents, action, flags, ActionFlags(received_food=fed))
        if wasted:
            info = info._replace(wasted=True)
        return CorridorState(pos, carrying, food_at, state.partner_pos, agents, state.t + 1, eaten, passed), info
