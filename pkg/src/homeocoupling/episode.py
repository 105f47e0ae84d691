"""Planner-in-the-loop episodes and their step-by-step records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .affect import AffectState
from .homeostat import ActionFlags, HomeostatState, RegulationTrace
from .planner import PlanConfig, plan, score_step
from .worlds import Action


class StepRecord(NamedTuple):
    t: int  # 1-based: the t-th action of the episode
    action: Action
    actor_flags: ActionFlags
    partner_flags: ActionFlags
    actor: HomeostatState
    partner: HomeostatState
    affect: AffectState
    trace: RegulationTrace
    raw_trace: RegulationTrace
    partner_estimate: float
    score: float
    helped: bool
    partner_fed: bool
    wasted: bool

    def behaviour(self) -> tuple:
        """Everything that shows up in behaviour or internal state.

        Excludes the logged partner estimate and partner distress, which differ
        between access conditions even when nothing they feed into does.
        """
        return (
            self.action,
            self.actor_flags,
            self.partner_flags,
            self.actor,
            self.partner,
            self.affect,
            self.trace.d_self,
            self.trace.d_cpl,
            self.raw_trace.d_cpl,
            self.raw_trace.energy_pred,
            self.raw_trace.prediction_error,
            self.score,
            self.helped,
            self.partner_fed,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "action": self.action.name,
            "actor_flags": self.actor_flags._asdict(),
            "partner_flags": self.partner_flags._asdict(),
            "actor": self.actor._asdict(),
            "partner": self.partner._asdict(),
            "affect": self.affect._asdict(),
            "trace": self.trace._asdict(),
            "raw_trace": self.raw_trace._asdict(),
            "partner_estimate": self.partner_estimate,
            "score": self.score,
            "events": {"helped": self.helped, "partner_fed": self.partner_fed, "wasted": self.wasted},
        }


@dataclass
class EpisodeRecord:
    world: str
    horizon: int
    initial_actor: HomeostatState
    initial_partner: HomeostatState
    setpoint: float
    steps: list[StepRecord] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    @property
    def actions(self) -> list[Action]:
        return [s.action for s in self.steps]

    def action_string(self) -> str:
        return " ".join(a.name for a in self.actions)

    @property
    def final_actor(self) -> HomeostatState:
        return self.steps[-1].actor if self.steps else self.initial_actor

    @property
    def final_partner(self) -> HomeostatState:
        return self.steps[-1].partner if self.steps else self.initial_partner

    def help_step(self) -> int | None:
        return next((s.t for s in self.steps if s.helped), None)

    def behaviour(self) -> tuple:
        return tuple(s.behaviour() for s in self.steps)

    def same_run(self, other: "EpisodeRecord") -> bool:
        """Bitwise equality of everything except the seed label."""
        return self.steps == other.steps and self.config == other.config

    def first_divergence(self, other: "EpisodeRecord") -> int | None:
        for a, b in zip(self.steps, other.steps):
            if a != b:
                return a.t
        if len(self.steps) != len(other.steps):
            return min(len(self.steps), len(other.steps)) + 1
        return None

    def summary(self) -> dict[str, Any]:
        return {
            "world": self.world,
            "seed": self.seed,
            "actions": [a.name for a in self.actions],
            "help_step": self.help_step(),
            "final_actor_energy": self.final_actor.energy_true,
            "final_partner_energy": self.final_partner.energy_true,
        }


def run_episode(world, plan_config: PlanConfig, seed: int = 0, config: dict[str, Any] | None = None) -> EpisodeRecord:
    """Run the receding-horizon planner for the world's full horizon.

    ``seed`` is recorded only. Nothing here draws random numbers, and the
    partner dying does not stop the episode.
    """
    state = world.initial_state()
    record = EpisodeRecord(
        world=world.name,
        horizon=world.horizon,
        initial_actor=state.actor,
        initial_partner=state.partner,
        setpoint=world.actor_params.setpoint,
        config=dict(config or {}),
        seed=seed,
    )
    while state.t < world.horizon:
        action = plan(world, state, plan_config)
        state, info = world.step(state, action)
        record.steps.append(
            StepRecord(
                t=state.t,
                action=action,
                actor_flags=info.actor_flags,
                partner_flags=info.partner_flags,
                actor=state.actor,
                partner=state.partner,
                affect=state.affect,
                trace=info.trace,
                raw_trace=info.raw_trace,
                partner_estimate=info.partner_estimate,
                score=score_step(state.affect, plan_config.weights),
                helped=info.helped,
                partner_fed=info.partner_fed,
                wasted=info.wasted,
            )
        )
    return record
