"""Scalar energy homeostat with an internal self-model and a social distress channel.

Each agent carries a true energy reserve and a model estimate of it. One call
to :func:`homeostat_step` advances both by a single tick:

    E_true'  = clip(E_true - c_b - c_m*a - c_h*h + g_e*e + g_p*p)
    d_self   = max(0, s - E_model)
    d_other  = max(0, s - E_other_hat)
    d_cpl    = d_self + lambda * d_other
    E_pred   = clip(E_model - k_h * d_cpl)
    PE       = E_true' - E_pred
    E_model' = clip(E_model + k_pe * PE)

Distress and the prediction are taken from the pre-step model, the true
energy then advances, and the model is corrected by the prediction error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


def clip01(x: float) -> float:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@dataclass(frozen=True)
class HomeostatParams:
    setpoint: float = 0.7
    basal_cost: float = 0.01
    move_cost: float = 0.0
    hazard_cost: float = 0.0
    eat_gain: float = 0.25
    pass_gain: float = 0.25
    distress_gain: float = 0.05  # k_h
    model_lr: float = 0.5  # k_pe

    def __post_init__(self) -> None:
        for name in ("basal_cost", "move_cost", "hazard_cost", "eat_gain", "pass_gain", "distress_gain"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.setpoint <= 1.0:
            raise ValueError(f"setpoint must lie in [0, 1], got {self.setpoint}")
        if not 0.0 <= self.model_lr <= 1.0:
            raise ValueError(f"model_lr must lie in [0, 1], got {self.model_lr}")


class HomeostatState(NamedTuple):
    energy_true: float
    energy_model: float

    @classmethod
    def at(cls, energy: float) -> "HomeostatState":
        """Start with a veridical self-model."""
        return cls(clip01(energy), clip01(energy))


class ActionFlags(NamedTuple):
    """0/1 indicators emitted by the world for one tick."""

    moved: int = 0
    on_hazard: int = 0
    ate: int = 0
    received_food: int = 0


NO_FLAGS = ActionFlags()


class RegulationTrace(NamedTuple):
    d_self: float
    d_other: float
    d_cpl: float
    energy_pred: float
    prediction_error: float


def update_true_energy(state: HomeostatState, params: HomeostatParams, flags: ActionFlags) -> float:
    return clip01(
        state.energy_true
        - params.basal_cost
        - params.move_cost * flags.moved
        - params.hazard_cost * flags.on_hazard
        + params.eat_gain * flags.ate
        + params.pass_gain * flags.received_food
    )


def distress(setpoint: float, energy_estimate: float) -> float:
    return max(0.0, setpoint - energy_estimate)


def coupled_distress(d_self: float, d_other: float, lam: float) -> float:
    return d_self + lam * d_other


def homeostat_step(
    state: HomeostatState,
    params: HomeostatParams,
    flags: ActionFlags,
    lam: float,
    partner_estimate: float,
) -> tuple[HomeostatState, RegulationTrace]:
    d_self = distress(params.setpoint, state.energy_model)
    d_other = distress(params.setpoint, partner_estimate)
    d_cpl = coupled_distress(d_self, d_other, lam)
    energy_pred = clip01(state.energy_model - params.distress_gain * d_cpl)
    energy_true = update_true_energy(state, params, flags)
    pe = energy_true - energy_pred
    energy_model = clip01(state.energy_model + params.model_lr * pe)
    return HomeostatState(energy_true, energy_model), RegulationTrace(d_self, d_other, d_cpl, energy_pred, pe)


def appraise(
    state: HomeostatState,
    params: HomeostatParams,
    trace: RegulationTrace,
    lam: float,
    partner_estimate: float,
) -> RegulationTrace:
    """Re-read distress at the post-step state, keeping the step's prediction error.

    This is what the agent feels about where an action left it: its own model
    energy and the partner estimate after the tick.
    """
    d_self = distress(params.setpoint, state.energy_model)
    d_other = distress(params.setpoint, partner_estimate)
    return RegulationTrace(
        d_self, d_other, coupled_distress(d_self, d_other, lam), trace.energy_pred, trace.prediction_error
    )
