"""Minimal affect proxy and recurrent salience loop.

Valence and arousal are read off coupled distress and prediction error. A
single leaky integrator stands in for the recurrent persistence loop and
feeds arousal back across ticks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .homeostat import RegulationTrace


@dataclass(frozen=True)
class AffectParams:
    valence_pe_gain: float = 0.5  # alpha
    arousal_distress_gain: float = 0.5  # beta
    salience_decay: float = 0.8  # rho
    salience_drive: float = 0.5  # kappa

    def __post_init__(self) -> None:
        if not 0.0 <= self.salience_decay <= 1.0:
            raise ValueError(f"salience_decay must lie in [0, 1], got {self.salience_decay}")
        for name in ("valence_pe_gain", "arousal_distress_gain", "salience_drive"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


class AffectState(NamedTuple):
    valence: float = 0.0
    arousal: float = 0.0
    salience: float = 0.0
    body_budget_error: float = 0.0


NEUTRAL = AffectState()


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def affect_from_regulation(trace: RegulationTrace, params: AffectParams) -> tuple[float, float]:
    valence = _clip(-trace.d_cpl + params.valence_pe_gain * trace.prediction_error, -1.0, 1.0)
    arousal = _clip(abs(trace.prediction_error) + params.arousal_distress_gain * trace.d_cpl, 0.0, 1.0)
    return valence, arousal


def salience_step(ns_prev: float, arousal: float, params: AffectParams) -> float:
    return _clip(params.salience_decay * ns_prev + params.salience_drive * arousal, 0.0, 1.0)


def body_budget_error(energy_model: float, setpoint: float) -> float:
    # surplus counts as well as deficit
    return abs(setpoint - energy_model)


def affect_step(
    prev: AffectState,
    trace: RegulationTrace,
    energy_model: float,
    setpoint: float,
    params: AffectParams,
) -> AffectState:
    valence, arousal = affect_from_regulation(trace, params)
    return AffectState(
        valence,
        arousal,
        salience_step(prev.salience, arousal, params),
        _clip(body_budget_error(energy_model, setpoint), 0.0, 1.0),
    )
