"""Routing of partner state into the actor's homeostat.

Four matched conditions decide whether the partner's energy is visible and
whether it is coupled into regulation; three lesion modes then tamper with
that route. Everything downstream sees only an estimate and an effective
coupling gain.
"""

from __future__ import annotations

from typing import Optional

import enum
from dataclasses import dataclass


class Condition(str, enum.Enum):
    NONE = "none"
    COGNITIVE_DIRECT = "cognitive_direct"
    AFFECTIVE_DIRECT = "affective_direct"
    FULL_DIRECT = "full_direct"

    @property
    def coupled(self) -> bool:
        return self in (Condition.AFFECTIVE_DIRECT, Condition.FULL_DIRECT)

    @property
    def has_access(self) -> bool:
        return self is not Condition.NONE


class Lesion(str, enum.Enum):
    SHAM = "sham"
    COUPLING_OFF = "coupling_off"
    SHUFFLE_PARTNER = "shuffle_partner"


@dataclass(frozen=True)
class SocialConfig:
    condition: Condition = Condition.NONE
    lam: float = 0.0
    lesion: Lesion = Lesion.SHAM
    decoy_energy: float = 0.9

    def __post_init__(self) -> None:
        # accept plain strings from config files and CLI flags
        object.__setattr__(self, "condition", Condition(self.condition))
        object.__setattr__(self, "lesion", Lesion(self.lesion))
        if not self.lam >= 0.0:
            raise ValueError(f"coupling lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.decoy_energy <= 1.0:
            raise ValueError(f"decoy_energy must lie in [0, 1], got {self.decoy_energy}")

    @property
    def label(self) -> str:
        return f"social_{self.condition.value}"


def fixed_estimate(config: SocialConfig, setpoint: float) -> Optional[float]:
    """The estimate when it ignores the partner's actual energy, else None."""
    if not config.condition.has_access:
        return setpoint
    if config.lesion is Lesion.SHUFFLE_PARTNER:
        return config.decoy_energy
    return None


def partner_estimate(config: SocialConfig, true_partner_energy: float, setpoint: float) -> float:
    """Partner energy as seen by the actor's homeostat.

    Without access the estimate sits at the setpoint, which zeroes partner
    distress. The shuffle lesion swaps in a fixed decoy; coupling_off leaves
    the signal intact and cuts the gain instead.
    """
    fixed = fixed_estimate(config, setpoint)
    return true_partner_energy if fixed is None else fixed


def effective_lambda(config: SocialConfig) -> float:
    if not config.condition.coupled or config.lesion is Lesion.COUPLING_OFF:
        return 0.0
    return config.lam
