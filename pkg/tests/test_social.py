from __future__ import annotations

import pytest

from homeocoupling.social import Condition, Lesion, SocialConfig, effective_lambda, partner_estimate


def test_direct_access_sees_true_energy() -> None:
    cfg = SocialConfig(Condition.AFFECTIVE_DIRECT, 1.0)
    assert partner_estimate(cfg, 0.20, 0.7) == 0.20


def test_no_access_reads_setpoint() -> None:
    assert partner_estimate(SocialConfig(Condition.NONE), 0.20, 0.7) == 0.7


def test_shuffle_substitutes_decoy() -> None:
    cfg = SocialConfig(Condition.AFFECTIVE_DIRECT, 1.0, Lesion.SHUFFLE_PARTNER, decoy_energy=0.9)
    assert partner_estimate(cfg, 0.05, 0.7) == 0.9


def test_coupling_off_keeps_signal() -> None:
    cfg = SocialConfig(Condition.FULL_DIRECT, 1.0, Lesion.COUPLING_OFF)
    assert partner_estimate(cfg, 0.05, 0.7) == 0.05
    assert effective_lambda(cfg) == 0.0


@pytest.mark.parametrize(
    "condition, lesion, expected",
    [
        (Condition.NONE, Lesion.SHAM, 0.0),
        (Condition.COGNITIVE_DIRECT, Lesion.SHAM, 0.0),
        (Condition.AFFECTIVE_DIRECT, Lesion.SHAM, 1.0),
        (Condition.FULL_DIRECT, Lesion.SHAM, 1.0),
        (Condition.AFFECTIVE_DIRECT, Lesion.COUPLING_OFF, 0.0),
        (Condition.AFFECTIVE_DIRECT, Lesion.SHUFFLE_PARTNER, 1.0),
    ],
)
def test_effective_lambda(condition, lesion, expected) -> None:
    assert effective_lambda(SocialConfig(condition, 1.0, lesion)) == expected


def test_strings_are_accepted() -> None:
    cfg = SocialConfig("full_direct", 0.5, "shuffle_partner")
    assert cfg.condition is Condition.FULL_DIRECT
    assert cfg.lesion is Lesion.SHUFFLE_PARTNER
    assert cfg.label == "social_full_direct"


@pytest.mark.parametrize("kwargs", [{"lam": -0.1}, {"decoy_energy": 1.5}, {"condition": "telepathic"}])
def test_invalid_config(kwargs) -> None:
    with pytest.raises(ValueError):
        SocialConfig(**kwargs)
