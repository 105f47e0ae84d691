from __future__ import annotations

import pytest

from homeocoupling.affect import (
    AffectParams,
    AffectState,
    affect_from_regulation,
    affect_step,
    body_budget_error,
    salience_step,
)
from homeocoupling.homeostat import RegulationTrace


def _trace(d_cpl: float, pe: float) -> RegulationTrace:
    return RegulationTrace(d_cpl, 0.0, d_cpl, 0.5, pe)


def test_neutral_point() -> None:
    assert affect_from_regulation(_trace(0.0, 0.0), AffectParams()) == (0.0, 0.0)


def test_distress_only() -> None:
    v, a = affect_from_regulation(_trace(0.5, 0.0), AffectParams(0.5, 0.5))
    assert v == pytest.approx(-0.5)
    assert a == pytest.approx(0.25)


def test_valence_and_arousal_clip() -> None:
    v, a = affect_from_regulation(_trace(2.5, 0.0), AffectParams(0.5, 0.5))
    assert v == -1.0
    assert a == 1.0
    v, _ = affect_from_regulation(_trace(0.0, 3.0), AffectParams(1.0, 0.0))
    assert v == 1.0


def test_prediction_error_sign() -> None:
    up, _ = affect_from_regulation(_trace(0.0, 0.1), AffectParams(1.0, 0.0))
    down, _ = affect_from_regulation(_trace(0.0, -0.1), AffectParams(1.0, 0.0))
    assert up > 0 > down


@pytest.mark.parametrize(
    "ns, arousal, rho, kappa, expected",
    [(0.0, 0.0, 0.8, 0.5, 0.0), (0.5, 0.0, 0.8, 0.5, 0.4), (1.0, 1.0, 0.8, 0.5, 1.0)],
)
def test_salience(ns, arousal, rho, kappa, expected) -> None:
    assert salience_step(ns, arousal, AffectParams(salience_decay=rho, salience_drive=kappa)) == pytest.approx(expected)


@pytest.mark.parametrize("e, expected", [(0.7, 0.0), (0.2, 0.5), (1.0, 0.3)])
def test_body_budget_error(e: float, expected: float) -> None:
    assert body_budget_error(e, 0.7) == pytest.approx(expected)


def test_affect_step_carries_salience() -> None:
    p = AffectParams(0.5, 0.5, 0.8, 0.5)
    first = affect_step(AffectState(), _trace(0.4, 0.0), 0.3, 0.7, p)
    second = affect_step(first, _trace(0.4, 0.0), 0.3, 0.7, p)
    assert first.salience == pytest.approx(0.1)
    assert second.salience == pytest.approx(0.8 * 0.1 + 0.1)
    assert second.body_budget_error == pytest.approx(0.4)


def test_params_validate() -> None:
    with pytest.raises(ValueError):
        AffectParams(salience_decay=1.5)
    with pytest.raises(ValueError):
        AffectParams(salience_drive=-0.1)
