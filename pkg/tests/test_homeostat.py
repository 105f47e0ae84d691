from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homeocoupling.homeostat import (
    ActionFlags,
    HomeostatParams,
    HomeostatState,
    appraise,
    coupled_distress,
    distress,
    homeostat_step,
    update_true_energy,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_eat_from_055_reaches_079() -> None:
    p = HomeostatParams(basal_cost=0.01, eat_gain=0.25, pass_gain=0.0)
    assert update_true_energy(HomeostatState.at(0.55), p, ActionFlags(ate=1)) == pytest.approx(0.79, abs=1e-12)


def test_no_costs_no_gains_is_identity() -> None:
    p = HomeostatParams(basal_cost=0.0, eat_gain=0.0, pass_gain=0.0)
    assert update_true_energy(HomeostatState.at(0.5), p, ActionFlags()) == 0.5


def test_energy_clips_at_zero() -> None:
    p = HomeostatParams(basal_cost=0.01)
    assert update_true_energy(HomeostatState.at(0.005), p, ActionFlags()) == 0.0


@pytest.mark.parametrize(
    "s, e, expected",
    [(0.7, 0.5, 0.2), (0.7, 0.9, 0.0), (0.7, 0.7, 0.0)],
)
def test_distress(s: float, e: float, expected: float) -> None:
    assert distress(s, e) == pytest.approx(expected)


@pytest.mark.parametrize(
    "d_self, d_other, lam, expected",
    [(0.2, 0.5, 0.5, 0.45), (0.2, 0.5, 0.0, 0.2), (0.0, 0.5, 0.91, 0.455)],
)
def test_coupled_distress(d_self: float, d_other: float, lam: float, expected: float) -> None:
    assert coupled_distress(d_self, d_other, lam) == pytest.approx(expected)


def test_single_step_by_hand() -> None:
    p = HomeostatParams(basal_cost=0.01, distress_gain=0.0, model_lr=1.0)
    new, trace = homeostat_step(HomeostatState.at(0.5), p, ActionFlags(), 0.0, 0.1)
    assert new.energy_true == pytest.approx(0.49)
    assert new.energy_model == pytest.approx(0.49)
    assert trace.prediction_error == pytest.approx(-0.01)


def test_zero_learning_rate_freezes_model() -> None:
    p = HomeostatParams(basal_cost=0.1, eat_gain=0.5, model_lr=0.0)
    state = HomeostatState(0.3, 0.6)
    new, trace = homeostat_step(state, p, ActionFlags(ate=1), 1.0, 0.0)
    assert trace.prediction_error != 0.0
    assert new.energy_model == 0.6


def test_no_distress_fixed_point() -> None:
    p = HomeostatParams(setpoint=0.7)
    _, trace = homeostat_step(HomeostatState.at(0.7), p, ActionFlags(), 1.0, 0.8)
    assert trace.d_cpl == 0.0
    assert trace.energy_pred == 0.7


def test_appraisal_reads_post_step_state() -> None:
    p = HomeostatParams(setpoint=0.7, basal_cost=0.0, eat_gain=0.25, model_lr=1.0)
    new, raw = homeostat_step(HomeostatState.at(0.5), p, ActionFlags(ate=1), 0.5, 0.3)
    post = appraise(new, p, raw, 0.5, 0.6)
    assert raw.d_self == pytest.approx(0.2)
    assert post.d_self == 0.0
    assert post.d_cpl == pytest.approx(0.05)
    assert post.prediction_error == raw.prediction_error


@pytest.mark.parametrize(
    "field, value",
    [("basal_cost", -0.1), ("eat_gain", -1.0), ("setpoint", 1.2), ("model_lr", 1.5)],
)
def test_params_reject_out_of_range(field: str, value: float) -> None:
    with pytest.raises(ValueError, match=field):
        HomeostatParams(**{field: value})


def test_step_stays_in_unit_interval() -> None:
    rng = random.Random(7)
    for _ in range(10_000):
        p = HomeostatParams(
            rng.random(), *(rng.uniform(0.0, 2.0) for _ in range(6)), rng.random()
        )
        state = HomeostatState(rng.random(), rng.random())
        flags = ActionFlags(*(rng.randint(0, 1) for _ in range(4)))
        new, trace = homeostat_step(state, p, flags, rng.uniform(0.0, 3.0), rng.random())
        assert 0.0 <= new.energy_true <= 1.0
        assert 0.0 <= new.energy_model <= 1.0
        assert 0.0 <= trace.energy_pred <= 1.0
        assert trace.d_self >= 0.0 and trace.d_other >= 0.0


def test_coupled_distress_is_linear_in_lambda() -> None:
    rng = random.Random(11)
    for _ in range(10_000):
        d_self, d_other, lam = rng.random(), rng.random(), rng.uniform(0.0, 2.0)
        slope = coupled_distress(d_self, d_other, 1.0) - coupled_distress(d_self, d_other, 0.0)
        assert slope == pytest.approx(d_other, abs=1e-12)
        assert coupled_distress(d_self, d_other, lam) == pytest.approx(d_self + lam * slope, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(d_self=unit, d_other=unit, lam1=st.floats(0.0, 2.0), lam2=st.floats(0.0, 2.0), a=st.floats(0.0, 1.0))
def test_coupled_distress_is_affine_in_lambda(d_self, d_other, lam1, lam2, a) -> None:
    mixed = coupled_distress(d_self, d_other, a * lam1 + (1 - a) * lam2)
    blend = a * coupled_distress(d_self, d_other, lam1) + (1 - a) * coupled_distress(d_self, d_other, lam2)
    assert mixed == pytest.approx(blend, abs=1e-12)


@settings(max_examples=500, deadline=None)
@given(e=unit, m=unit, est1=unit, est2=unit)
def test_zero_coupling_ignores_partner(e, m, est1, est2) -> None:
    p = HomeostatParams()
    a = homeostat_step(HomeostatState(e, m), p, ActionFlags(), 0.0, est1)
    b = homeostat_step(HomeostatState(e, m), p, ActionFlags(), 0.0, est2)
    assert a[0] == b[0]
    assert a[1].d_cpl == b[1].d_cpl
