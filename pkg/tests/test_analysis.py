from __future__ import annotations

import math

import pytest

from homeocoupling.analysis import (
    REFERENCE_TARGETS,
    NoThresholdError,
    calibrate_defaults,
    compute_metrics,
    invert_corridor,
    invert_foodshare,
    run_sweep,
    solve_foodshare,
    threshold_lambda,
)
from homeocoupling.config import ModelConfig
from homeocoupling.episode import run_episode
from homeocoupling.worlds import Action

A = Action

# frozen outputs of the committed calibration
LAMBDA_STAR = 0.9071
COUPLED_VIABILITY = 0.2439
SELFISH_VIABILITY = 0.105


def test_solver_choices(foodshare) -> None:
    assert solve_foodshare(foodshare(0.0)).best is A.EAT
    res = solve_foodshare(foodshare(1.0))
    assert res.best is A.PASS
    assert set(res.scores) == {A.EAT, A.PASS, A.STAY}
    assert res.margin == pytest.approx(res.scores[A.PASS] - res.scores[A.EAT])


def test_solver_without_food(foodshare) -> None:
    world = foodshare()
    res = solve_foodshare(world, world.initial_state(has_food=False))
    assert res.best is A.STAY and math.isinf(res.margin)


def test_threshold_value(model) -> None:
    res = threshold_lambda(model)
    assert abs(res.lam_star - 0.91) <= 0.02
    assert res.lam_star == pytest.approx(LAMBDA_STAR, abs=1e-3)


def test_threshold_brackets_the_flip(model, foodshare) -> None:
    res = threshold_lambda(model, tolerance=1e-4)
    assert res.hi - res.lo <= 1e-4
    assert res.below.best is A.EAT and res.above.best is A.PASS
    assert solve_foodshare(foodshare(res.lo)).best is A.EAT
    assert solve_foodshare(foodshare(res.hi)).best is A.PASS


def test_no_threshold_for_undistressed_partner(model) -> None:
    with pytest.raises(NoThresholdError):
        threshold_lambda(model, partner_energy=model.setpoint)


def _corridor_record(corridor, model, condition="affective_direct", lam=1.0, lesion="sham", load="low"):
    return run_episode(corridor(condition, lam, lesion, load), model.planner.plan_config("corridor"))


def test_metrics_for_reference_runs(corridor, model) -> None:
    selfish = _corridor_record(corridor, model, "none")
    helping = _corridor_record(corridor, model)
    m_selfish = compute_metrics([selfish], [selfish], model.recovery_threshold)
    m_help = compute_metrics([helping], [selfish], model.recovery_threshold)
    assert (m_selfish.help_rate, m_selfish.partner_recovery_rate, m_selfish.rescue_latency) == (0.0, 0.0, 18)
    assert (m_help.help_rate, m_help.partner_recovery_rate, m_help.rescue_latency) == (1.0, 1.0, 9)
    assert m_help.self_cost == pytest.approx(0.14, abs=1e-9)
    assert m_selfish.mutual_viability == pytest.approx(SELFISH_VIABILITY, abs=1e-4)
    assert m_help.mutual_viability == pytest.approx(COUPLED_VIABILITY, abs=1e-4)


def test_metrics_over_identical_reruns_equal_one_run(corridor, model) -> None:
    rec = _corridor_record(corridor, model)
    one = compute_metrics([rec])
    many = compute_metrics([rec] * 64)
    assert one.help_rate in (0.0, 1.0)
    assert many.as_row() | {"episodes": 1} == one.as_row()


def test_metrics_need_records() -> None:
    with pytest.raises(ValueError):
        compute_metrics([])


def test_sweep_structure(model) -> None:
    table = run_sweep(model, lambdas=(0.25, 0.0), loads=("medium", "low"))
    assert [(r.lam, r.load) for r in table.rows] == [(0.0, "low"), (0.0, "medium"), (0.25, "low"), (0.25, "medium")]
    assert table.cell(0.0, "low").metrics.help_rate == 0.0
    assert table.cell(0.25, "low").metrics.help_rate == 1.0
    assert table.cell(0.25, "medium").metrics.help_rate == 0.0
    assert table.cell(0.25, "low").metrics.self_cost == pytest.approx(0.14, abs=1e-9)
    with pytest.raises(KeyError):
        table.cell(0.5, "low")


def test_sweep_records_bad_cells(model) -> None:
    table = run_sweep(model, lambdas=(0.0, -1.0), loads=("low",))
    bad = table.cell(-1.0, "low")
    assert bad.metrics is None and "lambda" in bad.error
    assert table.cell(0.0, "low").metrics is not None


def test_foodshare_inversion() -> None:
    inv = invert_foodshare(REFERENCE_TARGETS)
    assert inv == pytest.approx({"basal_cost": 0.01, "eat_gain": 0.25, "pass_gain": 0.25}, abs=1e-12)


def test_foodshare_inversion_rejects_inconsistent_basal() -> None:
    with pytest.raises(ValueError, match="inconsistent"):
        invert_foodshare(REFERENCE_TARGETS | {"foodshare_unfed_partner_final": 0.15})


def test_corridor_inversion_reproduces_defaults(model) -> None:
    inv = invert_corridor(model, 0.745, 0.605)
    assert inv["actor_energy"] == pytest.approx(model.corridor.actor_energy, abs=1e-12)
    assert inv["eat_gain"] == pytest.approx(model.corridor.eat_gain, abs=1e-12)


def test_calibrate_without_targets_is_identity(model) -> None:
    res = calibrate_defaults({}, model)
    assert res.model == model and res.feasible and res.residuals == {}


def test_calibrate_recovers_committed_defaults(model) -> None:
    grid = {"setpoint": (0.6, 0.64), "distress_gain": (0.015,), "model_lr": (0.76,),
            "valence_pe_gain": (1.6,), "arousal_distress_gain": (1.1, 1.5), "salience_decay": (0.9,),
            "salience_drive": (0.18,), "move_cost": (0.005,), "hazard_cost": (0.01,)}
    res = calibrate_defaults(REFERENCE_TARGETS, ModelConfig(), grid)
    assert res.feasible
    assert res.model == model
    assert abs(res.residuals["lambda_star"]) <= 0.02
    assert abs(res.residuals["corridor_selfish_actor_final"]) <= 0.01
    assert abs(res.residuals["corridor_helping_actor_final"]) <= 0.01


def test_calibrate_reports_infeasible_grid() -> None:
    res = calibrate_defaults({"lambda_star": 0.91}, ModelConfig(), {"setpoint": (0.95,)})
    assert not res.feasible
