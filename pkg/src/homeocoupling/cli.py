"""Command line entry point: run, matrix, sweep, solve, calibrate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__
from .analysis import (
    REFERENCE_TARGETS,
    SWEEP_LAMBDAS,
    NoThresholdError,
    calibrate_defaults,
    foodshare_world,
    run_sweep,
    solve_foodshare,
    threshold_lambda,
)
from .config import WORLDS, ModelConfig, dump_model, load_model, make_world
from .episode import run_episode
from .harness import (
    ExperimentConfig,
    SeedDivergenceError,
    check_seed_invariance,
    matrix_configs,
    output_dir,
    run_cell,
    run_matrix,
    sweep_rows,
    write_rows,
    write_snapshot,
    write_summary,
    write_trace,
)
from .planner import PlanConfig, Strategy, rollout, search
from .social import Condition, Lesion
from .worlds import LOAD_LEVELS

log = logging.getLogger("homeocoupling")

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _seeds(text: str) -> tuple[int, ...]:
    """'7', '0-63' or '1,4,9'."""
    try:
        if "-" in text and "," not in text:
            lo, hi = (int(x) for x in text.split("-", 1))
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}; use N, A-B or A,B,C") from None


def _nonneg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML file with model overrides")
    p.add_argument("--out", type=Path, help="output root (default $HOMEOCOUPLING_OUT or ./runs)")
    p.add_argument("--strategy", choices=[s.value for s in Strategy])
    p.add_argument("--horizon", type=int)
    p.add_argument("--beam-width", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homeocoupling", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one cell: world x condition x lesion x load")
    _common(run)
    run.add_argument("--world", choices=WORLDS, default="corridor")
    run.add_argument("--condition", choices=[c.value for c in Condition], default="none")
    run.add_argument("--lambda", dest="lam", type=_nonneg, default=1.0)
    run.add_argument("--lesion", choices=[l.value for l in Lesion], default="sham")
    run.add_argument("--load", choices=LOAD_LEVELS, default="low")
    run.add_argument("--seed", type=_seeds, default=(0,), help="seed, range A-B or list A,B")
    run.add_argument("--trace-out", type=Path, help="write the step trace (JSONL) here")
    run.add_argument("--dump-rollouts", type=Path, help="write each step's best planned rollout (JSONL) here")

    matrix = sub.add_parser("matrix", help="conditions x lesions in both worlds")
    _common(matrix)
    matrix.add_argument("--world", choices=WORLDS, action="append")
    matrix.add_argument("--lambda", dest="lam", type=_nonneg, default=1.0)
    matrix.add_argument("--load", choices=LOAD_LEVELS, default="low")
    matrix.add_argument("--seeds", type=_seeds, default=tuple(range(64)))
    matrix.add_argument("--workers", type=int, default=1, help="cells run in this many processes")

    sweep = sub.add_parser("sweep", help="coupling x load grid in the corridor")
    _common(sweep)
    sweep.add_argument("--lambdas", type=lambda s: tuple(_nonneg(x) for x in s.split(",")), default=SWEEP_LAMBDAS)
    sweep.add_argument("--loads", type=lambda s: tuple(s.split(",")), default=LOAD_LEVELS)
    sweep.add_argument("--condition", choices=[c.value for c in Condition], default="affective_direct")
    sweep.add_argument("--workers", type=int, default=1, help="cells run in this many processes")

    solve = sub.add_parser("solve", help="exact one-step solver for FoodShareToy")
    _common(solve)
    group = solve.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=_nonneg)
    group.add_argument("--threshold", action="store_true", help="bisect for the Eat/Pass switch")
    solve.add_argument("--tolerance", type=float, default=1e-4)

    cal = sub.add_parser("calibrate", help="fit free parameters to the reported values")
    _common(cal)
    cal.add_argument("--targets", type=Path, help="YAML mapping of target names to values")
    cal.add_argument("--grid", type=Path, help="YAML mapping of parameter names to candidate lists")
    cal.add_argument("--write", type=Path, help="write the fitted model config here")
    return parser


def _model(args: argparse.Namespace) -> ModelConfig:
    model = load_model()
    if args.config:
        with open(args.config) as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ValueError(f"{args.config}: expected a mapping")
        model = model.with_overrides(doc.get("model", doc))
    planner: dict[str, Any] = {}
    if args.strategy:
        planner["strategy"] = args.strategy
    if args.horizon is not None:
        planner["horizon"] = args.horizon
    if args.beam_width is not None:
        planner["beam_width"] = args.beam_width
    if planner:
        model = model.with_overrides({"planner": planner})
    for world in WORLDS:
        model.planner.plan_config(world)  # fail early on bad planner settings
    return model


def _print_rows(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> None:
    widths = [max(len(c), *(len(_fmt(r.get(c))) for r in rows)) for c in columns]
    print("  ".join(c.ljust(w) for c, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(_fmt(r.get(c)).ljust(w) for c, w in zip(columns, widths)))


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return "" if v is None else str(v)


def _dump_rollouts(path: Path, world, plan_config: PlanConfig, record) -> None:
    state = world.initial_state()
    with open(path, "w") as fh:
        for step in record.steps:
            score, seq = search(world, state, plan_config)
            trace = rollout(world, state, seq, PlanConfig(len(seq), weights=plan_config.weights))
            fh.write(json.dumps({
                "t": step.t,
                "chosen": step.action.name,
                "score": score,
                "sequence": [a.name for a in seq],
                "step_scores": [s.score for s in trace.steps],
                "energy_model": [s.actor.energy_model for s in trace.steps],
            }) + "\n")
            state, _ = world.step(state, step.action)


def cmd_run(args: argparse.Namespace) -> int:
    model = _model(args)
    cfg = ExperimentConfig(args.world, args.condition, args.lam, args.lesion, args.load, args.seed)
    cell = run_cell(cfg, model)
    out = output_dir(args.out, "run")
    write_snapshot(out, model, cfg.to_dict())
    write_rows(out / "summary.csv", [cell.row()])
    write_trace(out / "trace.jsonl", cell.record)
    if args.trace_out:
        write_trace(args.trace_out, cell.record)
    if args.dump_rollouts:
        world = make_world(cfg.world, cfg.social(model), model, cfg.load)
        _dump_rollouts(args.dump_rollouts, world, model.planner.plan_config(cfg.world), cell.record)
    _print_rows([cell.row()], ("world", "condition", "lesion", "lambda", "load", "help_rate",
                               "partner_recovery_rate", "mutual_viability", "rescue_latency",
                               "final_energy_actor", "final_energy_partner"))
    print(f"actions: {cell.record.action_string()}")
    print(f"output: {out}")
    return 0


def cmd_matrix(args: argparse.Namespace) -> int:
    model = _model(args)
    worlds = tuple(args.world) if args.world else WORLDS
    result = run_matrix(matrix_configs(worlds, args.lam, args.seeds, args.load), model, args.workers)
    out = output_dir(args.out, "matrix")
    write_snapshot(out, model, {"worlds": list(worlds), "lambda": args.lam, "load": args.load,
                                "seeds": list(args.seeds)})
    rows = result.rows()
    write_rows(out / "summary.csv", rows)
    write_summary(out / "summary.json", {"dissociation": result.dissociation(), "cells": rows})
    _print_rows(rows, ("world", "condition", "lesion", "help_rate", "partner_recovery_rate",
                       "mutual_viability", "rescue_latency", "self_cost"))
    print(f"output: {out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    model = _model(args)
    for level in args.loads:
        if level not in LOAD_LEVELS:
            raise ValueError(f"unknown load {level!r}; expected one of {LOAD_LEVELS}")
    table = run_sweep(model, args.lambdas, args.loads, Condition(args.condition), workers=args.workers)
    out = output_dir(args.out, "sweep")
    write_snapshot(out, model, {"lambdas": list(args.lambdas), "loads": list(args.loads),
                                "condition": args.condition})
    rows = sweep_rows(table)
    columns = ("lambda", "load", "help_rate", "partner_recovery_rate", "mutual_viability",
               "rescue_latency", "self_cost", "error")
    write_rows(out / "sweep.csv", rows, columns)
    write_summary(out / "summary.json", {"cells": rows})
    _print_rows(rows, columns)
    print(f"output: {out}")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    model = _model(args)
    if args.threshold:
        try:
            res = threshold_lambda(model, tolerance=args.tolerance)
        except NoThresholdError as exc:
            print(f"no threshold: {exc}")
            return 1
        print(f"lambda* = {res.lam_star:.6f}  bracket [{res.lo:.6f}, {res.hi:.6f}]")
        for side, lam, sol in (("below", res.lo, res.below), ("above", res.hi, res.above)):
            scores = "  ".join(f"{a.name}={v:+.6f}" for a, v in sol.scores.items())
            print(f"{side} (lambda={lam:.6f}): {sol.best.name}  {scores}")
        return 0
    lam = 1.0 if args.lam is None else args.lam
    res = solve_foodshare(foodshare_world(model, lam))
    for action, score in res.scores.items():
        mark = "*" if action is res.best else " "
        print(f"{mark} {action.name:<5} {score:+.6f}")
    print(f"best: {res.best.name} (margin {res.margin:.6f}) at lambda={lam}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    model = _model(args)
    targets = dict(REFERENCE_TARGETS)
    if args.targets:
        with open(args.targets) as fh:
            targets = yaml.safe_load(fh) or {}
    grid = None
    if args.grid:
        with open(args.grid) as fh:
            grid = {k: tuple(v) if isinstance(v, list) else (v,) for k, v in (yaml.safe_load(fh) or {}).items()}
    result = calibrate_defaults(targets, model, grid)
    for line in result.report:
        print(line)
    for name, value in result.residuals.items():
        print(f"residual {name}: {value:+.6f}")
    print("feasible" if result.feasible else "infeasible: no candidate met every target")
    if args.write:
        dump_model(result.model, args.write)
        print(f"wrote {args.write}")
    return 0 if result.feasible else 1


COMMANDS = {
    "run": cmd_run,
    "matrix": cmd_matrix,
    "sweep": cmd_sweep,
    "solve": cmd_solve,
    "calibrate": cmd_calibrate,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SeedDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValueError, KeyError, TypeError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
