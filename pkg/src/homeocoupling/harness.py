"""Experiment matrix, seed-invariance gate and output files."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import repeat
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml

from .analysis import DEFINITIONS_NOTE, MetricsSummary, SweepTable, compute_metrics
from .config import WORLDS, ModelConfig, load_model, make_world
from .episode import EpisodeRecord, run_episode
from .social import Condition, Lesion, SocialConfig
from .worlds import LOAD_LEVELS

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "HOMEOCOUPLING_OUT"
SUMMARY_FIELDS = (
    "world", "condition", "lesion", "lambda", "load",
    "help_rate", "partner_recovery_rate", "mutual_viability", "rescue_latency",
    "self_cost", "final_energy_actor", "final_energy_partner", "episodes", "actions",
)


class SeedDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    world: str = "corridor"
    condition: str = "none"
    lam: float = 1.0
    lesion: str = "sham"
    load: str = "low"
    seeds: tuple[int, ...] = tuple(range(64))
    overrides: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.world not in WORLDS:
            raise ValueError(f"unknown world {self.world!r}; expected one of {WORLDS}")
        if self.load not in LOAD_LEVELS:
            raise ValueError(f"unknown load {self.load!r}; expected one of {LOAD_LEVELS}")
        Condition(self.condition)
        Lesion(self.lesion)
        if not self.lam >= 0:
            raise ValueError(f"coupling lambda must be >= 0, got {self.lam}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("at least one seed is required")

    def social(self, model: ModelConfig) -> SocialConfig:
        return SocialConfig(Condition(self.condition), self.lam, Lesion(self.lesion), model.decoy_energy)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        data = dict(data)
        if "seeds" in data:
            data["seeds"] = tuple(data["seeds"])
        return cls(**data)


@dataclass
class CellResult:
    config: ExperimentConfig
    records: list[EpisodeRecord]
    metrics: MetricsSummary

    @property
    def record(self) -> EpisodeRecord:
        return self.records[0]

    def row(self) -> dict[str, Any]:
        row = {
            "world": self.config.world,
            "condition": self.config.condition,
            "lesion": self.config.lesion,
            "lambda": self.config.lam,
            "load": self.config.load,
        }
        row.update(self.metrics.as_row())
        row["actions"] = self.record.action_string()
        return row


def check_seed_invariance(label: str, records: Sequence[EpisodeRecord]) -> None:
    ref = records[0]
    for rec in records[1:]:
        if not ref.same_run(rec):
            step = ref.first_divergence(rec)
            raise SeedDivergenceError(
                f"cell {label}: seed {rec.seed} diverges from seed {ref.seed} at step {step}"
            )


def run_cell(
    config: ExperimentConfig,
    model: ModelConfig | None = None,
    baseline: Sequence[EpisodeRecord] | None = None,
) -> CellResult:
    model = (model or load_model()).with_overrides(config.overrides)
    social = config.social(model)
    plan_config = model.planner.plan_config(config.world)
    snapshot = {"experiment": {k: v for k, v in config.to_dict().items() if k != "seeds"}, "model": model.to_dict()}
    records = [
        run_episode(make_world(config.world, social, model, config.load), plan_config, seed, snapshot)
        for seed in config.seeds
    ]
    label = f"{config.world}/{config.condition}/{config.lesion}/lambda={config.lam}/{config.load}"
    check_seed_invariance(label, records)
    # seed reruns are identical, so one representative carries the metrics
    metrics = compute_metrics(records[:1], baseline[:1] if baseline else None, model.recovery_threshold)
    return CellResult(config, records, metrics)


def matrix_configs(
    worlds: Sequence[str] = WORLDS,
    lam: float = 1.0,
    seeds: Sequence[int] = tuple(range(64)),
    load: str = "low",
) -> list[ExperimentConfig]:
    """Conditions x lesions in canonical order; lesions apply to the coupled conditions only."""
    out = []
    for world in worlds:
        for cond in Condition:
            lesions = list(Lesion) if cond.coupled else [Lesion.SHAM]
            for lesion in lesions:
                out.append(ExperimentConfig(world, cond.value, lam, lesion.value, load, tuple(seeds)))
    return out


@dataclass
class MatrixResult:
    cells: list[CellResult]

    def cell(self, world: str, condition: str, lesion: str = "sham") -> CellResult:
        for c in self.cells:
            if (c.config.world, c.config.condition, c.config.lesion) == (world, condition, lesion):
                return c
        raise KeyError((world, condition, lesion))

    def rows(self) -> list[dict[str, Any]]:
        return [c.row() for c in self.cells]

    def dissociation(self) -> dict[str, dict[str, tuple[float, float]]]:
        """(help rate, partner recovery) per world and condition, intact channel."""
        table: dict[str, dict[str, tuple[float, float]]] = {}
        for c in self.cells:
            if c.config.lesion == Lesion.SHAM.value:
                table.setdefault(c.config.world, {})[c.config.condition] = (
                    c.metrics.help_rate,
                    c.metrics.partner_recovery_rate,
                )
        return table


def run_matrix(
    configs: Iterable[ExperimentConfig] | None = None,
    model: ModelConfig | None = None,
    workers: int = 1,
) -> MatrixResult:
    """Run every cell, then fill in self-cost against the matched none/sham cell.

    With ``workers > 1`` cells run in separate processes; results keep the
    order of ``configs`` either way.
    """
    model = model or load_model()
    configs = list(configs) if configs is not None else matrix_configs()
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run_cell, configs, repeat(model)))
    else:
        cells = [run_cell(cfg, model) for cfg in configs]
    baselines = {
        (c.config.world, c.config.load): c.records
        for c in cells
        if c.config.condition == Condition.NONE.value and c.config.lesion == Lesion.SHAM.value
    }
    for cell in cells:
        base = baselines.get((cell.config.world, cell.config.load))
        if base is not None:
            threshold = model.with_overrides(cell.config.overrides).recovery_threshold
            cell.metrics = compute_metrics(cell.records[:1], base[:1], threshold)
    return MatrixResult(cells)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def output_dir(root: str | Path | None, command: str) -> Path:
    root = Path(root or os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    stamp = time.strftime("%Y%m%d-%H%M%S")
    path = root / f"{stamp}-{command}"
    n = 1
    while path.exists():
        n += 1
        path = root / f"{stamp}-{command}-{n}"
    path.mkdir(parents=True)
    return path


def write_snapshot(path: Path, model: ModelConfig, experiment: dict[str, Any] | None = None) -> None:
    doc: dict[str, Any] = {"model": model.to_dict()}
    if experiment is not None:
        doc["experiment"] = experiment
    with open(path / "config.yaml", "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def write_rows(path: Path, rows: Sequence[dict[str, Any]], columns: Sequence[str] = SUMMARY_FIELDS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})


def write_trace(path: Path, record: EpisodeRecord) -> None:
    """One JSON object per step, then a final summary line."""
    with open(path, "w") as fh:
        for step in record.steps:
            fh.write(json.dumps(step.to_dict()) + "\n")
        fh.write(json.dumps({"summary": record.summary()}) + "\n")


def read_trace(path: Path) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    steps, summary = [], {}
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            if "summary" in obj:
                summary = obj["summary"]
            else:
                steps.append(obj)
    return steps, summary


def write_summary(path: Path, payload: dict[str, Any]) -> None:
    payload = dict(payload)
    payload.setdefault("definitions", DEFINITIONS_NOTE)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)


def sweep_rows(table: SweepTable) -> list[dict[str, Any]]:
    return [r.as_row() for r in table.rows]
