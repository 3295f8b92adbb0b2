# pipeline/batch.py
"""
Batch matrices: scenarios x seeds x weathers x densities x trigger shifts,
one independent run per cell, executed on a joblib worker pool.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
import yaml
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from policy_harness.binding import PolicyBinding
from pipeline.run_loop import RunConfig, execute_run
from scenario_dsl.catalog import Catalog, parse_category
from scenario_model.errors import CatalogError, ConfigurationError, CornerSimError
from scenario_model.overrides import Overrides, shift_all_timed_triggers
from scenario_model.types import ScenarioSpec, TrafficDensity
from scenario_model.weather import WEATHER_PRESETS

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.csv"
SUMMARY_COLUMNS = (
    "scenario_id", "seed", "weather", "density", "trigger_shift",
    "completed", "outcome", "terminal_reason", "severity_score", "collisions",
    "ticks", "route_completion", "trace_hash", "directory", "error",
)


class BatchMatrix(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    scenarios: List[str] = Field(default_factory=list)
    category: Optional[str] = None
    weathers: List[str]
    seeds: List[int]
    densities: Optional[List[TrafficDensity]] = None
    trigger_shifts: List[float] = Field(default_factory=lambda: [0.0])
    policy: str = "builtin:emergency_brake"
    out: str = "runs/batch"

    @model_validator(mode="after")
    def _non_empty_axes(self):
        if not self.scenarios and self.category is None:
            raise ValueError("matrix needs 'scenarios' or 'category'")
        for axis in ("weathers", "seeds", "trigger_shifts"):
            if not getattr(self, axis):
                raise ValueError(f"axis '{axis}' is empty")
        if self.densities is not None and not self.densities:
            raise ValueError("axis 'densities' is empty")
        unknown = [w for w in self.weathers if w not in WEATHER_PRESETS]
        if unknown:
            raise ValueError(f"unknown weather preset(s): {', '.join(unknown)}")
        return self


def load_matrix(path: Union[str, Path]) -> BatchMatrix:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read matrix {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse matrix {path}: {e}") from None
    try:
        return BatchMatrix.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "matrix"
        raise ConfigurationError(f"{path}: {where}: {first['msg']}") from None


@dataclass(frozen=True)
class BatchCell:
    scenario: ScenarioSpec
    seed: int
    weather: str
    density: Optional[TrafficDensity]
    trigger_shift: float

    @property
    def density_label(self) -> str:
        return (self.density or self.scenario.traffic_density).value

    def directory(self, root: Path) -> Path:
        name = f"{self.weather}_{self.density_label}_{self.trigger_shift:g}"
        return Path(root) / self.scenario.id / str(self.seed) / name

    def overrides(self) -> Overrides:
        return Overrides(
            weather=self.weather,
            traffic_density=self.density,
            trigger_shifts=shift_all_timed_triggers(self.scenario, self.trigger_shift),
        )


def select_scenarios(matrix: BatchMatrix, catalog: Catalog) -> List[ScenarioSpec]:
    if matrix.category is not None:
        selected = catalog.by_category(parse_category(matrix.category))
    else:
        selected = []
    for scenario_id in matrix.scenarios:
        spec = catalog.get(scenario_id)
        if spec not in selected:
            selected.append(spec)
    if not selected:
        raise CatalogError("matrix selects no scenarios")
    return selected


def expand_matrix(matrix: BatchMatrix, catalog: Catalog) -> List[BatchCell]:
    densities = matrix.densities or [None]
    return [
        BatchCell(spec, seed, weather, density, shift)
        for spec in select_scenarios(matrix, catalog)
        for seed in matrix.seeds
        for weather in matrix.weathers
        for density in densities
        for shift in matrix.trigger_shifts
    ]


def run_cell(cell: BatchCell, binding: PolicyBinding, root: Path, config: RunConfig) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "scenario_id": cell.scenario.id,
        "seed": cell.seed,
        "weather": cell.weather,
        "density": cell.density_label,
        "trigger_shift": cell.trigger_shift,
        "directory": str(cell.directory(root)),
    }
    try:
        artifacts = execute_run(cell.scenario, binding, cell.directory(root), seed=cell.seed,
                                overrides=cell.overrides(), config=config)
    except CornerSimError as e:
        logger.warning("[!] Cell %s failed: %s", row["directory"], e)
        row.update(completed=False, outcome="", terminal_reason="", severity_score=float("nan"),
                   collisions=0, ticks=0, route_completion=float("nan"), trace_hash="", error=str(e))
        return row
    result = artifacts.output.result
    row.update(
        completed=True,
        outcome=result.outcome.value,
        terminal_reason=result.terminal_reason.value,
        severity_score=result.severity_score,
        collisions=len(result.collisions),
        ticks=len(artifacts.output.trace),
        route_completion=result.metrics.route_completion,
        trace_hash=artifacts.manifest.trace_hash,
        error="",
    )
    return row


@dataclass
class BatchReport:
    rows: List[Dict[str, Any]]
    summary_path: Path

    @property
    def all_completed(self) -> bool:
        return all(row["completed"] for row in self.rows)


def summary_frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))
    return frame.sort_values(["scenario_id", "seed", "weather", "density", "trigger_shift"], kind="mergesort") \
        .reset_index(drop=True)


def run_batch(cells: List[BatchCell], binding: PolicyBinding, root: Union[str, Path],
              config: RunConfig = RunConfig(), jobs: int = 1) -> BatchReport:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    logger.info("[+] Running %s cells with %s worker(s)", len(cells), jobs)
    if jobs == 1:
        rows = [run_cell(cell, binding, root, config) for cell in cells]
    else:
        rows = Parallel(n_jobs=jobs)(delayed(run_cell)(cell, binding, root, config) for cell in cells)
    frame = summary_frame(rows)
    summary_path = root / SUMMARY_FILE
    frame.to_csv(summary_path, index=False, lineterminator="\n")
    return BatchReport(rows=frame.to_dict(orient="records"), summary_path=summary_path)
