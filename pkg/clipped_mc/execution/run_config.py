"""Declarative experiment definitions."""

import json
from enum import StrEnum
from pathlib import Path
from typing import Literal, Self

from pydantic import BaseModel, Field, model_validator

from clipped_mc.models.solver import SolverConfig, Variant
from clipped_mc.models.synth import SynthSpec
from clipped_mc.solvers.presets import PRESETS

DatasetName = Literal["movielens-100k", "filmtrust"]


class Pipeline(StrEnum):
  SYNTHETIC_SWEEP = "synthetic-sweep"
  REAL_TASK1 = "real-task1"
  REAL_TASK2 = "real-task2"
  DIAGNOSE = "diagnose"
  SINGLE_SOLVE = "single-solve"


# Task thresholds: task one clips at C, task two sets C to the top rating.
TASK_CEILINGS: dict[tuple[Pipeline, str], float] = {
  (Pipeline.REAL_TASK1, "movielens-100k"): 4.0,
  (Pipeline.REAL_TASK1, "filmtrust"): 7.0,
  (Pipeline.REAL_TASK2, "movielens-100k"): 5.0,
  (Pipeline.REAL_TASK2, "filmtrust"): 8.0,
}


class DiagnoseOptions(BaseModel):
  model_config = {"extra": "forbid", "frozen": True}

  beta: float = Field(default=3.0, gt=1.0)
  samples: int = Field(default=100, ge=1)
  ascent_steps: int = Field(default=0, ge=0)


class AcceptanceCheck(BaseModel):
  """Bound on a summary metric; every matching summary row must satisfy it."""

  model_config = {"extra": "forbid", "frozen": True}

  variant: str
  metric: str
  max: float | None = None
  min: float | None = None

  @model_validator(mode="after")
  def _check_bounds(self) -> Self:
    if self.max is None and self.min is None:
      raise ValueError("an acceptance check needs max or min")
    return self

  def passes(self, value: float) -> bool:
    if self.max is not None and not value <= self.max:
      return False
    return self.min is None or value >= self.min


class RunConfig(BaseModel):
  """One experiment: what data, which estimators, how many seeds."""

  model_config = {"extra": "forbid", "frozen": True}

  pipeline: Pipeline
  seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
  variants: list[Variant] = Field(default_factory=list[Variant])
  jobs: int = Field(default=1, ge=1)

  # Per-variant grids: explicit configs win over named presets.
  presets: dict[Variant, str] = Field(default_factory=dict[Variant, str])
  grids: dict[Variant, list[SolverConfig]] = Field(
    default_factory=dict[Variant, list[SolverConfig]]
  )

  synth: SynthSpec | None = None
  ceilings: list[float] = Field(default_factory=list[float])

  dataset: DatasetName | None = None
  dataset_path: Path | None = None
  double_ratings: bool = True
  ceiling: float | None = Field(default=None, description="Overrides the task C")

  solver: SolverConfig | None = None
  diagnose: DiagnoseOptions = Field(default_factory=DiagnoseOptions)

  acceptance: list[AcceptanceCheck] = Field(default_factory=list[AcceptanceCheck])

  @model_validator(mode="after")
  def _check_pipeline_inputs(self) -> Self:
    match self.pipeline:
      case Pipeline.SYNTHETIC_SWEEP:
        if self.synth is None or not self.ceilings:
          raise ValueError("synthetic-sweep needs synth and a non-empty ceilings list")
        self._require_variants()
      case Pipeline.REAL_TASK1 | Pipeline.REAL_TASK2:
        if self.dataset is None:
          raise ValueError(f"{self.pipeline} needs a dataset")
        self._require_variants()
      case Pipeline.DIAGNOSE:
        if self.synth is None or self.synth.ceiling is None:
          raise ValueError("diagnose needs synth with a ceiling C")
      case Pipeline.SINGLE_SOLVE:
        if self.synth is None or self.solver is None:
          raise ValueError("single-solve needs synth and solver")
    for name in self.presets.values():
      if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}")
    for variant, grid in self.grids.items():
      if not grid:
        raise ValueError(f"grid for {variant} is empty")
      if any(cfg.variant is not variant for cfg in grid):
        raise ValueError(f"grid for {variant} holds configs of another variant")
    return self

  def _require_variants(self) -> None:
    if not self.variants:
      raise ValueError(f"{self.pipeline} needs at least one variant")

  def task_ceiling(self) -> float:
    """C of a real-data task (explicit `ceiling` first)."""
    if self.ceiling is not None:
      return self.ceiling
    assert self.dataset is not None
    return TASK_CEILINGS[(self.pipeline, self.dataset)]

  @classmethod
  def from_file(cls, path: Path) -> Self:
    return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))
