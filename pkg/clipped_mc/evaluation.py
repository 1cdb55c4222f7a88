"""Error metrics, threshold-exceedance f1 scores and hyperparameter selection."""

import math
import time
import traceback
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from typing import Literal, NamedTuple

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray
from pydantic import BaseModel

from clipped_mc.errors import MissingThresholdError
from clipped_mc.models.clip_spec import ClipSpec, at_threshold
from clipped_mc.models.observations import IndexSet, ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult
from clipped_mc.solvers.dispatch import solve

log = structlog.get_logger(__name__)

Selection = Literal["val_rel_rmse_clipped", "val_f1"]


class Task(StrEnum):
  """Which exceedance question the f1 score answers."""

  ONE = "one"  # was the true value above C?
  TWO = "two"  # is the true value the maximum rating C?


class F1Score(NamedTuple):
  f1: float
  precision: float
  recall: float


def _clip_values(
  values: NDArray[np.float64], truth: ObservedEntries, spec: ClipSpec
) -> NDArray[np.float64]:
  out = values
  if spec.has_ceiling:
    out = np.minimum(out, spec.upper_at(truth.row_idx, truth.col_idx))
  if spec.has_floor:
    out = np.maximum(out, spec.lower_at(truth.row_idx, truth.col_idx))
  return out


def rel_rmse(
  estimate: NDArray[np.float64],
  truth: ObservedEntries,
  clip_both: bool = False,
  spec: ClipSpec | None = None,
) -> float:
  """sqrt(sum (e - t)^2) / sqrt(sum t^2) over the entries of `truth`.

  With `clip_both` both sides are clipped first (`spec`, or the thresholds
  attached to `truth`), which is the validation metric.

  Raises:
    ValueError: If `truth` is empty or its values are all zero.
    MissingThresholdError: If `clip_both` is set and no thresholds are known.
  """
  if len(truth) == 0:
    raise ValueError("rel_rmse needs at least one entry")
  est = truth.values_at(estimate)
  ref = truth.values
  if clip_both:
    spec = spec or truth.spec
    if spec is None:
      raise MissingThresholdError("clip_both needs clipping thresholds")
    est = _clip_values(est, truth, spec)
    ref = _clip_values(ref, truth, spec)
  denom = math.sqrt(math.fsum((ref * ref).tolist()))
  if denom == 0.0:
    raise ValueError("rel_rmse is undefined for an all-zero truth")
  diff = est - ref
  return math.sqrt(math.fsum((diff * diff).tolist())) / denom


def rel_rmse_dense(
  estimate: NDArray[np.float64],
  m: NDArray[np.float64],
  where: IndexSet | None = None,
  clip_both: bool = False,
  spec: ClipSpec | None = None,
) -> float:
  """`rel_rmse` against a dense truth restricted to `where` (all entries if None)."""
  return rel_rmse(estimate, ObservedEntries.from_dense(m, where), clip_both, spec)


def below_ceiling(truth: ObservedEntries, ceiling: float) -> ObservedEntries:
  """Entries whose true value does not exceed `ceiling`."""
  return truth.subset(truth.values <= ceiling)


def task_labels(truth: ObservedEntries, task: Task, c: float) -> NDArray[np.bool_]:
  """Positive labels: above C for task one, equal to C for task two."""
  match task:
    case Task.ONE:
      return truth.values > c
    case Task.TWO:
      return at_threshold(truth.values, np.full(len(truth), c))


def _score(predicted: NDArray[np.bool_], labels: NDArray[np.bool_]) -> F1Score:
  tp = int(np.count_nonzero(predicted & labels))
  n_pred = int(np.count_nonzero(predicted))
  n_pos = int(np.count_nonzero(labels))
  precision = tp / n_pred if n_pred else 0.0
  recall = tp / n_pos if n_pos else 0.0
  if precision + recall == 0.0:
    return F1Score(0.0, precision, recall)
  return F1Score(2 * precision * recall / (precision + recall), precision, recall)


def f1_task(
  estimate: NDArray[np.float64], test: ObservedEntries, task: Task, c: float
) -> F1Score:
  """f1 of thresholded predictions against the exceedance labels.

  Task one predicts positive above C + 0.5, task two above C - 0.5 (strict).
  f1 is 0 when precision + recall is 0.

  Raises:
    ValueError: If `test` is empty.
  """
  if len(test) == 0:
    raise ValueError("f1 needs at least one test entry")
  est = test.values_at(estimate)
  match task:
    case Task.ONE:
      predicted = est > c + 0.5
    case Task.TWO:
      predicted = est > c - 0.5
  return _score(predicted, task_labels(test, task, c))


def baseline_all_positive(labels: NDArray[np.bool_]) -> F1Score:
  """Score of predicting every entry positive: recall 1, precision = positive rate."""
  labels = np.asarray(labels, dtype=bool)
  if labels.size == 0:
    raise ValueError("baseline needs at least one label")
  return _score(np.ones_like(labels), labels)


def mean_se(values: Sequence[float]) -> tuple[float, float]:
  """Mean and standard error (ddof=1); the error of a single value is 0."""
  arr = np.asarray(values, dtype=np.float64)
  if arr.size == 0:
    raise ValueError("mean_se needs at least one value")
  if arr.size == 1:
    return float(arr[0]), 0.0
  return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def summarize(frame: pd.DataFrame, by: list[str], metric: str) -> pd.DataFrame:
  """Per-group mean, standard error and run count of `metric`."""
  grouped = frame.groupby(by, sort=True)[metric]
  out = grouped.agg(mean="mean", se="sem", runs="count").reset_index()
  out["se"] = out["se"].fillna(0.0)
  return out


class GridRow(BaseModel):
  """One configuration of a grid search and how it went."""

  index: int
  label: str
  config: SolverConfig
  metric: float | None = None
  iterations_used: int = 0
  converged: bool = False
  duration_ms: float = 0.0
  error_type: str | None = None
  error_message: str | None = None
  error_traceback: str | None = None

  @property
  def failed(self) -> bool:
    return self.error_type is not None


@dataclass
class GridSearchResult:
  best: SolveResult
  best_index: int
  rows: list[GridRow]

  @property
  def best_config(self) -> SolverConfig:
    return self.rows[self.best_index].config

  def table(self) -> pd.DataFrame:
    return pd.DataFrame(
      [row.model_dump(exclude={"config", "error_traceback"}) for row in self.rows]
    )


def _selection_metric(
  result: SolveResult,
  val: ObservedEntries,
  selection: Selection,
  spec: ClipSpec | None,
  task: Task,
) -> float:
  match selection:
    case "val_rel_rmse_clipped":
      return rel_rmse(result.estimate, val, clip_both=spec is not None, spec=spec)
    case "val_f1":
      if spec is None or spec.scalar_ceiling is None:
        raise MissingThresholdError("f1 selection needs a ceiling")
      return f1_task(result.estimate, val, task, spec.scalar_ceiling).f1


def grid_search(
  obs: ObservedEntries,
  grid: Sequence[SolverConfig],
  selection: Selection,
  val: ObservedEntries,
  seed: int | None = None,
  task: Task = Task.TWO,
  jobs: int = 1,
) -> GridSearchResult:
  """Fit every configuration and keep the best by the selection criterion.

  rel-RMSE is minimized and f1 maximized; ties go to the earlier
  configuration. Failed configurations are recorded in their row. With
  `seed` set it replaces every configuration's own seed.

  Raises:
    ValueError: If the grid is empty.
    ExceptionGroup: If every configuration fails.
  """
  if not grid:
    raise ValueError("grid_search needs at least one configuration")
  configs = [
    cfg if seed is None else cfg.model_copy(update={"seed": seed}) for cfg in grid
  ]
  spec = obs.spec

  def run(index: int) -> tuple[GridRow, SolveResult | None, Exception | None]:
    cfg = configs[index]
    started = time.perf_counter()
    try:
      result = solve(obs, cfg)
      metric = _selection_metric(result, val, selection, spec, task)
    except Exception as e:
      log.warning(
        "grid_config_failed", config=cfg.label(), error=f"{type(e).__name__}: {e}"
      )
      row = GridRow(
        index=index,
        label=cfg.label(),
        config=cfg,
        duration_ms=(time.perf_counter() - started) * 1000,
        error_type=type(e).__name__,
        error_message=str(e),
        error_traceback=traceback.format_exc(),
      )
      return row, None, e
    row = GridRow(
      index=index,
      label=cfg.label(),
      config=cfg,
      metric=metric,
      iterations_used=result.iterations_used,
      converged=result.converged,
      duration_ms=(time.perf_counter() - started) * 1000,
    )
    return row, result, None

  maximize = selection == "val_f1"
  rows: list[GridRow] = []
  errors: list[Exception] = []
  best: tuple[int, float, SolveResult] | None = None
  with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
    for row, result, error in pool.map(run, range(len(configs))):
      rows.append(row)
      if error is not None:
        errors.append(error)
        continue
      assert result is not None and row.metric is not None
      better = best is None or (
        row.metric > best[1] if maximize else row.metric < best[1]
      )
      if better:
        best = (row.index, row.metric, result)

  if best is None:
    raise ExceptionGroup("every grid configuration failed", errors)
  log.info(
    "grid_search_finished",
    selection=selection,
    configs=len(configs),
    failed=len(errors),
    best=rows[best[0]].label,
    metric=best[1],
  )
  return GridSearchResult(best=best[2], best_index=best[0], rows=rows)
