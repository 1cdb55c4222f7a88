"""Unit tests for metrics, f1 scoring and grid search."""

import numpy as np
import pandas as pd
import pytest

from clipped_mc.errors import MissingThresholdError
from clipped_mc.evaluation import (
  Task,
  baseline_all_positive,
  below_ceiling,
  f1_task,
  grid_search,
  mean_se,
  rel_rmse,
  rel_rmse_dense,
  summarize,
  task_labels,
)
from clipped_mc.models import ClipSpec, IndexSet, ObservedEntries, SolverConfig, Variant
from clipped_mc.rng import make_rng
from clipped_mc.solvers import preset


class TestRelRmse:
  """Tests for relative RMSE."""

  def test_known_value(self) -> None:
    """Test a hand-computed error."""
    truth = ObservedEntries.from_triples(1, 2, [(0, 0, 3.0), (0, 1, 4.0)])
    estimate = np.array([[3.0, 4.5]])
    assert rel_rmse(estimate, truth) == pytest.approx(0.5 / 5.0)

  def test_exact_estimate(self) -> None:
    """Test that the truth scores zero."""
    m = np.arange(1.0, 7.0).reshape(2, 3)
    assert rel_rmse_dense(m, m) == 0.0

  def test_clip_both(self) -> None:
    """Test that validation clips estimate and truth alike."""
    truth = ObservedEntries.from_triples(1, 2, [(0, 0, 3.0), (0, 1, 5.0)])
    estimate = np.array([[3.0, 9.0]])
    spec = ClipSpec(ceiling=5.0)
    assert rel_rmse(estimate, truth, clip_both=True, spec=spec) == 0.0
    assert rel_rmse(estimate, truth) > 0.0

  def test_clip_both_without_threshold(self) -> None:
    """Test that clipping needs a threshold."""
    truth = ObservedEntries.from_triples(1, 1, [(0, 0, 1.0)])
    with pytest.raises(MissingThresholdError):
      rel_rmse(np.ones((1, 1)), truth, clip_both=True)

  def test_degenerate_truth(self) -> None:
    """Test empty and all-zero truths."""
    with pytest.raises(ValueError):
      rel_rmse(np.ones((1, 1)), ObservedEntries.from_triples(1, 1, []))
    with pytest.raises(ValueError):
      rel_rmse(np.ones((1, 1)), ObservedEntries.from_triples(1, 1, [(0, 0, 0.0)]))

  def test_restricted_to_index_set(self) -> None:
    """Test the dense helper on a subset."""
    m = np.array([[1.0, 2.0]])
    estimate = np.array([[1.0, 100.0]])
    where = IndexSet.from_pairs(1, 2, [(0, 0)])
    assert rel_rmse_dense(estimate, m, where) == 0.0

  def test_below_ceiling(self) -> None:
    """Test selection of entries that were not clipped."""
    truth = ObservedEntries.from_triples(1, 3, [(0, 0, 1.0), (0, 1, 5.0), (0, 2, 7.0)])
    assert below_ceiling(truth, 5.0).values.tolist() == [1.0, 5.0]


class TestF1:
  """Tests for the exceedance f1 scores."""

  def test_task_one(self) -> None:
    """Test predictions above C + 0.5 against labels above C."""
    test = ObservedEntries.from_triples(
      1, 4, [(0, 0, 3.0), (0, 1, 5.0), (0, 2, 6.0), (0, 3, 2.0)]
    )
    estimate = np.array([[3.0, 5.6, 4.0, 2.0]])
    score = f1_task(estimate, test, Task.ONE, 4.0)
    assert score.precision == pytest.approx(1.0)
    assert score.recall == pytest.approx(0.5)
    assert score.f1 == pytest.approx(2 / 3)

  def test_task_two_threshold_is_strict(self) -> None:
    """Test that C - 0.5 itself is predicted negative."""
    test = ObservedEntries.from_triples(1, 2, [(0, 0, 5.0), (0, 1, 5.0)])
    estimate = np.array([[4.5, 4.51]])
    score = f1_task(estimate, test, Task.TWO, 5.0)
    assert score.recall == pytest.approx(0.5)
    assert task_labels(test, Task.TWO, 5.0).tolist() == [True, True]

  def test_no_positives(self) -> None:
    """Test that f1 is 0 when precision and recall vanish."""
    test = ObservedEntries.from_triples(1, 1, [(0, 0, 1.0)])
    assert f1_task(np.zeros((1, 1)), test, Task.ONE, 4.0).f1 == 0.0

  def test_empty_test_set(self) -> None:
    """Test that scoring an empty set raises."""
    with pytest.raises(ValueError):
      f1_task(np.zeros((1, 1)), ObservedEntries.from_triples(1, 1, []), Task.ONE, 4.0)

  @pytest.mark.parametrize("rate", [0.1, 0.25, 0.5, 0.9])
  def test_all_positive_baseline(self, rate: float) -> None:
    """Test that the baseline f1 equals 2q / (1 + q)."""
    labels = np.zeros(100, dtype=bool)
    labels[: int(rate * 100)] = True
    score = baseline_all_positive(labels)
    assert score.recall == 1.0
    assert score.f1 == pytest.approx(2 * rate / (1 + rate))


class TestAggregation:
  """Tests for seed aggregation."""

  def test_mean_se(self) -> None:
    """Test mean and standard error with ddof = 1."""
    mean, se = mean_se([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert se == pytest.approx(1.0 / np.sqrt(3.0))

  def test_single_value(self) -> None:
    """Test that one run has zero standard error."""
    assert mean_se([4.0]) == (4.0, 0.0)

  def test_empty(self) -> None:
    """Test that no runs raises."""
    with pytest.raises(ValueError):
      mean_se([])

  def test_summarize(self) -> None:
    """Test the grouped summary table."""
    frame = pd.DataFrame({"variant": ["a", "a", "b"], "value": [1.0, 3.0, 5.0]})
    out = summarize(frame, ["variant"], "value")
    assert out["mean"].tolist() == [2.0, 5.0]
    assert out["runs"].tolist() == [2, 1]
    assert out["se"].tolist() == [pytest.approx(1.0), 0.0]


Split = tuple[ObservedEntries, ObservedEntries]


@pytest.fixture
def split() -> Split:
  """Clipped training entries and validation entries of a rank-1 matrix."""
  rng = make_rng(0)
  m = np.outer(rng.uniform(1, 2, 6), rng.uniform(1, 2, 5))
  mask = rng.random((6, 5)) < 0.7
  spec = ClipSpec(ceiling=float(np.quantile(m, 0.85)))
  train = ObservedEntries.from_dense(m, IndexSet(6, 5, mask)).clipped(spec)
  val = ObservedEntries.from_dense(m, IndexSet(6, 5, ~mask))
  return train, val


class TestGridSearch:
  """Tests for grid_search."""

  def test_empty_grid(self, split: Split) -> None:
    """Test that an empty grid raises."""
    train, val = split
    with pytest.raises(ValueError):
      grid_search(train, [], "val_rel_rmse_clipped", val)

  def test_ties_keep_first(self, split: Split) -> None:
    """Test that identical configurations resolve to the earliest."""
    train, val = split
    cfg = SolverConfig(variant=Variant.TR_CMC, max_iter=20)
    result = grid_search(train, [cfg, cfg, cfg], "val_rel_rmse_clipped", val)
    assert result.best_index == 0
    assert len(result.rows) == 3

  def test_selects_minimum(self, split: Split) -> None:
    """Test that the chosen row has the smallest validation error."""
    train, val = split
    grid = preset("tr", Variant.TR_MC)
    result = grid_search(train, grid, "val_rel_rmse_clipped", val, jobs=2)
    metrics = [row.metric for row in result.rows]
    best = min(m for m in metrics if m is not None)
    assert result.rows[result.best_index].metric == best
    assert result.best_config == grid[result.best_index]

  def test_failures_are_recorded(self, split: Split) -> None:
    """Test that a failing configuration becomes an error row."""
    train, val = split
    failing = SolverConfig(variant=Variant.FRO_MC, rank_k=10, lambda1=0.0)
    working = SolverConfig(variant=Variant.TR_MC, max_iter=10)
    result = grid_search(train, [failing, working], "val_rel_rmse_clipped", val)
    assert result.rows[0].failed
    assert result.rows[0].error_type == "SingularSystemError"
    assert result.best_index == 1
    assert "error_traceback" not in result.table().columns

  def test_every_failure_raises_group(self, split: Split) -> None:
    """Test that a grid where nothing works raises an ExceptionGroup."""
    train, val = split
    failing = SolverConfig(variant=Variant.FRO_MC, rank_k=10, lambda1=0.0)
    with pytest.raises(ExceptionGroup):
      grid_search(train, [failing], "val_rel_rmse_clipped", val)

  def test_seed_override(self, split: Split) -> None:
    """Test that a grid seed replaces each configuration's seed."""
    train, val = split
    cfg = SolverConfig(variant=Variant.FRO_CMC, rank_k=1, lambda1=0.1, max_iter=5)
    result = grid_search(train, [cfg], "val_rel_rmse_clipped", val, seed=7)
    assert result.best_config.seed == 7
