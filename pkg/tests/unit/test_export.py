"""Unit tests for run artifacts and plot data."""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from clipped_mc.datagen import GeneratedInstance, generate_synthetic
from clipped_mc.export import emit_plotdata, write_instance, write_json, write_table
from clipped_mc.export.artifacts import read_instance_matrix, trace_frame
from clipped_mc.export.plotdata import rating_counts, sweep_series
from clipped_mc.models import IndexSet, SolveResult, SynthSpec
from clipped_mc.sampling import clipped_indices


@pytest.fixture
def sweep() -> pd.DataFrame:
  """Two ceilings, two seeds, one variant."""
  return pd.DataFrame(
    {
      "C": [5.0, 5.0, 7.0, 7.0],
      "seed": [0, 1, 0, 1],
      "clipping_rate": [0.4, 0.2, 0.1, 0.1],
      "variant": ["Fro-CMC"] * 4,
      "config": ["cfg"] * 4,
      "rel_rmse_all": [0.2, 0.4, 0.1, 0.1],
      "rel_rmse_nonclipped_test": [0.1, 0.1, 0.05, 0.07],
    }
  )


class TestArtifacts:
  """Tests for the artifact writers."""

  def test_table_bytes_are_stable(self, tmp_path: Path) -> None:
    """Test that writing the same frame twice gives identical files."""
    frame = pd.DataFrame({"a": [1, 2], "b": [0.5, 0.25]})
    first = write_table(frame, tmp_path / "one" / "t.csv").read_bytes()
    second = write_table(frame, tmp_path / "two" / "t.csv").read_bytes()
    assert first == second == b"a,b\n1,0.5\n2,0.25\n"

  def test_json_keys_sorted(self, tmp_path: Path) -> None:
    """Test that dict payloads are written with sorted keys."""
    text = write_json({"b": 1, "a": 2}, tmp_path / "x.json").read_text()
    assert text.index('"a"') < text.index('"b"')

  def test_trace_frame_with_residuals(self) -> None:
    """Test that ADMM residuals become extra columns."""
    result = SolveResult(
      estimate=np.zeros((1, 1)),
      objective_trace=[3.0, 2.0],
      residual_trace=[(1.0, 0.5, 1.0), (0.1, 0.05, 2.0)],
    )
    frame = trace_frame(result)
    assert list(frame.columns) == [
      "iteration",
      "objective",
      "primal_residual",
      "dual_residual",
      "rho",
    ]
    assert frame["rho"].tolist() == [1.0, 2.0]

  def test_plain_trace(self) -> None:
    """Test a trace without residuals."""
    result = SolveResult(estimate=np.zeros((1, 1)), objective_trace=[1.0])
    assert list(trace_frame(result).columns) == ["iteration", "objective"]

  def test_instance_files(self, tmp_path: Path) -> None:
    """Test that a generated instance is written with its sidecar and parts."""
    spec = SynthSpec(n1=6, n2=8, r=2, C=10.0, nmf_iters=50)
    instance = generate_synthetic(spec)
    path = write_instance(instance, tmp_path, "inst")
    m, sidecar = read_instance_matrix(path)
    assert np.array_equal(m, instance.m)
    assert sidecar["clipping_rate"] == instance.clipping_rate
    for part in ("train", "val", "test"):
      frame = pd.read_csv(tmp_path / f"inst_{part}.csv")
      assert list(frame.columns) == ["row", "col", "value"]
    assert json.loads((tmp_path / "inst.json").read_text())["shape"] == [6, 8]

  def test_instance_index_sets(
    self, tiny_instance: GeneratedInstance, tmp_path: Path
  ) -> None:
    """Test that the training positions and their clipped subset are written."""
    write_instance(tiny_instance, tmp_path, "inst")
    omega = IndexSet.from_csv(8, 10, (tmp_path / "inst_omega.csv").read_text())
    clipped = IndexSet.from_csv(8, 10, (tmp_path / "inst_clipped.csv").read_text())
    assert omega == tiny_instance.train.index_set()
    assert clipped == clipped_indices(tiny_instance.train)
    assert clipped - omega == IndexSet.empty(8, 10)

  def test_no_clipped_set_without_ceiling(self, tmp_path: Path) -> None:
    """Test that unclipped instances only get the training positions."""
    instance = generate_synthetic(SynthSpec(n1=6, n2=8, r=2, nmf_iters=50))
    write_instance(instance, tmp_path, "inst")
    assert (tmp_path / "inst_omega.csv").exists()
    assert not (tmp_path / "inst_clipped.csv").exists()


class TestPlotData:
  """Tests for plot data derived from run directories."""

  def test_rating_counts(self) -> None:
    """Test the rating histogram."""
    counts = rating_counts(np.array([1.0, 5.0, 5.0, 3.0]))
    assert counts["rating"].tolist() == [1.0, 3.0, 5.0]
    assert counts["count"].tolist() == [1, 1, 2]

  def test_sweep_series_uses_mean_clipping_rate(self, sweep: pd.DataFrame) -> None:
    """Test that x is the seed-averaged clipping rate of each C."""
    out = sweep_series(sweep)
    assert list(out.columns) == ["x", "y", "series"]
    all_rows = out[out["series"] == "Fro-CMC:rel_rmse_all"]
    assert all_rows["x"].tolist() == [pytest.approx(0.1), pytest.approx(0.3)]
    assert all_rows["y"].tolist() == [pytest.approx(0.1), pytest.approx(0.3)]

  def test_emit_is_idempotent(self, tmp_path: Path, sweep: pd.DataFrame) -> None:
    """Test that emitting twice rewrites identical bytes."""
    write_table(sweep, tmp_path / "sweep.csv")
    write_table(
      pd.DataFrame({"iteration": [0, 1], "objective": [2.0, 1.0]}),
      tmp_path / "trace_Fro-CMC_C5_0.csv",
    )
    first = {p.name: p.read_bytes() for p in emit_plotdata(tmp_path)}
    second = {p.name: p.read_bytes() for p in emit_plotdata(tmp_path)}
    assert first == second
    assert set(first) == {"plot_sweep.csv", "plot_convergence.csv"}

  def test_histogram_from_counts(self, tmp_path: Path) -> None:
    """Test the rating histogram written for real-data runs."""
    counts = rating_counts(np.array([1.0, 2.0, 2.0]))
    write_table(counts, tmp_path / "ratings_counts.csv")
    (path,) = emit_plotdata(tmp_path)
    frame = pd.read_csv(path)
    assert frame["y"].tolist() == [1, 2]
    assert set(frame["series"]) == {"ratings"}

  def test_nothing_to_plot(self, tmp_path: Path) -> None:
    """Test that an empty directory raises."""
    with pytest.raises(FileNotFoundError):
      emit_plotdata(tmp_path)
