"""Long-format (x, y, series) CSVs for plotting, derived from a run directory."""

from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray

from clipped_mc.export.artifacts import write_table

log = structlog.get_logger(__name__)

SWEEP_FILE = "sweep.csv"
COUNTS_FILE = "ratings_counts.csv"
TRACE_GLOB = "trace_*.csv"

_COLUMNS = ["x", "y", "series"]


def rating_counts(values: NDArray[np.float64]) -> pd.DataFrame:
  """Histogram of observed ratings, one row per distinct value."""
  ratings, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
  return pd.DataFrame({"rating": ratings, "count": counts})


def histogram_series(counts: pd.DataFrame, series: str) -> pd.DataFrame:
  return pd.DataFrame(
    {"x": counts["rating"], "y": counts["count"], "series": series}, columns=_COLUMNS
  )


def sweep_series(sweep: pd.DataFrame) -> pd.DataFrame:
  """Seed-averaged rel-RMSE against the clipping rate, per variant and metric."""
  metrics = [c for c in ("rel_rmse_all", "rel_rmse_nonclipped_test") if c in sweep]
  long = sweep.melt(
    id_vars=["C", "variant"], value_vars=metrics, var_name="metric", value_name="y"
  )
  rates = sweep.groupby("C", sort=True)["clipping_rate"].mean()
  means = long.groupby(["variant", "metric", "C"], sort=True)["y"].mean().reset_index()
  means["x"] = means["C"].map(rates)
  means["series"] = means["variant"] + ":" + means["metric"]
  return means.sort_values(["series", "x"], kind="stable")[_COLUMNS].reset_index(
    drop=True
  )


def convergence_series(traces: dict[str, pd.DataFrame]) -> pd.DataFrame:
  frames = [
    pd.DataFrame(
      {"x": trace["iteration"], "y": trace["objective"], "series": name},
      columns=_COLUMNS,
    )
    for name, trace in sorted(traces.items())
  ]
  return pd.concat(frames, ignore_index=True)


def emit_plotdata(run_dir: Path) -> list[Path]:
  """Write plot_*.csv files for every artifact kind present in `run_dir`.

  Re-running rewrites identical bytes.

  Raises:
    FileNotFoundError: If the directory has nothing to plot.
  """
  written: list[Path] = []
  counts_path = run_dir / COUNTS_FILE
  if counts_path.exists():
    counts = pd.read_csv(counts_path)
    written.append(
      write_table(histogram_series(counts, "ratings"), run_dir / "plot_histogram.csv")
    )
  sweep_path = run_dir / SWEEP_FILE
  if sweep_path.exists():
    written.append(
      write_table(sweep_series(pd.read_csv(sweep_path)), run_dir / "plot_sweep.csv")
    )
  trace_paths = sorted(run_dir.glob(TRACE_GLOB))
  if trace_paths:
    traces = {p.stem.removeprefix("trace_"): pd.read_csv(p) for p in trace_paths}
    written.append(
      write_table(convergence_series(traces), run_dir / "plot_convergence.csv")
    )
  if not written:
    raise FileNotFoundError(f"no plottable artifacts in {run_dir}")
  log.info("plotdata_written", run_dir=str(run_dir), files=[p.name for p in written])
  return written
