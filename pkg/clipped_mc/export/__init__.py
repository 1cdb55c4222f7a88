"""Artifact and plot-data export."""

from clipped_mc.export.artifacts import (
  write_index_set,
  write_instance,
  write_json,
  write_matrix,
  write_table,
  write_trace,
)
from clipped_mc.export.plotdata import emit_plotdata, rating_counts

__all__ = [
  "emit_plotdata",
  "rating_counts",
  "write_index_set",
  "write_instance",
  "write_json",
  "write_matrix",
  "write_table",
  "write_trace",
]
