"""Experiment configuration, pipelines and run directories."""

from clipped_mc.execution.run_config import (
  AcceptanceCheck,
  DiagnoseOptions,
  Pipeline,
  RunConfig,
)
from clipped_mc.execution.runner import RunOutcome, plan, run_experiment

__all__ = [
  "AcceptanceCheck",
  "DiagnoseOptions",
  "Pipeline",
  "RunConfig",
  "RunOutcome",
  "plan",
  "run_experiment",
]
