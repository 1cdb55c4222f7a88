"""Run-directory management, dry-run plans and acceptance gating."""

from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
import structlog

from clipped_mc.execution import pipelines
from clipped_mc.execution.run_config import Pipeline, RunConfig
from clipped_mc.export.artifacts import write_table

log = structlog.get_logger(__name__)

RESOLVED_CONFIG = "config.resolved.json"
SUMMARY_FILE = "summary.csv"


@dataclass
class RunOutcome:
  run_dir: Path
  summary: pd.DataFrame
  failures: list[str] = field(default_factory=list[str])

  @property
  def accepted(self) -> bool:
    return not self.failures


def plan(cfg: RunConfig) -> list[str]:
  """Human-readable description of what `cfg` would compute."""
  lines = [f"pipeline: {cfg.pipeline.value}", f"seeds: {cfg.seeds}"]
  real = cfg.pipeline in (Pipeline.REAL_TASK1, Pipeline.REAL_TASK2)
  if cfg.pipeline is Pipeline.SYNTHETIC_SWEEP:
    lines.append(f"ceilings: {[f'{c:g}' for c in cfg.ceilings]}")
  if real:
    lines.append(f"dataset: {cfg.dataset} (C = {cfg.task_ceiling():g})")
  if cfg.synth is not None:
    s = cfg.synth
    lines.append(f"synthetic: {s.n1}x{s.n2}, rank {s.r}, L = {s.magnitude}, p = {s.p}")
  repeats = len(cfg.seeds) * max(1, len(cfg.ceilings))
  total = 0
  for variant in cfg.variants:
    size = len(pipelines.grid_for(cfg, variant, real_data=real))
    total += size * repeats
    lines.append(f"{variant.value}: {size} configurations")
  if cfg.pipeline is Pipeline.SINGLE_SOLVE and cfg.solver is not None:
    lines.append(f"solver: {cfg.solver.label()}")
    total = 1
  lines.append(f"solves: {total}")
  for check in cfg.acceptance:
    lines.append(
      f"accept: {check.variant} {check.metric} min={check.min} max={check.max}"
    )
  return lines


def check_acceptance(cfg: RunConfig, summary: pd.DataFrame) -> list[str]:
  """Messages for every acceptance check that is violated or has no data."""
  failures: list[str] = []
  for check in cfg.acceptance:
    selected = (summary["variant"] == check.variant) & (
      summary["metric"] == check.metric
    )
    rows = summary[selected]
    if rows.empty:
      failures.append(f"{check.variant}/{check.metric}: no such summary row")
      continue
    for value in rows["mean"]:
      if not check.passes(float(value)):
        failures.append(
          f"{check.variant}/{check.metric} = {float(value):.6g} outside "
          f"[{check.min}, {check.max}]"
        )
  return failures


def run_experiment(cfg: RunConfig, run_dir: Path) -> RunOutcome:
  """Execute `cfg` into `run_dir`, starting with the resolved config.

  The directory holds no timestamps or durations, so repeating a run with
  the same config reproduces every file.
  """
  run_dir.mkdir(parents=True, exist_ok=True)
  (run_dir / RESOLVED_CONFIG).write_text(
    cfg.model_dump_json(indent=2) + "\n", encoding="utf-8"
  )
  log.info("run_started", pipeline=cfg.pipeline.value, run_dir=str(run_dir))
  summary = pipelines.run(cfg, run_dir)
  write_table(summary, run_dir / SUMMARY_FILE)
  failures = check_acceptance(cfg, summary)
  for failure in failures:
    log.warning("acceptance_failed", check=failure)
  log.info("run_finished", pipeline=cfg.pipeline.value, accepted=not failures)
  return RunOutcome(run_dir=run_dir, summary=summary, failures=failures)
