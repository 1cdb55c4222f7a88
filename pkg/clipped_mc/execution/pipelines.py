"""Experiment pipelines. Each writes its artifacts and returns a summary table.

Summary tables are long-format with at least the columns variant, metric,
mean, se and runs; acceptance checks are evaluated against them.
"""

import math
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray

from clipped_mc.datagen import GeneratedInstance, generate_synthetic
from clipped_mc.datasets import (
  default_path,
  load_filmtrust,
  load_movielens,
  prune_empty,
)
from clipped_mc.diagnostics.bounds import diagnose
from clipped_mc.evaluation import (
  Task,
  baseline_all_positive,
  below_ceiling,
  f1_task,
  grid_search,
  rel_rmse,
  rel_rmse_dense,
  summarize,
  task_labels,
)
from clipped_mc.execution.run_config import Pipeline, RunConfig
from clipped_mc.export.artifacts import (
  write_json,
  write_matrix,
  write_table,
  write_trace,
)
from clipped_mc.export.plotdata import COUNTS_FILE, SWEEP_FILE, rating_counts
from clipped_mc.models.clip_spec import ClipSpec
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult, Variant
from clipped_mc.models.synth import SynthSpec
from clipped_mc.sampling import split_entries
from clipped_mc.solvers.dispatch import solve
from clipped_mc.solvers.presets import preset

log = structlog.get_logger(__name__)

REAL_RATIOS = (0.8, 0.1, 0.1)
BASELINE = "baseline"


def default_preset(variant: Variant, real_data: bool) -> str | None:
  """Grid used for `variant` when the run config names none."""
  if variant is Variant.DTR_CMC:
    return "dtr"
  if variant.is_fro:
    return "fro-real" if real_data else "fro-synthetic"
  if variant is Variant.EXACT:
    return None
  return "tr"


def grid_for(cfg: RunConfig, variant: Variant, real_data: bool) -> list[SolverConfig]:
  if variant in cfg.grids:
    return cfg.grids[variant]
  name = cfg.presets.get(variant) or default_preset(variant, real_data)
  if name is None:
    return [SolverConfig(variant=variant)]
  return preset(name, variant)


def _nonclipped_rmse(
  estimate: NDArray[np.float64], test: ObservedEntries, ceiling: float | None
) -> float:
  kept = test if ceiling is None else below_ceiling(test, ceiling)
  return rel_rmse(estimate, kept) if len(kept) else math.nan


def _trace_name(*parts: object) -> str:
  return "trace_" + "_".join(str(p) for p in parts) + ".csv"


def _grid_table(rows: pd.DataFrame) -> pd.DataFrame:
  return rows.drop(columns=["duration_ms"])


def run_synthetic_sweep(cfg: RunConfig, run_dir: Path) -> pd.DataFrame:
  """rel-RMSE against clipping rate for every (seed, C, variant)."""
  assert cfg.synth is not None
  records: list[dict[str, object]] = []
  for seed in cfg.seeds:
    for c in cfg.ceilings:
      spec = cfg.synth.model_copy(update={"ceiling": c, "seed": seed})
      instance = generate_synthetic(spec)
      for variant in cfg.variants:
        search = grid_search(
          instance.train,
          grid_for(cfg, variant, real_data=False),
          "val_rel_rmse_clipped",
          instance.val,
          seed=seed,
          jobs=cfg.jobs,
        )
        write_table(
          _grid_table(search.table()),
          run_dir / "grids" / f"{variant.value}_C{c:g}_s{seed}.csv",
        )
        write_trace(search.best, run_dir / _trace_name(variant.value, f"C{c:g}", seed))
        records.append(
          {
            "C": c,
            "seed": seed,
            "clipping_rate": instance.clipping_rate,
            "variant": variant.value,
            "config": search.best_config.label(),
            "rel_rmse_all": rel_rmse_dense(search.best.estimate, instance.m),
            "rel_rmse_nonclipped_test": _nonclipped_rmse(
              search.best.estimate, instance.test, c
            ),
          }
        )
  sweep = pd.DataFrame(records)
  write_table(sweep, run_dir / SWEEP_FILE)
  long = sweep.melt(
    id_vars=["C", "seed", "variant"],
    value_vars=["rel_rmse_all", "rel_rmse_nonclipped_test"],
    var_name="metric",
  )
  return summarize(long, ["variant", "metric", "C"], "value")


def load_ratings(cfg: RunConfig) -> ObservedEntries:
  assert cfg.dataset is not None
  path = cfg.dataset_path or default_path(cfg.dataset)
  if cfg.dataset == "movielens-100k":
    return load_movielens(path)
  return load_filmtrust(path, double_ratings=cfg.double_ratings)


def run_real_task(cfg: RunConfig, run_dir: Path) -> pd.DataFrame:
  """f1 of every variant and the all-positive baseline on held-out ratings."""
  task = Task.ONE if cfg.pipeline is Pipeline.REAL_TASK1 else Task.TWO
  c = cfg.task_ceiling()
  ratings = load_ratings(cfg)
  write_table(rating_counts(ratings.values), run_dir / COUNTS_FILE)
  spec = ClipSpec(ceiling=c)

  records: list[dict[str, object]] = []
  for seed in cfg.seeds:
    split = split_entries(ratings, REAL_RATIOS, seed)
    if task is Task.ONE:
      train = split.train.clipped(spec)
    else:
      train = split.train.with_spec(spec)
    train, val, test, _, _ = prune_empty(train, split.val, split.test)
    log.info("task_split", task=task.value, seed=seed, train=len(train), test=len(test))
    base = baseline_all_positive(task_labels(test, task, c))
    records.append({"seed": seed, "variant": BASELINE, "config": ""} | base._asdict())
    for variant in cfg.variants:
      search = grid_search(
        train,
        grid_for(cfg, variant, real_data=True),
        "val_f1",
        val,
        seed=seed,
        task=task,
        jobs=cfg.jobs,
      )
      write_table(
        _grid_table(search.table()),
        run_dir / "grids" / f"{variant.value}_s{seed}.csv",
      )
      score = f1_task(search.best.estimate, test, task, c)
      records.append(
        {"seed": seed, "variant": variant.value, "config": search.best_config.label()}
        | score._asdict()
      )
  results = pd.DataFrame(records)
  write_table(results, run_dir / "results.csv")
  long = results.melt(
    id_vars=["seed", "variant"],
    value_vars=["f1", "precision", "recall"],
    var_name="metric",
  )
  return summarize(long, ["variant", "metric"], "value")


def _single_row(variant: str, metric: str, value: float) -> dict[str, object]:
  return {"variant": variant, "metric": metric, "mean": value, "se": 0.0, "runs": 1}


def _instance(synth: SynthSpec, seed: int) -> GeneratedInstance:
  return generate_synthetic(synth.model_copy(update={"seed": seed}))


def run_diagnose(cfg: RunConfig, run_dir: Path) -> pd.DataFrame:
  """Recovery diagnostics of the generated ground truth at the first seed."""
  assert cfg.synth is not None and cfg.synth.ceiling is not None
  seed = cfg.seeds[0]
  instance = _instance(cfg.synth, seed)
  report = diagnose(
    instance.m,
    ClipSpec(ceiling=cfg.synth.ceiling),
    beta=cfg.diagnose.beta,
    samples=cfg.diagnose.samples,
    ascent_steps=cfg.diagnose.ascent_steps,
    seed=seed,
  )
  write_json(report, run_dir / "diagnostics.json")
  values = {
    "mu0": report.mu0,
    "mu1": report.mu1,
    "rho_fro": report.rho_fro,
    "rho_inf": report.rho_inf,
    "rho_op": report.rho_op,
    "clipping_rate": instance.clipping_rate,
  }
  if report.nu_b is not None:
    values["nu_b"] = report.nu_b
  if report.pmin is not None:
    values["p_min"] = report.pmin.p_min
  return pd.DataFrame([_single_row("diagnostics", k, v) for k, v in values.items()])


def run_single_solve(cfg: RunConfig, run_dir: Path) -> pd.DataFrame:
  """One solver configuration on one generated instance."""
  assert cfg.synth is not None and cfg.solver is not None
  instance = _instance(cfg.synth, cfg.seeds[0])
  result: SolveResult = solve(instance.train, cfg.solver)
  write_matrix(result.estimate, run_dir / "estimate.bin")
  write_trace(result, run_dir / _trace_name(cfg.solver.variant.value))
  name = cfg.solver.variant.value
  rows = [
    _single_row(name, "rel_rmse_all", rel_rmse_dense(result.estimate, instance.m)),
    _single_row(
      name,
      "rel_rmse_nonclipped_test",
      _nonclipped_rmse(result.estimate, instance.test, cfg.synth.ceiling),
    ),
    _single_row(name, "iterations", float(result.iterations_used)),
  ]
  return pd.DataFrame(rows)


def run(cfg: RunConfig, run_dir: Path) -> pd.DataFrame:
  match cfg.pipeline:
    case Pipeline.SYNTHETIC_SWEEP:
      return run_synthetic_sweep(cfg, run_dir)
    case Pipeline.REAL_TASK1 | Pipeline.REAL_TASK2:
      return run_real_task(cfg, run_dir)
    case Pipeline.DIAGNOSE:
      return run_diagnose(cfg, run_dir)
    case Pipeline.SINGLE_SOLVE:
      return run_single_solve(cfg, run_dir)
