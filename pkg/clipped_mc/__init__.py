"""Low-rank matrix completion from clipped observations."""

from clipped_mc.datagen import generate_synthetic, nmf_factorize
from clipped_mc.datasets import load_filmtrust, load_movielens, prune_empty
from clipped_mc.diagnostics import diagnose, evaluate_pmin
from clipped_mc.evaluation import f1_task, grid_search, rel_rmse
from clipped_mc.models import (
  ClipSpec,
  IndexSet,
  ObservedEntries,
  SolverConfig,
  SolveResult,
  SynthSpec,
  Variant,
)
from clipped_mc.solvers import solve

__all__ = [
  "ClipSpec",
  "IndexSet",
  "ObservedEntries",
  "SolveResult",
  "SolverConfig",
  "SynthSpec",
  "Variant",
  "diagnose",
  "evaluate_pmin",
  "f1_task",
  "generate_synthetic",
  "grid_search",
  "load_filmtrust",
  "load_movielens",
  "nmf_factorize",
  "prune_empty",
  "rel_rmse",
  "solve",
]
