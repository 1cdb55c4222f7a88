"""Completion solvers for clipped observations."""

from clipped_mc.solvers.als import solve_fro
from clipped_mc.solvers.apg import solve_tr
from clipped_mc.solvers.dispatch import solve
from clipped_mc.solvers.dtr import solve_dtr_cmc
from clipped_mc.solvers.exact import solve_exact_tracenorm
from clipped_mc.solvers.presets import PRESETS, preset

__all__ = [
  "PRESETS",
  "preset",
  "solve",
  "solve_dtr_cmc",
  "solve_exact_tracenorm",
  "solve_fro",
  "solve_tr",
]
