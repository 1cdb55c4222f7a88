"""Variant dispatch."""

import structlog

from clipped_mc.models.observations import ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult, Variant
from clipped_mc.sampling import drop_clipped
from clipped_mc.solvers.als import solve_fro
from clipped_mc.solvers.apg import solve_tr
from clipped_mc.solvers.dtr import solve_dtr_cmc
from clipped_mc.solvers.exact import solve_exact_tracenorm

log = structlog.get_logger(__name__)


def solve(obs: ObservedEntries, cfg: SolverConfig) -> SolveResult:
  """Fit `cfg.variant` to `obs`.

  The "i" variants discard censored training entries and then run the
  plain MC solver.
  """
  log.debug("solve_started", config=cfg.label(), entries=len(obs))
  match cfg.variant:
    case Variant.DTR_CMC:
      result = solve_dtr_cmc(obs, cfg)
    case Variant.TR_CMC:
      result = solve_tr(obs, cfg, use_hinge=True)
    case Variant.TR_MC:
      result = solve_tr(obs, cfg, use_hinge=False)
    case Variant.TR_MCI:
      result = solve_tr(drop_clipped(obs), cfg, use_hinge=False)
    case Variant.FRO_CMC:
      result = solve_fro(obs, cfg, use_hinge=True)
    case Variant.FRO_MC:
      result = solve_fro(obs, cfg, use_hinge=False)
    case Variant.FRO_MCI:
      result = solve_fro(drop_clipped(obs), cfg, use_hinge=False)
    case Variant.EXACT:
      result = solve_exact_tracenorm(obs, cfg)
  result.variant = cfg.variant.value
  return result
