"""DTr-CMC: subgradient descent on the double trace-norm objective.

Minimizes f_cmc(X) + lambda1 ||X||_tr + lambda2 ||Clip(X)||_tr. Each step
linearizes the second penalty through the mask W(X) = 1{X strictly inside the
thresholds}, takes a subgradient step, then soft-thresholds the singular
values by eta_t * lambda1 and drops those at or below `sv_floor`.
"""

import time

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.errors import SolverAbortedError, SvdConvergenceError
from clipped_mc.linalg import clip, norm, skinny_svd
from clipped_mc.losses import f_cmc
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult
from clipped_mc.solvers.common import (
  above_threshold_start,
  relative_change,
  require_ceiling,
)

log = structlog.get_logger(__name__)


def dtr_objective(
  x: NDArray[np.float64], obs: ObservedEntries, lambda1: float, lambda2: float
) -> float:
  spec = require_ceiling(obs)
  value = f_cmc(x, obs).value
  if lambda1:
    value += lambda1 * norm(x, "trace")
  if lambda2:
    value += lambda2 * norm(clip(x, spec), "trace")
  return value


def inside_mask(x: NDArray[np.float64], obs: ObservedEntries) -> NDArray[np.bool_]:
  """W(X): true where X is strictly below the ceiling and above the floor."""
  spec = require_ceiling(obs)
  return (x < spec.upper(x.shape)) & (x > spec.lower(x.shape))


def solve_dtr_cmc(obs: ObservedEntries, cfg: SolverConfig) -> SolveResult:
  """Run T subgradient steps and return the best of the T + 1 iterates.

  Ties in the objective keep the earliest iterate.

  Raises:
    MissingThresholdError: If the observations carry no ceiling.
    SolverAbortedError: If an SVD fails; `partial` holds the best iterate so far.
  """
  spec = require_ceiling(obs)
  started = time.perf_counter()
  x = above_threshold_start(obs)
  trace = [dtr_objective(x, obs, cfg.lambda1, cfg.lambda2)]
  best_x, best_value, best_index = x, trace[0], 0
  previous = x

  for t in range(1, cfg.max_iter + 1):
    eta = cfg.eta0 * cfg.step_decay ** (t - 1)
    try:
      grad = f_cmc(x, obs, with_grad=True).gradient
      assert grad is not None
      direction = grad
      if cfg.lambda2:
        clipped = skinny_svd(clip(x, spec))
        sub = inside_mask(x, obs) * (clipped.u @ clipped.v.T)
        direction = grad + cfg.lambda2 * sub
      moved = skinny_svd(x - eta * direction, rank_tol=0.0)
      sigma = moved.sigma - eta * cfg.lambda1
      keep = sigma > cfg.sv_floor
      previous, x = x, (moved.u[:, keep] * sigma[keep]) @ moved.v[:, keep].T
      value = dtr_objective(x, obs, cfg.lambda1, cfg.lambda2)
    except SvdConvergenceError as e:
      partial = SolveResult(
        estimate=best_x,
        objective_trace=trace,
        iterations_used=t - 1,
        converged=False,
        best_iterate_index=best_index,
      )
      raise SolverAbortedError(f"DTr-CMC aborted at iteration {t}: {e}", partial) from e
    trace.append(value)
    if value < best_value:
      best_x, best_value, best_index = x, value, t

  converged = cfg.max_iter > 0 and relative_change(x, previous) <= cfg.tol
  log.info(
    "dtr_cmc_finished",
    iterations=cfg.max_iter,
    best_index=best_index,
    objective=best_value,
  )
  return SolveResult(
    estimate=best_x,
    objective_trace=trace,
    iterations_used=cfg.max_iter,
    converged=converged,
    best_iterate_index=best_index,
    duration_ms=(time.perf_counter() - started) * 1000,
  )
