"""Tr-CMC / Tr-MC: accelerated proximal gradient with singular value thresholding.

The smooth part is f_cmc (or f_mc) whose gradient is 1-Lipschitz, so the
default step is 1. The trace-norm weight follows the continuation schedule
lambda_t = max(factor^(t-1), scale) * ||P_Omega(M^c)||_op down to its target.
"""

import math
import time
from collections.abc import Callable

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.errors import SolverAbortedError, SvdConvergenceError
from clipped_mc.linalg import norm, shrink
from clipped_mc.losses import LossValue, f_cmc, f_mc
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult
from clipped_mc.solvers.common import relative_change, require_ceiling

log = structlog.get_logger(__name__)

LossFn = Callable[[NDArray[np.float64], ObservedEntries, bool], LossValue]

# Lipschitz constant of the loss gradient, ||P_Omega||_op^2.
LIPSCHITZ = 1.0


def lambda_schedule(cfg: SolverConfig, op_norm: float, t: int) -> float:
  """Trace-norm weight at iteration t (1-based)."""
  if not cfg.continuation:
    return cfg.lambda_scale * op_norm
  return max(cfg.continuation_factor ** (t - 1), cfg.lambda_scale) * op_norm


def solve_tr(obs: ObservedEntries, cfg: SolverConfig, use_hinge: bool) -> SolveResult:
  """Minimize loss(X) + lambda ||X||_tr from X = 0.

  With `apg_restart` an iterate that raises the objective is rejected and the
  momentum is reset. With `apg_linesearch` the step constant starts at
  `apg_eta` times the previous one and grows by 1/`apg_eta` until the
  quadratic upper bound holds, never exceeding the Lipschitz constant.

  Raises:
    ValueError: If there are no observed entries.
    MissingThresholdError: If `use_hinge` is set and no ceiling is defined.
    SolverAbortedError: If an SVD fails.
  """
  if len(obs) == 0:
    raise ValueError("Tr solver needs at least one observed entry")
  if use_hinge:
    require_ceiling(obs)
  loss: LossFn = f_cmc if use_hinge else f_mc
  started = time.perf_counter()
  op_norm = norm(obs.to_dense(), "operator")
  target = cfg.lambda_scale * op_norm

  x = np.zeros(obs.shape, dtype=np.float64)
  y = x
  momentum = 1.0
  step_const = LIPSCHITZ
  trace: list[float] = []
  converged = False
  iterations = 0

  for t in range(1, cfg.max_iter + 1):
    iterations = t
    lam = lambda_schedule(cfg, op_norm, t)
    try:
      at_y = loss(y, obs, True)
      assert at_y.gradient is not None
      if cfg.apg_linesearch:
        step_const = cfg.apg_eta * step_const
      while True:
        x_new, x_new_tr = shrink(y - at_y.gradient / step_const, lam / step_const)
        f_new = loss(x_new, obs, False).value
        if not cfg.apg_linesearch or step_const >= LIPSCHITZ:
          break
        diff = x_new - y
        bound = (
          at_y.value
          + float(np.vdot(at_y.gradient, diff))
          + 0.5 * step_const * float(np.vdot(diff, diff))
        )
        if f_new <= bound:
          break
        step_const = min(LIPSCHITZ, step_const / cfg.apg_eta)
      objective = f_new + lam * x_new_tr
      if cfg.apg_restart:
        current = loss(x, obs, False).value + lam * norm(x, "trace")
        if objective > current:
          trace.append(current)
          y = x
          momentum = 1.0
          log.debug("apg_restart", iteration=t)
          continue
    except SvdConvergenceError as e:
      partial = SolveResult(
        estimate=x,
        objective_trace=trace,
        iterations_used=t - 1,
        best_iterate_index=max(0, len(trace) - 1),
      )
      raise SolverAbortedError(
        f"Tr solver aborted at iteration {t}: {e}", partial
      ) from e

    next_momentum = (1.0 + math.sqrt(1.0 + 4.0 * momentum * momentum)) / 2.0
    y = x_new + ((momentum - 1.0) / next_momentum) * (x_new - x)
    change = relative_change(x_new, x)
    x, momentum = x_new, next_momentum
    trace.append(objective)
    if lam <= target and change <= cfg.tol:
      converged = True
      break

  log.info(
    "tr_solver_finished",
    hinge=use_hinge,
    iterations=iterations,
    objective=trace[-1] if trace else None,
    converged=converged,
  )
  return SolveResult(
    estimate=x,
    objective_trace=trace,
    iterations_used=iterations,
    converged=converged,
    best_iterate_index=max(0, len(trace) - 1),
    duration_ms=(time.perf_counter() - started) * 1000,
  )
