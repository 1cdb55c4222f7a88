"""Trace-norm minimization under the clipped-observation constraints.

    minimize ||X||_tr
    subject to X_ij = M^c_ij  on observed entries strictly inside the thresholds
               X_ij >= M^c_ij on entries at the ceiling
               X_ij <= M^c_ij on entries at the floor

solved by ADMM on the split X = Z with Z confined to the constraint set.
"""

import time
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.errors import (
  InfeasibleObservationError,
  SizeLimitError,
  SolverAbortedError,
  SvdConvergenceError,
)
from clipped_mc.linalg import shrink
from clipped_mc.models.observations import IndexSet, ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult
from clipped_mc.sampling import ceiling_hits, floor_hits
from clipped_mc.solvers.common import require_ceiling

log = structlog.get_logger(__name__)

MAX_ENTRIES = 65_536
BALANCE_RATIO = 10.0


@dataclass(frozen=True)
class ConstraintSet:
  """Dense description of the feasible set."""

  equal: NDArray[np.bool_]
  at_least: NDArray[np.bool_]
  at_most: NDArray[np.bool_]
  target: NDArray[np.float64]

  def project(self, m: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.where(self.equal, self.target, m)
    out = np.where(self.at_least, np.maximum(out, self.target), out)
    return np.where(self.at_most, np.minimum(out, self.target), out)

  def violation(self, m: NDArray[np.float64]) -> float:
    """Largest absolute constraint violation of `m`."""
    gap = np.zeros_like(m)
    gap = np.where(self.equal, np.abs(m - self.target), gap)
    gap = np.where(self.at_least, np.maximum(self.target - m, 0.0), gap)
    gap = np.where(self.at_most, np.maximum(m - self.target, 0.0), gap)
    return float(gap.max()) if gap.size else 0.0


def build_constraints(
  obs: ObservedEntries, clipped: IndexSet | None = None
) -> ConstraintSet:
  """Constraint masks from the observations.

  Raises:
    InfeasibleObservationError: If an entry of `clipped` is unobserved or not
      at its ceiling.
  """
  at_ceiling = ceiling_hits(obs)
  at_floor = floor_hits(obs)
  if clipped is not None:
    claimed = clipped.mask[obs.row_idx, obs.col_idx]
    bad = claimed & ~at_ceiling
    if bad.any():
      e = int(np.flatnonzero(bad)[0])
      raise InfeasibleObservationError(
        f"entry ({obs.row_idx[e]}, {obs.col_idx[e]}) is claimed clipped but its "
        f"value {obs.values[e]} is not at the ceiling"
      )
    if int(claimed.sum()) != len(clipped):
      raise InfeasibleObservationError("a claimed clipped entry is not observed")
  shape = obs.shape

  def scatter(flags: NDArray[np.bool_]) -> NDArray[np.bool_]:
    mask = np.zeros(shape, dtype=bool)
    mask[obs.row_idx[flags], obs.col_idx[flags]] = True
    return mask

  return ConstraintSet(
    equal=scatter(~(at_ceiling | at_floor)),
    at_least=scatter(at_ceiling),
    at_most=scatter(at_floor),
    target=obs.to_dense(),
  )


def solve_exact_tracenorm(
  obs: ObservedEntries, cfg: SolverConfig, clipped: IndexSet | None = None
) -> SolveResult:
  """ADMM with residual balancing; returns the feasible iterate Z.

  Stops once the primal residual ||X - Z||_F and the dual residual
  rho ||Z - Z_prev||_F are both below tol * max(1, ||X||_F, ||Z||_F).
  When T runs out first the result has converged=False and the residual
  trace shows where it stopped.

  Raises:
    SizeLimitError: If n1 * n2 exceeds 65536.
    InfeasibleObservationError: See `build_constraints`.
    SolverAbortedError: If an SVD fails.
  """
  require_ceiling(obs)
  n1, n2 = obs.shape
  if n1 * n2 > MAX_ENTRIES:
    raise SizeLimitError(
      f"exact solver is limited to {MAX_ENTRIES} entries, got {n1}x{n2}"
    )
  started = time.perf_counter()
  constraints = build_constraints(obs, clipped)
  rho = cfg.admm_rho
  z = constraints.project(np.zeros(obs.shape))
  u = np.zeros(obs.shape)
  trace: list[float] = []
  residuals: list[tuple[float, float, float]] = []
  converged = False
  iterations = 0

  for t in range(1, cfg.max_iter + 1):
    iterations = t
    try:
      x, x_tr = shrink(z - u, 1.0 / rho)
    except SvdConvergenceError as e:
      partial = SolveResult(
        estimate=z,
        objective_trace=trace,
        iterations_used=t - 1,
        residual_trace=residuals,
      )
      raise SolverAbortedError(f"ADMM aborted at iteration {t}: {e}", partial) from e
    z_prev = z
    z = constraints.project(x + u)
    u = u + x - z
    primal = float(np.linalg.norm(x - z))
    dual = rho * float(np.linalg.norm(z - z_prev))
    trace.append(x_tr)
    residuals.append((primal, dual, rho))
    scale = max(1.0, float(np.linalg.norm(x)), float(np.linalg.norm(z)))
    if primal <= cfg.tol * scale and dual <= cfg.tol * scale:
      converged = True
      break
    if primal > BALANCE_RATIO * dual:
      rho *= 2.0
      u /= 2.0
      log.debug("admm_rho_increased", iteration=t, rho=rho)
    elif dual > BALANCE_RATIO * primal:
      rho /= 2.0
      u *= 2.0
      log.debug("admm_rho_decreased", iteration=t, rho=rho)

  log.info(
    "exact_solver_finished",
    iterations=iterations,
    converged=converged,
    primal=residuals[-1][0] if residuals else None,
    dual=residuals[-1][1] if residuals else None,
  )
  return SolveResult(
    estimate=z,
    objective_trace=trace,
    iterations_used=iterations,
    converged=converged,
    best_iterate_index=max(0, len(trace) - 1),
    residual_trace=residuals,
    duration_ms=(time.perf_counter() - started) * 1000,
  )
