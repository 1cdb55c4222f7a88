"""Fro-CMC / Fro-MC: approximate alternating least squares on X = P Q^T.

Each half-step solves one ridge system per column (q-update) or per row
(p-update). A censored entry enters the sums only while the current
prediction is on the wrong side of its threshold: below the ceiling for
entries at the ceiling, above the floor for entries at the floor. Without
the hinge every weight is 1 and the iteration is classic ALS.
"""

import math
import time

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.errors import SingularSystemError
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult
from clipped_mc.rng import make_rng
from clipped_mc.sampling import ceiling_hits, floor_hits
from clipped_mc.solvers.common import relative_change, start_level

log = structlog.get_logger(__name__)


def group_entries(index: NDArray[np.intp], count: int) -> list[NDArray[np.intp]]:
  """Entry positions grouped by `index` value, for values 0..count-1."""
  order = np.argsort(index, kind="stable")
  splits = np.searchsorted(index[order], np.arange(1, count))
  return np.split(order, splits)


def ridge_rows(
  fixed: NDArray[np.float64],
  groups: list[NDArray[np.intp]],
  partner: NDArray[np.intp],
  values: NDArray[np.float64],
  weights: NDArray[np.float64],
  lam: float,
  previous: NDArray[np.float64],
  axis: str,
) -> NDArray[np.float64]:
  """Solve (sum w f f^T + lam I) x = sum w m f for every group.

  `partner[e]` is the row of `fixed` paired with entry e. Groups without
  entries (or whose weights are all zero at lam = 0) keep `previous`.

  Raises:
    SingularSystemError: If a system is singular; names the axis and index.
  """
  k = fixed.shape[1]
  out = previous.copy()
  ridge = lam * np.eye(k)
  for g, entries in enumerate(groups):
    if entries.size == 0:
      continue
    w = weights[entries]
    if lam == 0.0 and not w.any():
      continue
    f = fixed[partner[entries]]
    fw = f * w[:, None]
    a = fw.T @ f + ridge
    b = fw.T @ values[entries]
    if lam == 0.0 and np.linalg.matrix_rank(a) < k:
      raise SingularSystemError(axis, g)
    try:
      out[g] = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as e:
      raise SingularSystemError(axis, g) from e
  return out


def hinge_weights(
  pred: NDArray[np.float64],
  obs: ObservedEntries,
  at_ceiling: NDArray[np.bool_],
  at_floor: NDArray[np.bool_],
) -> NDArray[np.float64]:
  """z per entry: 1 off the censored set, 1{prediction on the wrong side} on it."""
  z = np.ones(len(obs), dtype=np.float64)
  z[at_ceiling] = (obs.values[at_ceiling] > pred[at_ceiling]).astype(np.float64)
  z[at_floor] = (obs.values[at_floor] < pred[at_floor]).astype(np.float64)
  return z


def _predict(
  p: NDArray[np.float64], q: NDArray[np.float64], obs: ObservedEntries
) -> NDArray[np.float64]:
  return np.einsum("ek,ek->e", p[obs.row_idx], q[obs.col_idx])


def initial_factors(
  obs: ObservedEntries, cfg: SolverConfig
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
  """Factors whose product starts above the threshold.

  The default makes every entry of P Q^T equal C + 1; `literal_init` uses
  (C + 1)/sqrt(k) for both factors instead. A small seeded multiplicative
  jitter separates the k columns, which stay identical otherwise.
  """
  assert cfg.rank_k is not None
  k = cfg.rank_k
  level = start_level(obs) + 1.0
  if cfg.literal_init:
    p_base = q_base = level / math.sqrt(k)
  else:
    q_base = math.sqrt(abs(level) / k)
    p_base = math.copysign(q_base, level)
  rng = make_rng(cfg.seed)
  n1, n2 = obs.shape
  p = p_base * (1.0 + cfg.init_jitter * rng.uniform(-1.0, 1.0, (n1, k)))
  q = q_base * (1.0 + cfg.init_jitter * rng.uniform(-1.0, 1.0, (n2, k)))
  return p, q


def fro_objective(
  p: NDArray[np.float64],
  q: NDArray[np.float64],
  obs: ObservedEntries,
  lam: float,
  at_ceiling: NDArray[np.bool_],
  at_floor: NDArray[np.bool_],
) -> float:
  """Half squared (hinge) loss plus lam/2 (||P||_F^2 + ||Q||_F^2)."""
  residual = _predict(p, q, obs) - obs.values
  residual = np.where(at_ceiling, np.minimum(residual, 0.0), residual)
  residual = np.where(at_floor, np.maximum(residual, 0.0), residual)
  loss = 0.5 * math.fsum((residual * residual).tolist())
  return loss + 0.5 * lam * (float(np.vdot(p, p)) + float(np.vdot(q, q)))


def solve_fro(obs: ObservedEntries, cfg: SolverConfig, use_hinge: bool) -> SolveResult:
  """Alternate q- and p-updates for up to T rounds and return P Q^T.

  The p-update weights use the new Q. With `p_update="literal"` its sums
  still use the previous Q; `"consistent"` uses the new Q throughout.

  Raises:
    ValueError: If `rank_k` is missing.
    SingularSystemError: If lambda = 0 leaves a ridge system singular.
  """
  if cfg.rank_k is None:
    raise ValueError("Fro solver requires rank_k")
  started = time.perf_counter()
  lam = cfg.lambda1
  n1, n2 = obs.shape
  if use_hinge:
    at_ceiling, at_floor = ceiling_hits(obs), floor_hits(obs)
  else:
    at_ceiling = at_floor = np.zeros(len(obs), dtype=bool)
  censored = at_ceiling | at_floor
  by_col = group_entries(obs.col_idx, n2)
  by_row = group_entries(obs.row_idx, n1)

  p, q = initial_factors(obs, cfg)
  trace = [fro_objective(p, q, obs, lam, at_ceiling, at_floor)]
  x = p @ q.T
  converged = False
  iterations = 0

  for t in range(1, cfg.max_iter + 1):
    iterations = t
    weights = np.ones(len(obs))
    if censored.any():
      weights = hinge_weights(_predict(p, q, obs), obs, at_ceiling, at_floor)
    q_new = ridge_rows(p, by_col, obs.row_idx, obs.values, weights, lam, q, "column")

    if censored.any():
      weights = hinge_weights(_predict(p, q_new, obs), obs, at_ceiling, at_floor)
    q_sums = q if cfg.p_update == "literal" else q_new
    p = ridge_rows(q_sums, by_row, obs.col_idx, obs.values, weights, lam, p, "row")
    q = q_new

    trace.append(fro_objective(p, q, obs, lam, at_ceiling, at_floor))
    x_new = p @ q.T
    change = relative_change(x_new, x)
    x = x_new
    if change <= cfg.tol:
      converged = True
      break

  log.info(
    "fro_solver_finished",
    hinge=use_hinge,
    rank=cfg.rank_k,
    iterations=iterations,
    objective=trace[-1],
    converged=converged,
  )
  return SolveResult(
    estimate=x,
    objective_trace=trace,
    iterations_used=iterations,
    converged=converged,
    best_iterate_index=len(trace) - 1,
    duration_ms=(time.perf_counter() - started) * 1000,
  )
