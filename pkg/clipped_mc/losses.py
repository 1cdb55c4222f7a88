"""Squared and squared-hinge losses over observed entries."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from clipped_mc.errors import MissingThresholdError, ShapeMismatchError
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.sampling import ceiling_hits, floor_hits


@dataclass(frozen=True)
class LossValue:
  """Loss value and, when requested, its gradient (zero off the observed set)."""

  value: float
  gradient: NDArray[np.float64] | None = None


def _check(x: NDArray[np.float64], obs: ObservedEntries) -> None:
  if x.shape != obs.shape:
    raise ShapeMismatchError(
      f"matrix {x.shape} does not match observations {obs.shape}"
    )


def _half_sq(residual: NDArray[np.float64]) -> float:
  return 0.5 * math.fsum((residual * residual).tolist())


def _gradient(
  obs: ObservedEntries, residual: NDArray[np.float64]
) -> NDArray[np.float64]:
  grad = np.zeros(obs.shape, dtype=np.float64)
  grad[obs.row_idx, obs.col_idx] = residual
  return grad


def f_mc(
  x: NDArray[np.float64], obs: ObservedEntries, with_grad: bool = False
) -> LossValue:
  """1/2 ||P_Omega(M^c - X)||_F^2; gradient P_Omega(X - M^c)."""
  _check(x, obs)
  residual = obs.values_at(x) - obs.values
  grad = _gradient(obs, residual) if with_grad else None
  return LossValue(_half_sq(residual), grad)


def hinge_residual(
  x_obs: NDArray[np.float64], obs: ObservedEntries
) -> NDArray[np.float64]:
  """Per-entry X - M^c with the censored side switched off.

  Entries at the ceiling keep only under-estimates, entries at the floor only
  over-estimates. The kink itself contributes zero.
  """
  residual = x_obs - obs.values
  residual = np.where(ceiling_hits(obs), np.minimum(residual, 0.0), residual)
  return np.where(floor_hits(obs), np.maximum(residual, 0.0), residual)


def f_cmc(
  x: NDArray[np.float64], obs: ObservedEntries, with_grad: bool = False
) -> LossValue:
  """Squared loss off the censored set plus a squared hinge on it.

  Raises:
    MissingThresholdError: If the observations carry no ceiling.
  """
  _check(x, obs)
  if obs.spec is None or not obs.spec.has_ceiling:
    raise MissingThresholdError("f_cmc needs a ceiling threshold")
  residual = hinge_residual(obs.values_at(x), obs)
  grad = _gradient(obs, residual) if with_grad else None
  return LossValue(_half_sq(residual), grad)


def _clip_observed(
  x_obs: NDArray[np.float64], obs: ObservedEntries
) -> NDArray[np.float64]:
  assert obs.spec is not None
  out = x_obs
  if obs.spec.has_ceiling:
    out = np.minimum(out, obs.spec.upper_at(obs.row_idx, obs.col_idx))
  if obs.spec.has_floor:
    out = np.maximum(out, obs.spec.lower_at(obs.row_idx, obs.col_idx))
  return out


def clipped_sq_loss(x: NDArray[np.float64], obs: ObservedEntries) -> float:
  """sum over Omega of (M^c - Clip(X))^2."""
  _check(x, obs)
  if obs.spec is None or not obs.spec.has_ceiling:
    raise MissingThresholdError("clipped_sq_loss needs a ceiling threshold")
  diff = obs.values - _clip_observed(obs.values_at(x), obs)
  return math.fsum((diff * diff).tolist())


def dominance_gap(x: NDArray[np.float64], obs: ObservedEntries) -> float:
  """Closed form of 2 f_cmc(X) - clipped_sq_loss(X).

  Sums (T - X)(2 M^c - T - X) with T = Clip(X) over entries where clipping
  moves X, except where the hinge is already inactive on a censored entry.
  """
  _check(x, obs)
  if obs.spec is None or not obs.spec.has_ceiling:
    raise MissingThresholdError("dominance_gap needs a ceiling threshold")
  x_obs = obs.values_at(x)
  t = _clip_observed(x_obs, obs)
  upper = obs.spec.upper_at(obs.row_idx, obs.col_idx)
  lower = obs.spec.lower_at(obs.row_idx, obs.col_idx)
  inactive = (ceiling_hits(obs) & (x_obs >= upper)) | (
    floor_hits(obs) & (x_obs <= lower)
  )
  active = (t != x_obs) & ~inactive
  terms = (t - x_obs) * (2.0 * obs.values - t - x_obs)
  return math.fsum(terms[active].tolist())
