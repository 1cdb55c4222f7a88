"""Helpers shared by the iterative solvers."""

import numpy as np
from numpy.typing import NDArray

from clipped_mc.errors import MissingThresholdError
from clipped_mc.models.clip_spec import ClipSpec
from clipped_mc.models.observations import ObservedEntries


def require_ceiling(obs: ObservedEntries) -> ClipSpec:
  if obs.spec is None or not obs.spec.has_ceiling:
    raise MissingThresholdError("this solver needs a ceiling threshold")
  return obs.spec


def start_level(obs: ObservedEntries) -> float:
  """Scalar C used by the "start above the threshold" initializations.

  Falls back to the largest observed value when no finite ceiling exists.
  """
  if obs.spec is not None:
    c = obs.spec.scalar_ceiling
    if c is not None and np.isfinite(c):
      return float(c)
  return float(obs.values.max()) if len(obs) else 0.0


def above_threshold_start(
  obs: ObservedEntries, offset: float = 1.0
) -> NDArray[np.float64]:
  """(C + 1) everywhere, using per-entry ceilings where they are finite."""
  level = start_level(obs)
  x = np.full(obs.shape, level + offset, dtype=np.float64)
  if obs.spec is not None and obs.spec.ceiling_matrix is not None:
    upper = obs.spec.ceiling_matrix
    x = np.where(np.isfinite(upper), upper + offset, x)
  return x


def relative_change(new: NDArray[np.float64], old: NDArray[np.float64]) -> float:
  return float(np.linalg.norm(new - old) / max(1.0, float(np.linalg.norm(old))))
