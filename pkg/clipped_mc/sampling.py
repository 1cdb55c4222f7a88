"""Observation schemes, censored index sets and index-set projections."""

import math
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.errors import MissingThresholdError, ShapeMismatchError
from clipped_mc.models.clip_spec import ClipSpec, at_threshold
from clipped_mc.models.observations import IndexSet, ObservedEntries
from clipped_mc.rng import make_rng

log = structlog.get_logger(__name__)


def _require_spec(obs: ObservedEntries) -> ClipSpec:
  if obs.spec is None or not obs.spec.has_ceiling:
    raise MissingThresholdError("observations carry no ceiling threshold")
  return obs.spec


def ceiling_hits(obs: ObservedEntries) -> NDArray[np.bool_]:
  """Per-entry flag: value sits at its ceiling. All false without a ceiling."""
  if obs.spec is None or not obs.spec.has_ceiling:
    return np.zeros(len(obs), dtype=bool)
  return at_threshold(obs.values, obs.spec.upper_at(obs.row_idx, obs.col_idx))


def floor_hits(obs: ObservedEntries) -> NDArray[np.bool_]:
  """Per-entry flag: value sits at its floor. All false without a floor."""
  if obs.spec is None or not obs.spec.has_floor:
    return np.zeros(len(obs), dtype=bool)
  return at_threshold(obs.values, obs.spec.lower_at(obs.row_idx, obs.col_idx))


def _as_index_set(obs: ObservedEntries, flags: NDArray[np.bool_]) -> IndexSet:
  mask = np.zeros(obs.shape, dtype=bool)
  mask[obs.row_idx[flags], obs.col_idx[flags]] = True
  return IndexSet(obs.rows, obs.cols, mask)


def clipped_indices(obs: ObservedEntries) -> IndexSet:
  """The set C of observed entries equal to their ceiling.

  Raises:
    MissingThresholdError: If no ceiling is defined.
  """
  _require_spec(obs)
  return _as_index_set(obs, ceiling_hits(obs))


def floored_indices(obs: ObservedEntries) -> IndexSet:
  """Observed entries equal to their floor (empty without a floor)."""
  return _as_index_set(obs, floor_hits(obs))


def sample_bernoulli(rows: int, cols: int, p: float, seed: int) -> IndexSet:
  """Include each index independently with probability `p`."""
  if not 0.0 <= p <= 1.0:
    raise ValueError(f"p must be in [0, 1], got {p}")
  if p == 1.0:
    return IndexSet.full(rows, cols)
  mask = make_rng(seed).random((rows, cols)) < p
  return IndexSet(rows, cols, mask)


def golfing_k0(n1: int, n2: int, r: int) -> int:
  """k0 = ceil(log2(2 sqrt(2) sqrt(n1 n2 r)))."""
  if r < 1:
    raise ValueError(f"rank must be >= 1, got {r}")
  return max(1, math.ceil(math.log2(2.0 * math.sqrt(2.0) * math.sqrt(n1 * n2 * r))))


def sample_golfing(
  rows: int, cols: int, p: float, r: int, seed: int
) -> tuple[IndexSet, list[IndexSet]]:
  """Union of k0 independent q-Bernoulli sets with q = 1 - (1 - p)^(1/k0).

  The union includes each index with probability exactly p.
  """
  if not 0.0 <= p <= 1.0:
    raise ValueError(f"p must be in [0, 1], got {p}")
  k0 = golfing_k0(rows, cols, r)
  q = 1.0 - (1.0 - p) ** (1.0 / k0)
  rng = make_rng(seed)
  parts: list[IndexSet] = []
  union = np.zeros((rows, cols), dtype=bool)
  for _ in range(k0):
    mask = rng.random((rows, cols)) < q
    parts.append(IndexSet(rows, cols, mask))
    union |= mask
  return IndexSet(rows, cols, union), parts


@dataclass(frozen=True)
class EntrySplit:
  """Train/validation/test partition of a set of entries."""

  train: ObservedEntries
  val: ObservedEntries
  test: ObservedEntries
  degenerate: bool = False


def split_entries(
  data: NDArray[np.float64] | ObservedEntries,
  ratios: tuple[float, float, float],
  seed: int,
) -> EntrySplit:
  """Shuffle the entries once and cut the permutation at cumulative ratios.

  A dense matrix contributes all of its entries. The parts keep the input's
  thresholds, if any; clipping the training part is left to the caller.
  """
  if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
    raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")
  if isinstance(data, ObservedEntries):
    source = data
  else:
    source = ObservedEntries.from_dense(np.asarray(data, dtype=np.float64))
  n = len(source)
  order = make_rng(seed).permutation(n)
  cuts = np.rint(np.cumsum(ratios) * n).astype(np.intp)
  cuts[-1] = n
  bounds = [0, int(cuts[0]), int(cuts[1]), n]
  parts: list[ObservedEntries] = []
  for lo, hi in zip(bounds[:-1], bounds[1:], strict=True):
    keep = np.zeros(n, dtype=bool)
    keep[order[lo:hi]] = True
    parts.append(source.subset(keep))
  degenerate = any(len(part) == 0 for part in parts)
  if degenerate:
    log.warning(
      "degenerate_split",
      ratios=ratios,
      sizes=[len(part) for part in parts],
    )
  return EntrySplit(parts[0], parts[1], parts[2], degenerate)


def project(m: NDArray[np.float64], s: IndexSet) -> NDArray[np.float64]:
  """P_S(m): keep entries in `s`, zero elsewhere."""
  if m.shape != s.shape:
    raise ShapeMismatchError(f"matrix {m.shape} does not match index set {s.shape}")
  return np.where(s.mask, m, 0.0)


def drop_clipped(obs: ObservedEntries) -> ObservedEntries:
  """Remove entries sitting at the ceiling (and at the floor, if any).

  Raises:
    MissingThresholdError: If no ceiling is defined.
  """
  _require_spec(obs)
  censored = ceiling_hits(obs) | floor_hits(obs)
  return obs.subset(~censored)
