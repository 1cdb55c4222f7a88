"""Synthetic low-rank ground truth and the clipped train/validation/test split."""

from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from clipped_mc.errors import DataGenerationError
from clipped_mc.linalg import frozen, skinny_svd
from clipped_mc.models.clip_spec import ClipSpec
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.models.synth import SynthSpec
from clipped_mc.rng import child_seed, make_rng
from clipped_mc.sampling import sample_bernoulli, split_entries

log = structlog.get_logger(__name__)

NMF_EPS = 1e-12
# Looser than the SVD default: the product of rank-r factors leaves round-off
# singular values around n * eps * sigma_max.
GENERATION_RANK_TOL = 1e-10

SPLIT_RATIOS = (0.8, 0.1, 0.1)


def nmf_factorize(
  m: NDArray[np.float64],
  r: int,
  iters: int = 500,
  seed: int = 0,
  trace: list[float] | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
  """Lee-Seung multiplicative updates for min ||m - w h||_F^2 with w, h >= 0.

  Args:
    m: Nonnegative matrix to factorize.
    r: Inner dimension of the factors.
    iters: Number of (h, w) update sweeps.
    seed: Seed of the random positive initialization.
    trace: If given, receives the squared reconstruction error after each sweep.

  Returns:
    Factors w (n1 x r) and h (r x n2).

  Raises:
    ValueError: If `m` has a negative entry or `r` is not positive.
  """
  if r < 1:
    raise ValueError(f"rank must be >= 1, got {r}")
  if bool((m < 0).any()):
    raise ValueError("NMF needs a nonnegative matrix")
  n1, n2 = m.shape
  rng = make_rng(seed)
  scale = np.sqrt(max(float(m.mean()), NMF_EPS) / r)
  w = scale * rng.uniform(0.5, 1.5, size=(n1, r))
  h = scale * rng.uniform(0.5, 1.5, size=(r, n2))
  for _ in range(iters):
    h *= (w.T @ m) / (w.T @ w @ h + NMF_EPS)
    w *= (m @ h.T) / (w @ (h @ h.T) + NMF_EPS)
    if trace is not None:
      residual = m - w @ h
      trace.append(float(np.sum(residual * residual)))
  return w, h


@dataclass(frozen=True)
class GeneratedInstance:
  """A synthetic ground truth with its clipped training part."""

  spec: SynthSpec
  m: NDArray[np.float64]
  train: ObservedEntries
  val: ObservedEntries
  test: ObservedEntries
  clipping_rate: float
  attempts: int

  def sidecar(self) -> dict[str, object]:
    """Provenance record stored next to the binary matrix."""
    return {
      "spec": self.spec.model_dump(by_alias=True),
      "clipping_rate": self.clipping_rate,
      "attempts": self.attempts,
      "shape": list(self.m.shape),
      "sizes": {"train": len(self.train), "val": len(self.val), "test": len(self.test)},
    }


class _RankMismatch(Exception):
  def __init__(self, rank: int) -> None:
    super().__init__(f"numerical rank {rank}")
    self.rank = rank


def _draw(spec: SynthSpec, seed: int) -> NDArray[np.float64]:
  rng = make_rng(seed)
  shape = (spec.n1, spec.n2)
  if spec.continuous:
    raw = rng.uniform(1.0, float(spec.magnitude), size=shape)
  else:
    raw = rng.integers(1, spec.magnitude + 1, size=shape).astype(np.float64)
  w, h = nmf_factorize(raw, spec.r, spec.nmf_iters, child_seed(seed, 0))
  m = w @ h
  rank = skinny_svd(m, GENERATION_RANK_TOL).rank
  if rank != spec.r:
    log.info("synthetic_rank_mismatch", seed=seed, rank=rank, target=spec.r)
    raise _RankMismatch(rank)
  return m


def clipping_rate(m: NDArray[np.float64], ceiling: float | None) -> float:
  """Fraction of all entries of `m` strictly above the ceiling."""
  if ceiling is None:
    return 0.0
  return float(np.count_nonzero(m > ceiling)) / m.size


def generate_synthetic(spec: SynthSpec) -> GeneratedInstance:
  """Draw M until its rank is exactly r, then split and clip the training part.

  Entries are split 0.8/0.1/0.1. Each training entry is then kept with
  probability `spec.p`; validation and test stay complete.

  Attempt k uses the k-th derived seed of `spec.seed`, so the output is a pure
  function of the spec.

  Raises:
    DataGenerationError: If no draw reaches rank r within `spec.max_attempts`.
  """
  retrying = Retrying(
    stop=stop_after_attempt(spec.max_attempts),
    retry=retry_if_exception_type(_RankMismatch),
  )
  m: NDArray[np.float64] | None = None
  attempts = 0
  try:
    for attempt in retrying:
      with attempt:
        attempts = attempt.retry_state.attempt_number
        m = _draw(spec, child_seed(spec.seed, attempts))
  except RetryError as e:
    raise DataGenerationError(
      f"no rank-{spec.r} instance after {spec.max_attempts} attempts"
    ) from e
  assert m is not None
  m = frozen(m)

  split_seed = child_seed(spec.seed, 0)
  split = split_entries(m, SPLIT_RATIOS, split_seed)
  train = split.train
  if spec.p < 1.0:
    observed = sample_bernoulli(spec.n1, spec.n2, spec.p, child_seed(split_seed, 0))
    train = train.subset(observed.mask[train.row_idx, train.col_idx])
  if spec.ceiling is not None:
    train = train.clipped(ClipSpec(ceiling=spec.ceiling))
  rate = clipping_rate(m, spec.ceiling)
  log.info(
    "synthetic_generated",
    shape=m.shape,
    rank=spec.r,
    attempts=attempts,
    clipping_rate=rate,
  )
  return GeneratedInstance(
    spec=spec,
    m=m,
    train=train,
    val=split.val,
    test=split.test,
    clipping_rate=rate,
    attempts=attempts,
  )
