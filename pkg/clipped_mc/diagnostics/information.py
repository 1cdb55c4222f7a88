"""How much of T survives clipping: P*, nu_B and Monte-Carlo rho estimates."""

import math
from typing import Literal

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.diagnostics.subspace import SubspaceT, coherence, project_T
from clipped_mc.errors import ShapeMismatchError, SizeLimitError
from clipped_mc.linalg import NormKind, assemble_operator, norm, operator_norm
from clipped_mc.models.clip_spec import ClipSpec, at_threshold
from clipped_mc.rng import spawn_rngs

log = structlog.get_logger(__name__)

RhoKind = Literal["fro", "inf", "op"]

NU_B_MAX_ENTRIES = 4096


def threshold_cases(
  m: NDArray[np.float64], spec: ClipSpec
) -> tuple[NDArray[np.bool_], NDArray[np.bool_], NDArray[np.bool_]]:
  """(inside, at ceiling, at floor) masks of the ground truth."""
  upper, lower = spec.upper(m.shape), spec.lower(m.shape)
  at_ceiling = at_threshold(m, upper)
  at_floor = at_threshold(m, lower) & ~at_ceiling
  inside = (m < upper) & (m > lower) & ~at_ceiling & ~at_floor
  return inside, at_ceiling, at_floor


def b_mask(m: NDArray[np.float64], spec: ClipSpec) -> NDArray[np.bool_]:
  """B: entries of M strictly inside the thresholds."""
  return threshold_cases(m, spec)[0]


def apply_p_star(
  z: NDArray[np.float64], m: NDArray[np.float64], spec: ClipSpec
) -> NDArray[np.float64]:
  """P*: Z inside, max(Z, 0) at the ceiling, min(Z, 0) at the floor, else 0."""
  if z.shape != m.shape:
    raise ShapeMismatchError(f"matrix {z.shape} does not match {m.shape}")
  inside, at_ceiling, at_floor = threshold_cases(m, spec)
  out = np.where(inside, z, 0.0)
  out = np.where(at_ceiling, np.maximum(z, 0.0), out)
  return np.where(at_floor, np.minimum(z, 0.0), out)


def compute_nu_b(m: NDArray[np.float64], spec: ClipSpec) -> float:
  """nu_B = ||P_T P_B P_T - P_T||_op from the assembled (n1 n2)^2 operator.

  Raises:
    SizeLimitError: If n1 * n2 exceeds 4096; use `estimate_rho` instead.
  """
  n1, n2 = m.shape
  if n1 * n2 > NU_B_MAX_ENTRIES:
    raise SizeLimitError(
      f"nu_B assembles a dense operator and is limited to {NU_B_MAX_ENTRIES} "
      f"entries, got {n1}x{n2}; use the rho estimators for larger matrices"
    )
  return min(1.0, operator_norm(nu_b_operator(m, spec)))


def nu_b_operator(m: NDArray[np.float64], spec: ClipSpec) -> NDArray[np.float64]:
  """Dense (n1 n2) x (n1 n2) matrix of P_T P_B P_T - P_T."""
  t = SubspaceT.from_matrix(m)
  b = b_mask(m, spec)

  def gap(e: NDArray[np.float64]) -> NDArray[np.float64]:
    pt = project_T(e, t)
    return project_T(np.where(b, pt, 0.0), t) - pt

  return assemble_operator(gap, m.shape)


def _rho_ratio(
  z: NDArray[np.float64],
  m: NDArray[np.float64],
  spec: ClipSpec,
  t: SubspaceT,
  which: RhoKind,
  op_prefactor: float,
) -> float:
  lost = apply_p_star(z, m, spec)
  match which:
    case "fro":
      return norm(project_T(lost, t) - z, "frobenius") / norm(z, "frobenius")
    case "inf":
      return norm(project_T(lost, t) - z, "infinity") / norm(z, "infinity")
    case "op":
      return op_prefactor * norm(lost - z, "operator") / norm(z, "operator")


def estimate_rho(
  m: NDArray[np.float64],
  spec: ClipSpec,
  which: RhoKind,
  samples: int = 100,
  ascent_steps: int = 0,
  seed: int = 0,
  step: float = 0.1,
) -> float:
  """Monte-Carlo LOWER BOUND on rho_F, rho_inf or rho_op.

  Every sample draws a Gaussian G, takes Z = P_T(G) scaled to the norm cap and
  then tries `ascent_steps` coordinate moves Z +/- h P_T(e_i f_j^T), keeping
  those that raise the ratio. Sample i always uses the i-th child stream of
  `seed`, so more samples never lower the estimate.

  Raises:
    ValueError: If `m` is zero or `samples` < 1.
  """
  if samples < 1:
    raise ValueError(f"samples must be >= 1, got {samples}")
  t = SubspaceT.from_matrix(m)
  n1, n2 = m.shape
  r = t.rank
  uv = t.u @ t.v.T
  op_prefactor = math.sqrt(r) * coherence(m).mu1
  kinds: dict[RhoKind, NormKind] = {
    "fro": "frobenius",
    "inf": "infinity",
    "op": "operator",
  }
  kind_norm = kinds[which]
  cap = {
    "fro": norm(uv, "frobenius"),
    "inf": norm(uv, "infinity"),
    "op": math.sqrt(n1 * n2) * norm(uv, "operator"),
  }[which]

  best = 0.0
  for rng in spawn_rngs(seed, samples):
    z = project_T(rng.standard_normal(m.shape), t)
    z_norm = norm(z, kind_norm)
    if z_norm == 0.0:
      continue
    z *= cap / z_norm
    value = _rho_ratio(z, m, spec, t, which, op_prefactor)
    for _ in range(ascent_steps):
      i, j = int(rng.integers(n1)), int(rng.integers(n2))
      basis = np.zeros(m.shape)
      basis[i, j] = 1.0
      direction = project_T(basis, t)
      d_norm = norm(direction, "frobenius")
      if d_norm == 0.0:
        continue
      direction *= step * norm(z, "frobenius") / d_norm
      for candidate in (z + direction, z - direction):
        c_norm = norm(candidate, kind_norm)
        if c_norm == 0.0:
          continue
        candidate = candidate * (cap / c_norm)
        c_value = _rho_ratio(candidate, m, spec, t, which, op_prefactor)
        if c_value > value:
          z, value = candidate, c_value
          break
    best = max(best, value)
  log.debug("rho_estimated", which=which, samples=samples, value=best)
  return best
