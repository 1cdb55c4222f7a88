"""Closed-form recovery requirements and error-bound terms."""

import math

import numpy as np
import structlog
from numpy.typing import NDArray

from clipped_mc.diagnostics.information import (
  NU_B_MAX_ENTRIES,
  compute_nu_b,
  estimate_rho,
)
from clipped_mc.diagnostics.subspace import (
  SubspaceT,
  coherence,
  unnormalized_coherence,
)
from clipped_mc.errors import RecoveryConditionError, ShapeMismatchError
from clipped_mc.linalg import clip, norm
from clipped_mc.models.clip_spec import ClipSpec
from clipped_mc.models.diagnostics import Diagnostics, PminTerms, Theorem2Bounds
from clipped_mc.rng import child_seed
from clipped_mc.sampling import golfing_k0

log = structlog.get_logger(__name__)

DEFAULT_BETA = 3.0


def beta_floor(n1: int, n2: int) -> float:
  """Exclusive lower limit on beta, with n = n1 n2.

  max{1, 1/(4 log n), 1 + log 2 / log n}
  """
  log_n = math.log(n1 * n2)
  return max(1.0, 1.0 / (4.0 * log_n), 1.0 + math.log(2.0) / log_n)


def evaluate_pmin(
  n1: int,
  n2: int,
  r: int,
  mu0: float,
  mu1: float,
  rho_fro: float,
  rho_inf: float,
  rho_op: float,
  nu_b: float,
  beta: float = DEFAULT_BETA,
) -> PminTerms:
  """Sampling probability sufficient for exact recovery, term by term.

  Raises:
    RecoveryConditionError: If rho_F, rho_inf or nu_B is >= 1/2, or rho_op
      is >= 1/4.
    ValueError: If n1 n2 < 2 or beta is not above `beta_floor`.
  """
  violated = [
    name
    for name, value, limit in (
      ("rho_fro", rho_fro, 0.5),
      ("rho_op", rho_op, 0.25),
      ("rho_inf", rho_inf, 0.5),
      ("nu_b", nu_b, 0.5),
    )
    if not value < limit
  ]
  if violated:
    raise RecoveryConditionError(
      f"recovery condition violated; bound undefined ({', '.join(violated)})"
    )
  n = n1 * n2
  if n < 2:
    raise ValueError("the bound needs n1 * n2 >= 2")
  if not beta > beta_floor(n1, n2):
    raise ValueError(f"beta must exceed {beta_floor(n1, n2):.6g}, got {beta}")

  k0 = golfing_k0(n1, n2, r)
  log_n = math.log(n)
  log_sum = math.log(n1 + n2)
  spread = (n1 + n2) * log_n / n

  p_fro = 8 * k0 * mu0 * beta * r / (0.5 - rho_fro) ** 2 * spread
  p_op1 = 8 * k0 * beta / (3 * (0.25 - rho_op) ** 2) * log_sum / max(n1, n2)
  p_op2 = (
    8 * k0 * beta * r * mu1**2 / (3 * (0.25 - rho_op) ** 2) * max(n1, n2) * log_sum / n
  )
  p_inf = 8 * k0 * mu0 * r * beta / (3 * (0.5 - rho_inf) ** 2) * spread
  p_main = 8 * beta * r * mu0 / (3 * (0.5 - nu_b) ** 2) * spread
  p_required = max(1.0 / n, p_fro, p_op1, p_op2, p_inf, p_main)
  failure = (
    k0 * (math.exp(0.25) * n**-beta + 2 * n ** (1 - beta) + (n1 + n2) ** (1 - beta))
    + 2 * n ** (1 - beta)
  )
  return PminTerms(
    p_fro=p_fro,
    p_op1=p_op1,
    p_op2=p_op2,
    p_inf=p_inf,
    p_main=p_main,
    k0=k0,
    p_required=p_required,
    p_min=min(1.0, p_required),
    failure_prob=failure,
    beta=beta,
  )


def _rms(m: NDArray[np.float64]) -> float:
  return norm(m, "frobenius") / math.sqrt(m.size)


def theorem2_bounds(
  m: NDArray[np.float64],
  m_hat: NDArray[np.float64],
  spec: ClipSpec,
  beta1: float,
  beta2: float,
  k: int,
  p: float,
  c0: float = 1.0,
) -> Theorem2Bounds:
  """Split the RMS error of `m_hat` into data, hypothesis and estimation terms.

  `c0` stands in for a universal constant that has no known value, and
  mu(Clip(m_hat)) is used as a plug-in for the class-wide coherence.
  """
  if m.shape != m_hat.shape:
    raise ShapeMismatchError(f"estimate {m_hat.shape} does not match {m.shape}")
  if not 0.0 < p <= 1.0:
    raise ValueError(f"p must be in (0, 1], got {p}")
  n1, n2 = m.shape
  n = n1 * n2
  m_c = clip(m, spec)
  hat_c = clip(m_hat, spec)
  cap12 = (math.sqrt(beta1) + math.sqrt(beta2)) * k**0.25 * n**-0.25
  mu_g = unnormalized_coherence(hat_c) if np.any(hat_c) else 0.0
  b3_cap = math.sqrt(c0 * 2.0 * mu_g**2 * beta2 / p) * (
    (p * k * (n1 + n2) + k * math.log(n1 + n2)) / n
  ) ** 0.25
  budget = math.sqrt(k * n)

  def in_class(x: NDArray[np.float64], x_c: NDArray[np.float64]) -> bool:
    return (
      norm(x, "trace") ** 2 <= beta1 * budget
      and norm(x_c, "trace") ** 2 <= beta2 * budget
    )

  return Theorem2Bounds(
    lhs=_rms(m_hat - m),
    b1=_rms(m - m_c),
    b2=_rms(m_hat - hat_c),
    b3=_rms(hat_c - m_c),
    b1_cap=cap12,
    b2_cap=cap12,
    b3_cap=b3_cap,
    in_hypothesis_class=in_class(m, m_c) and in_class(m_hat, hat_c),
    mu_g_plugin=mu_g,
    c0=c0,
  )


def diagnose(
  m: NDArray[np.float64],
  spec: ClipSpec,
  beta: float = DEFAULT_BETA,
  samples: int = 100,
  ascent_steps: int = 0,
  seed: int = 0,
) -> Diagnostics:
  """Coherences, nu_B, rho estimates and the sampling requirement of (M, spec).

  nu_B is skipped above the dense-operator size cap. A violated recovery
  condition is reported in `condition_error` instead of raising.
  """
  coh = coherence(m)
  n1, n2 = m.shape
  rank = SubspaceT.from_matrix(m).rank
  nu_b = compute_nu_b(m, spec) if n1 * n2 <= NU_B_MAX_ENTRIES else None
  rho_fro = estimate_rho(m, spec, "fro", samples, ascent_steps, child_seed(seed, 0))
  rho_inf = estimate_rho(m, spec, "inf", samples, ascent_steps, child_seed(seed, 1))
  rho_op = estimate_rho(m, spec, "op", samples, ascent_steps, child_seed(seed, 2))

  pmin: PminTerms | None = None
  condition_error: str | None = None
  if nu_b is None:
    condition_error = f"nu_B not computed above {NU_B_MAX_ENTRIES} entries"
  else:
    try:
      pmin = evaluate_pmin(
        n1, n2, rank, coh.mu0, coh.mu1, rho_fro, rho_inf, rho_op, nu_b, beta
      )
    except RecoveryConditionError as e:
      condition_error = str(e)
      log.warning("recovery_condition_violated", reason=condition_error)

  return Diagnostics(
    n1=n1,
    n2=n2,
    rank=rank,
    mu0=coh.mu0,
    mu1=coh.mu1,
    mu_unnormalized=coh.mu_unnormalized,
    nu_b=nu_b,
    rho_fro=rho_fro,
    rho_inf=rho_inf,
    rho_op=rho_op,
    pmin=pmin,
    condition_error=condition_error,
  )
