"""Report models for the recovery diagnostics."""

from pydantic import BaseModel, Field


class PminTerms(BaseModel):
  """Sampling-rate requirement terms for exact recovery."""

  p_fro: float
  p_op1: float
  p_op2: float
  p_inf: float
  p_main: float
  k0: int
  p_required: float = Field(description="max{1/(n1 n2), terms}, before capping at 1")
  p_min: float = Field(description="min{1, p_required}")
  failure_prob: float = Field(description="Upper bound on the failure probability")
  beta: float


class Diagnostics(BaseModel):
  """Coherence, information-loss and sampling diagnostics of (M, thresholds)."""

  n1: int
  n2: int
  rank: int
  mu0: float
  mu1: float
  mu_unnormalized: float
  nu_b: float | None = Field(default=None, description="None above the size cap")
  rho_fro: float
  rho_inf: float
  rho_op: float
  rho_is_lower_bound: bool = True
  pmin: PminTerms | None = Field(
    default=None, description="None when a recovery condition is violated"
  )
  condition_error: str | None = None


class Theorem2Bounds(BaseModel):
  """Error decomposition of an estimate and its analytic caps."""

  lhs: float = Field(description="||M_hat - M||_F / sqrt(n1 n2)")
  b1: float = Field(description="Complexity of data")
  b2: float = Field(description="Complexity of hypothesis")
  b3: float = Field(description="Estimation error")
  b1_cap: float
  b2_cap: float
  b3_cap: float
  in_hypothesis_class: bool
  mu_g_plugin: float = Field(description="mu(Clip(M_hat)), a plug-in for mu_G")
  c0: float = Field(description="Universal constant, not given numerically")
