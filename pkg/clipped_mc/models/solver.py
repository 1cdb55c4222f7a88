"""Solver configuration and result types."""

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Literal, Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator


class Variant(StrEnum):
  """Which estimator to fit."""

  DTR_CMC = "DTr-CMC"
  TR_CMC = "Tr-CMC"
  TR_MC = "Tr-MC"
  FRO_CMC = "Fro-CMC"
  FRO_MC = "Fro-MC"
  TR_MCI = "Tr-MCi"
  FRO_MCI = "Fro-MCi"
  EXACT = "ExactTraceNorm"

  @property
  def is_fro(self) -> bool:
    return self in (Variant.FRO_CMC, Variant.FRO_MC, Variant.FRO_MCI)

  @property
  def uses_hinge(self) -> bool:
    return self in (Variant.DTR_CMC, Variant.TR_CMC, Variant.FRO_CMC, Variant.EXACT)


class SolverConfig(BaseModel):
  """Hyperparameters for one solve.

  Only the fields relevant to `variant` are read. Fro variants use `lambda1`
  as the ridge weight and require `rank_k`.
  """

  model_config = {"extra": "forbid", "frozen": True}

  variant: Variant
  lambda1: float = Field(default=0.0, ge=0.0)
  lambda2: float = Field(default=0.0, ge=0.0)
  rank_k: int | None = Field(default=None, ge=1)
  max_iter: int = Field(default=1000, ge=0, description="Iteration count T")
  eta0: float = Field(default=1.0, gt=0.0)
  step_decay: float = Field(default=0.99, gt=0.0, le=1.0)
  sv_floor: float = Field(default=1e-8, ge=0.0, description="Singular value floor")
  admm_rho: float = Field(default=1.0, gt=0.0)
  tol: float = Field(default=1e-8, ge=0.0)
  seed: int = Field(default=0, ge=0)

  # Tr (APG) options
  lambda_scale: float = Field(
    default=1e-4,
    gt=0.0,
    description="Target lambda as a multiple of ||P_Omega(M^c)||_op",
  )
  continuation: bool = True
  continuation_factor: float = Field(default=0.7, gt=0.0, le=1.0)
  apg_restart: bool = False
  apg_linesearch: bool = False
  apg_eta: float = Field(default=0.8, gt=0.0, lt=1.0)

  # Fro (ALS) options
  literal_init: bool = False
  p_update: Literal["literal", "consistent"] = "literal"
  init_jitter: float = Field(default=0.1, ge=0.0, lt=1.0)

  @model_validator(mode="after")
  def _check_variant_fields(self) -> Self:
    if self.variant.is_fro and self.rank_k is None:
      raise ValueError(f"{self.variant} requires rank_k")
    return self

  def label(self) -> str:
    """Compact identifier used in result tables."""
    v = self.variant
    if v.is_fro:
      parts = f"k={self.rank_k},lambda={self.lambda1:g},T={self.max_iter}"
    elif v is Variant.DTR_CMC:
      parts = (
        f"lambda1={self.lambda1:g},lambda2={self.lambda2:g},"
        f"T={self.max_iter},eta0={self.eta0:g}"
      )
    elif v is Variant.EXACT:
      parts = f"rho={self.admm_rho:g},T={self.max_iter}"
    else:
      parts = f"scale={self.lambda_scale:g},T={self.max_iter}"
    return f"{v.value}[{parts}]"


@dataclass
class SolveResult:
  """Outcome of one solve."""

  estimate: NDArray[np.float64]
  objective_trace: list[float] = field(default_factory=list[float])
  iterations_used: int = 0
  converged: bool = False
  best_iterate_index: int = 0
  variant: str | None = None
  # (primal residual, dual residual, rho) per ADMM iteration
  residual_trace: list[tuple[float, float, float]] = field(
    default_factory=list[tuple[float, float, float]]
  )
  duration_ms: float = 0.0

  @property
  def final_objective(self) -> float | None:
    return self.objective_trace[-1] if self.objective_trace else None
