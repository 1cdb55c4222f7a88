"""Synthetic instance specification."""

from typing import Self

from pydantic import BaseModel, Field, model_validator


class SynthSpec(BaseModel):
  """Parameters of a generated low-rank ground truth and its clipped split."""

  model_config = {"extra": "forbid", "frozen": True, "populate_by_name": True}

  n1: int = Field(ge=1)
  n2: int = Field(ge=1)
  r: int = Field(ge=1, description="Target rank")
  magnitude: int = Field(default=15, ge=1, alias="L", description="Entries in 1..L")
  p: float = Field(
    default=0.8, gt=0.0, le=1.0, description="Observation rate inside the training part"
  )
  ceiling: float | None = Field(
    default=None, alias="C", description="Clipping threshold (none = no clipping)"
  )
  seed: int = Field(default=0, ge=0)
  continuous: bool = Field(default=False, description="Uniform reals on [1, L]")
  nmf_iters: int = Field(default=500, ge=1)
  max_attempts: int = Field(default=20, ge=1)

  @model_validator(mode="after")
  def _check_rank(self) -> Self:
    if self.r > min(self.n1, self.n2):
      raise ValueError(f"rank {self.r} exceeds min({self.n1}, {self.n2})")
    return self
