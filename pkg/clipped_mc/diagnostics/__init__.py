"""Recovery diagnostics: coherence, information loss and bound terms."""

from clipped_mc.diagnostics.bounds import diagnose, evaluate_pmin, theorem2_bounds
from clipped_mc.diagnostics.information import (
  apply_p_star,
  compute_nu_b,
  estimate_rho,
  nu_b_operator,
)
from clipped_mc.diagnostics.subspace import (
  SubspaceT,
  coherence,
  project_T,
  unnormalized_coherence,
)

__all__ = [
  "SubspaceT",
  "apply_p_star",
  "coherence",
  "compute_nu_b",
  "diagnose",
  "estimate_rho",
  "evaluate_pmin",
  "nu_b_operator",
  "project_T",
  "theorem2_bounds",
  "unnormalized_coherence",
]
