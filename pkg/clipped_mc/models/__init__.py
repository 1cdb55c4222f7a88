"""Data models for clipped matrix completion."""

from clipped_mc.models.clip_spec import ClipSpec, at_threshold
from clipped_mc.models.diagnostics import Diagnostics, PminTerms, Theorem2Bounds
from clipped_mc.models.observations import IndexSet, ObservedEntries
from clipped_mc.models.solver import SolverConfig, SolveResult, Variant
from clipped_mc.models.synth import SynthSpec

__all__ = [
  "ClipSpec",
  "Diagnostics",
  "IndexSet",
  "ObservedEntries",
  "PminTerms",
  "SolveResult",
  "SolverConfig",
  "SynthSpec",
  "Theorem2Bounds",
  "Variant",
  "at_threshold",
]
