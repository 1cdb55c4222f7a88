"""Exception hierarchy for clipped matrix completion."""

from typing import TYPE_CHECKING

if TYPE_CHECKING:
  from clipped_mc.models.solver import SolveResult


class CmcError(Exception):
  """Base class for all domain errors raised by clipped_mc."""


class SvdConvergenceError(CmcError, RuntimeError):
  """SVD or power iteration did not converge."""


class ShapeMismatchError(CmcError, ValueError):
  """Operand shapes disagree."""


class MissingThresholdError(CmcError, ValueError):
  """The operation needs a clipping threshold that is not defined."""


class InfeasibleObservationError(CmcError, ValueError):
  """Observed values contradict the constraints of the exact program."""


class SingularSystemError(CmcError, ArithmeticError):
  """An ALS ridge system could not be solved."""

  def __init__(self, axis: str, index: int) -> None:
    super().__init__(f"singular ridge system for {axis} {index}")
    self.axis = axis
    self.index = index


class RecoveryConditionError(CmcError, ValueError):
  """Exact-recovery thresholds on rho / nu are violated."""


class SizeLimitError(CmcError, ValueError):
  """Problem exceeds the desk-scale limit of a dense routine."""


class DatasetFormatError(CmcError, ValueError):
  """A rating file could not be parsed."""

  def __init__(self, message: str, line: int | None = None) -> None:
    prefix = f"line {line}: " if line is not None else ""
    super().__init__(f"{prefix}{message}")
    self.line = line


class DataGenerationError(CmcError, RuntimeError):
  """Synthetic generation gave up after the attempt cap."""


class SolverAbortedError(CmcError, RuntimeError):
  """A solver stopped early; `partial` holds what was computed so far."""

  def __init__(self, message: str, partial: "SolveResult") -> None:
    super().__init__(message)
    self.partial = partial
