"""Named hyperparameter grids.

Fro presets use the consistent p-update; every other field keeps its
`SolverConfig` default.
"""

from collections.abc import Callable
from itertools import product

from clipped_mc.models.solver import SolverConfig, Variant

DTR_LAMBDAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def dtr_grid(variant: Variant = Variant.DTR_CMC) -> list[SolverConfig]:
  """lambda1, lambda2 over {0, ..., 1.0}, T in {1000, 2000}, eta0 in {0.5, 1, 1.5}."""
  return [
    SolverConfig(
      variant=variant,
      lambda1=l1,
      lambda2=l2,
      max_iter=t,
      eta0=eta0,
      step_decay=0.99,
      sv_floor=1e-8,
    )
    for l1, l2, t, eta0 in product(
      DTR_LAMBDAS, DTR_LAMBDAS, (1000, 2000), (0.5, 1.0, 1.5)
    )
  ]


def tr_grid(variant: Variant = Variant.TR_CMC) -> list[SolverConfig]:
  """T in {100, 500} with the default continuation schedule."""
  return [
    SolverConfig(variant=variant, max_iter=t, apg_eta=0.8, lambda_scale=1e-4)
    for t in (100, 500)
  ]


def fro_synthetic_grid(variant: Variant = Variant.FRO_CMC) -> list[SolverConfig]:
  """lambda in {0.01, 0.1, 0.5, 1.0}, k in {5, 10, ..., 40}, T = 200."""
  return [
    SolverConfig(
      variant=variant, lambda1=lam, rank_k=k, max_iter=200, p_update="consistent"
    )
    for lam, k in product((0.01, 0.1, 0.5, 1.0), range(5, 41, 5))
  ]


def fro_real_grid(variant: Variant = Variant.FRO_CMC) -> list[SolverConfig]:
  """lambda in {1e-1, 1e-2, 1e-3}, k in {24, 28, ..., 40}, T in {500, 1500}."""
  return [
    SolverConfig(
      variant=variant, lambda1=lam, rank_k=k, max_iter=t, p_update="consistent"
    )
    for lam, k, t in product((1e-1, 1e-2, 1e-3), range(24, 41, 4), (500, 1500))
  ]


PRESETS: dict[str, Callable[[Variant], list[SolverConfig]]] = {
  "dtr": dtr_grid,
  "tr": tr_grid,
  "fro-synthetic": fro_synthetic_grid,
  "fro-real": fro_real_grid,
}


def preset(name: str, variant: Variant) -> list[SolverConfig]:
  """Look up a grid by name and instantiate it for `variant`.

  Raises:
    ValueError: If the preset name is unknown.
  """
  try:
    factory = PRESETS[name]
  except KeyError:
    raise ValueError(
      f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}"
    ) from None
  return factory(variant)
