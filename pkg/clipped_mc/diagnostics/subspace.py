"""The tangent subspace T of a low-rank matrix and coherence measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from clipped_mc.errors import ShapeMismatchError
from clipped_mc.linalg import DEFAULT_RANK_TOL, skinny_svd


@dataclass(frozen=True)
class SubspaceT:
  """T = span{u_k y^T} + span{x v_k^T} for the singular vectors of M."""

  u: NDArray[np.float64]
  v: NDArray[np.float64]

  @classmethod
  def from_matrix(
    cls, m: NDArray[np.float64], rank_tol: float = DEFAULT_RANK_TOL
  ) -> SubspaceT:
    """Raises ValueError for the zero matrix."""
    svd = skinny_svd(m, rank_tol)
    if svd.rank == 0:
      raise ValueError("the zero matrix has no singular subspace")
    return cls(svd.u, svd.v)

  @property
  def rank(self) -> int:
    return int(self.u.shape[1])

  @property
  def shape(self) -> tuple[int, int]:
    return (int(self.u.shape[0]), int(self.v.shape[0]))


def project_T(
  z: NDArray[np.float64], t: SubspaceT, orthogonal: bool = False
) -> NDArray[np.float64]:
  """U U^T Z + Z V V^T - U U^T Z V V^T, or its complement Z - P_T(Z)."""
  if z.shape != t.shape:
    raise ShapeMismatchError(f"matrix {z.shape} does not match subspace {t.shape}")
  uz = t.u @ (t.u.T @ z)
  zv = (z @ t.v) @ t.v.T
  uzv = t.u @ ((t.u.T @ z) @ t.v) @ t.v.T
  pt = uz + zv - uzv
  return z - pt if orthogonal else pt


class Coherence(NamedTuple):
  mu0: float
  mu1: float
  mu_unnormalized: float


def _row_coherences(m: NDArray[np.float64]) -> tuple[float, float, SubspaceT]:
  t = SubspaceT.from_matrix(m)
  mu_u = float((t.u * t.u).sum(axis=1).max())
  mu_v = float((t.v * t.v).sum(axis=1).max())
  return mu_u, mu_v, t


def unnormalized_coherence(x: NDArray[np.float64]) -> float:
  """mu(X) = max(max_i ||U_i||^2, max_j ||V_j||^2)."""
  mu_u, mu_v, _ = _row_coherences(x)
  return max(mu_u, mu_v)


def coherence(m: NDArray[np.float64]) -> Coherence:
  """mu0 = max((n1/r) mu^U, (n2/r) mu^V), mu1 = sqrt(n1 n2 / r) ||U V^T||_inf.

  Raises:
    ValueError: If `m` is the zero matrix.
  """
  mu_u, mu_v, t = _row_coherences(m)
  n1, n2 = m.shape
  r = t.rank
  mu0 = max(n1 / r * mu_u, n2 / r * mu_v)
  mu1 = math.sqrt(n1 * n2 / r) * float(np.abs(t.u @ t.v.T).max())
  return Coherence(mu0=mu0, mu1=mu1, mu_unnormalized=max(mu_u, mu_v))
