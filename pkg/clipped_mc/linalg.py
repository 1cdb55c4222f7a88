"""Dense matrix helpers: skinny SVD, trace-norm prox, clipping and norms."""

import struct
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray

from clipped_mc.errors import ShapeMismatchError, SvdConvergenceError
from clipped_mc.models.clip_spec import ClipSpec
from clipped_mc.rng import make_rng

log = structlog.get_logger(__name__)

DenseMatrix = NDArray[np.float64]
NormKind = Literal["trace", "operator", "frobenius", "infinity"]

DEFAULT_RANK_TOL = 1e-12
_HEADER = struct.Struct("<QQ")


def as_matrix(data: ArrayLike, *, copy: bool = True) -> DenseMatrix:
  """Validate `data` as a finite 2-D float64 matrix.

  Raises:
    ValueError: If the input is not 2-D, is empty or holds NaN/Inf.
  """
  arr = np.array(data, dtype=np.float64, copy=copy)
  if arr.ndim != 2:
    raise ValueError(f"expected a 2-D matrix, got {arr.ndim} dimension(s)")
  if arr.shape[0] == 0 or arr.shape[1] == 0:
    raise ValueError(f"matrix dimensions must be positive, got {arr.shape}")
  if not np.isfinite(arr).all():
    raise ValueError("matrix entries must be finite")
  return arr


def frozen(m: DenseMatrix) -> DenseMatrix:
  """Mark `m` read-only and return it."""
  m.setflags(write=False)
  return m


def check_same_shape(a: DenseMatrix, b: DenseMatrix) -> None:
  if a.shape != b.shape:
    raise ShapeMismatchError(f"shape {a.shape} does not match {b.shape}")


@dataclass(frozen=True)
class SkinnySvd:
  """Rank-truncated SVD m = u @ diag(sigma) @ v.T."""

  u: DenseMatrix
  sigma: NDArray[np.float64]
  v: DenseMatrix

  @property
  def rank(self) -> int:
    return int(self.sigma.shape[0])

  def reconstruct(self) -> DenseMatrix:
    return (self.u * self.sigma) @ self.v.T


def skinny_svd(m: DenseMatrix, rank_tol: float = DEFAULT_RANK_TOL) -> SkinnySvd:
  """Skinny SVD keeping singular values above `rank_tol * sigma_max`.

  Column signs are fixed so that the largest-magnitude entry of every left
  singular vector is positive, which makes the output deterministic.

  Raises:
    SvdConvergenceError: If LAPACK fails to converge.
  """
  try:
    u, s, vt = np.linalg.svd(m, full_matrices=False)
  except np.linalg.LinAlgError as e:
    raise SvdConvergenceError(f"SVD did not converge for {m.shape} matrix") from e
  if s.size == 0 or s[0] <= 0.0:
    n1, n2 = m.shape
    return SkinnySvd(u=np.zeros((n1, 0)), sigma=np.zeros(0), v=np.zeros((n2, 0)))
  keep = s > rank_tol * s[0]
  u, s, v = u[:, keep], s[keep], vt[keep].T
  pivots = np.argmax(np.abs(u), axis=0)
  signs = np.sign(u[pivots, np.arange(u.shape[1])])
  signs[signs == 0] = 1.0
  return SkinnySvd(u=u * signs, sigma=s, v=v * signs)


def shrink(m: DenseMatrix, tau: float) -> tuple[DenseMatrix, float]:
  """Singular value soft-thresholding; also returns the result's trace norm."""
  if tau < 0:
    raise ValueError(f"tau must be non-negative, got {tau}")
  svd = skinny_svd(m, rank_tol=0.0)
  shrunk = np.maximum(svd.sigma - tau, 0.0)
  keep = shrunk > 0
  return (svd.u[:, keep] * shrunk[keep]) @ svd.v[:, keep].T, float(shrunk.sum())


def svt_prox(m: DenseMatrix, tau: float) -> DenseMatrix:
  """Proximal map of tau * trace norm: U max(S - tau, 0) V^T."""
  if tau == 0:
    return m.copy()
  return shrink(m, tau)[0]


def clip(m: DenseMatrix, spec: ClipSpec) -> DenseMatrix:
  """Elementwise min with the ceiling and max with the floor."""
  out = m
  if spec.has_ceiling:
    out = np.minimum(out, spec.upper(m.shape))
  if spec.has_floor:
    out = np.maximum(out, spec.lower(m.shape))
  return np.array(out, dtype=np.float64)


def norm(m: DenseMatrix, which: NormKind) -> float:
  """Trace, operator, Frobenius or entrywise-max norm of `m`."""
  match which:
    case "frobenius":
      return float(np.linalg.norm(m))
    case "infinity":
      return float(np.abs(m).max()) if m.size else 0.0
    case "trace" | "operator":
      try:
        s = np.linalg.svd(m, compute_uv=False)
      except np.linalg.LinAlgError as e:
        raise SvdConvergenceError(f"SVD did not converge for {m.shape} matrix") from e
      if s.size == 0:
        return 0.0
      return float(s.sum()) if which == "trace" else float(s[0])
    case _:
      raise ValueError(f"unknown norm {which!r}")


def inner(a: DenseMatrix, b: DenseMatrix) -> float:
  """Frobenius inner product."""
  check_same_shape(a, b)
  return float(np.vdot(a, b))


def assemble_operator(
  fn: Callable[[DenseMatrix], DenseMatrix], shape: tuple[int, int]
) -> DenseMatrix:
  """Matrix of a linear map on n1 x n2 matrices, built column by column.

  Column `i * n2 + j` is `vec(fn(e_i f_j^T))` in row-major order.
  """
  n1, n2 = shape
  size = n1 * n2
  op = np.empty((size, size), dtype=np.float64)
  basis = np.zeros(shape, dtype=np.float64)
  for idx in range(size):
    i, j = divmod(idx, n2)
    basis[i, j] = 1.0
    op[:, idx] = fn(basis).ravel()
    basis[i, j] = 0.0
  return op


def operator_norm(
  a: DenseMatrix,
  *,
  dense_limit: int = 1024,
  tol: float = 1e-10,
  max_iter: int = 10_000,
  seed: int = 0,
) -> float:
  """Largest singular value of `a`.

  Uses a full SVD below `dense_limit` columns and power iteration on a^T a
  above it.

  Raises:
    SvdConvergenceError: If power iteration does not converge in `max_iter`.
  """
  if a.shape[1] < dense_limit:
    return norm(a, "operator")
  x = make_rng(seed).standard_normal(a.shape[1])
  x /= np.linalg.norm(x)
  estimate = 0.0
  for it in range(max_iter):
    y = a.T @ (a @ x)
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
      return 0.0
    x = y / y_norm
    new_estimate = float(np.sqrt(y_norm))
    if abs(new_estimate - estimate) <= tol * max(1.0, new_estimate):
      log.debug("power_iteration_converged", iterations=it + 1, value=new_estimate)
      return new_estimate
    estimate = new_estimate
  raise SvdConvergenceError(f"power iteration did not converge in {max_iter} steps")


def encode_matrix(m: DenseMatrix) -> bytes:
  """Little-endian u64 rows, u64 cols, then row-major f64 entries."""
  rows, cols = m.shape
  body = np.ascontiguousarray(m, dtype="<f8").tobytes()
  return _HEADER.pack(rows, cols) + body


def decode_matrix(data: bytes) -> DenseMatrix:
  if len(data) < _HEADER.size:
    raise ValueError("matrix payload is shorter than its header")
  rows, cols = _HEADER.unpack_from(data)
  expected = _HEADER.size + 8 * rows * cols
  if len(data) != expected:
    raise ValueError(f"matrix payload has {len(data)} bytes, expected {expected}")
  values: Any = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
  return as_matrix(values.reshape(rows, cols).astype(np.float64))


def save_matrix(path: Path, m: DenseMatrix) -> None:
  path.write_bytes(encode_matrix(m))


def load_matrix(path: Path) -> DenseMatrix:
  return decode_matrix(path.read_bytes())
