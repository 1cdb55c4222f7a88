"""Observed index sets and sparse observed entries."""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from clipped_mc.errors import ShapeMismatchError
from clipped_mc.models.clip_spec import THRESHOLD_RTOL, ClipSpec


def _readonly(arr: NDArray[Any]) -> NDArray[Any]:
  arr.setflags(write=False)
  return arr


def _slack(thresholds: NDArray[np.float64]) -> NDArray[np.float64]:
  finite = np.where(np.isfinite(thresholds), thresholds, 0.0)
  return THRESHOLD_RTOL * np.maximum(1.0, np.abs(finite))


@dataclass(frozen=True, eq=False)
class IndexSet:
  """A set of (row, col) positions of an n1 x n2 matrix, stored as a mask."""

  rows: int
  cols: int
  mask: NDArray[np.bool_]

  def __post_init__(self) -> None:
    mask = np.array(self.mask, dtype=bool)
    if mask.shape != (self.rows, self.cols):
      raise ShapeMismatchError(
        f"mask shape {mask.shape} does not match ({self.rows}, {self.cols})"
      )
    object.__setattr__(self, "mask", _readonly(mask))

  @classmethod
  def empty(cls, rows: int, cols: int) -> IndexSet:
    return cls(rows, cols, np.zeros((rows, cols), dtype=bool))

  @classmethod
  def full(cls, rows: int, cols: int) -> IndexSet:
    return cls(rows, cols, np.ones((rows, cols), dtype=bool))

  @classmethod
  def from_pairs(
    cls, rows: int, cols: int, pairs: Iterable[tuple[int, int]]
  ) -> IndexSet:
    mask = np.zeros((rows, cols), dtype=bool)
    for i, j in pairs:
      if not (0 <= i < rows and 0 <= j < cols):
        raise ValueError(f"index ({i}, {j}) outside {rows}x{cols}")
      mask[i, j] = True
    return cls(rows, cols, mask)

  @property
  def shape(self) -> tuple[int, int]:
    return (self.rows, self.cols)

  def indices(self) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """Row and column arrays in row-major order."""
    r, c = np.nonzero(self.mask)
    return r, c

  def pairs(self) -> list[tuple[int, int]]:
    r, c = self.indices()
    return [(int(i), int(j)) for i, j in zip(r, c, strict=True)]

  def __len__(self) -> int:
    return int(self.mask.sum())

  def __iter__(self) -> Iterator[tuple[int, int]]:
    return iter(self.pairs())

  def __contains__(self, item: object) -> bool:
    match item:
      case (int() | np.integer() as i, int() | np.integer() as j):
        if 0 <= i < self.rows and 0 <= j < self.cols:
          return bool(self.mask[i, j])
        return False
      case _:
        return False

  def __eq__(self, other: object) -> bool:
    if not isinstance(other, IndexSet):
      return NotImplemented
    return self.shape == other.shape and bool(np.array_equal(self.mask, other.mask))

  __hash__ = None  # type: ignore[assignment]

  def _check(self, other: IndexSet) -> None:
    if self.shape != other.shape:
      raise ShapeMismatchError(f"index sets {self.shape} and {other.shape} differ")

  def __or__(self, other: IndexSet) -> IndexSet:
    self._check(other)
    return IndexSet(self.rows, self.cols, self.mask | other.mask)

  def __and__(self, other: IndexSet) -> IndexSet:
    self._check(other)
    return IndexSet(self.rows, self.cols, self.mask & other.mask)

  def __sub__(self, other: IndexSet) -> IndexSet:
    self._check(other)
    return IndexSet(self.rows, self.cols, self.mask & ~other.mask)

  def complement(self) -> IndexSet:
    return IndexSet(self.rows, self.cols, ~self.mask)

  def to_csv(self) -> str:
    """Sorted "i,j" lines, one per member."""
    return "".join(f"{i},{j}\n" for i, j in self.pairs())

  @classmethod
  def from_csv(cls, rows: int, cols: int, text: str) -> IndexSet:
    pairs: list[tuple[int, int]] = []
    for line in text.splitlines():
      if not line.strip():
        continue
      i, j = line.split(",")
      pairs.append((int(i), int(j)))
    return cls.from_pairs(rows, cols, pairs)


@dataclass(frozen=True, eq=False)
class ObservedEntries:
  """Observed values of an n1 x n2 matrix at unique positions.

  Entries are kept in row-major order. When `spec` is set every value must lie
  within its thresholds, since observations are recorded after clipping.
  """

  rows: int
  cols: int
  row_idx: NDArray[np.intp]
  col_idx: NDArray[np.intp]
  values: NDArray[np.float64]
  spec: ClipSpec | None = field(default=None)

  def __post_init__(self) -> None:
    if self.rows <= 0 or self.cols <= 0:
      raise ValueError(f"dimensions must be positive, got ({self.rows}, {self.cols})")
    r = np.asarray(self.row_idx, dtype=np.intp).ravel()
    c = np.asarray(self.col_idx, dtype=np.intp).ravel()
    v = np.asarray(self.values, dtype=np.float64).ravel()
    if not (r.shape == c.shape == v.shape):
      raise ShapeMismatchError("row, column and value arrays differ in length")
    if r.size:
      if r.min() < 0 or r.max() >= self.rows or c.min() < 0 or c.max() >= self.cols:
        raise ValueError(f"observed index outside {self.rows}x{self.cols}")
      if not np.isfinite(v).all():
        raise ValueError("observed values must be finite")
    flat = r * self.cols + c
    order = np.argsort(flat, kind="stable")
    flat, r, c, v = flat[order], r[order], c[order], v[order]
    if flat.size > 1 and bool((np.diff(flat) == 0).any()):
      dup = int(flat[np.flatnonzero(np.diff(flat) == 0)[0]])
      raise ValueError(f"duplicate observation at {divmod(dup, self.cols)}")
    object.__setattr__(self, "row_idx", _readonly(r))
    object.__setattr__(self, "col_idx", _readonly(c))
    object.__setattr__(self, "values", _readonly(v))
    if self.spec is not None:
      self._check_within(self.spec)

  def _check_within(self, spec: ClipSpec) -> None:
    upper = spec.upper_at(self.row_idx, self.col_idx)
    lower = spec.lower_at(self.row_idx, self.col_idx)
    if bool((self.values > upper + _slack(upper)).any()):
      raise ValueError("observed value exceeds the ceiling; clip observations first")
    if bool((self.values < lower - _slack(lower)).any()):
      raise ValueError("observed value is below the floor; clip observations first")

  @classmethod
  def from_triples(
    cls,
    rows: int,
    cols: int,
    triples: Iterable[tuple[int, int, float]],
    spec: ClipSpec | None = None,
  ) -> ObservedEntries:
    items = list(triples)
    r = np.array([t[0] for t in items], dtype=np.intp)
    c = np.array([t[1] for t in items], dtype=np.intp)
    v = np.array([t[2] for t in items], dtype=np.float64)
    return cls(rows, cols, r, c, v, spec)

  @classmethod
  def from_dense(
    cls,
    m: NDArray[np.float64],
    where: IndexSet | None = None,
    spec: ClipSpec | None = None,
  ) -> ObservedEntries:
    """Observe `m` on `where` (all entries when omitted)."""
    rows, cols = m.shape
    if where is None:
      where = IndexSet.full(rows, cols)
    if where.shape != m.shape:
      raise ShapeMismatchError(f"index set {where.shape} does not match {m.shape}")
    r, c = where.indices()
    return cls(rows, cols, r, c, np.asarray(m, dtype=np.float64)[r, c], spec)

  @property
  def shape(self) -> tuple[int, int]:
    return (self.rows, self.cols)

  def __len__(self) -> int:
    return int(self.values.shape[0])

  def triples(self) -> list[tuple[int, int, float]]:
    return [
      (int(i), int(j), float(v))
      for i, j, v in zip(self.row_idx, self.col_idx, self.values, strict=True)
    ]

  def mask(self) -> NDArray[np.bool_]:
    out = np.zeros(self.shape, dtype=bool)
    out[self.row_idx, self.col_idx] = True
    return out

  def index_set(self) -> IndexSet:
    return IndexSet(self.rows, self.cols, self.mask())

  def to_dense(self, fill: float = 0.0) -> NDArray[np.float64]:
    """Values at observed positions, `fill` elsewhere."""
    out = np.full(self.shape, fill, dtype=np.float64)
    out[self.row_idx, self.col_idx] = self.values
    return out

  def values_at(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Entries of `x` at the observed positions, in entry order."""
    if x.shape != self.shape:
      raise ShapeMismatchError(f"matrix {x.shape} does not match {self.shape}")
    return x[self.row_idx, self.col_idx]

  def subset(self, keep: NDArray[np.bool_]) -> ObservedEntries:
    """Entries where `keep` (aligned with entry order) is true."""
    return ObservedEntries(
      self.rows,
      self.cols,
      self.row_idx[keep],
      self.col_idx[keep],
      self.values[keep],
      self.spec,
    )

  def with_spec(self, spec: ClipSpec | None) -> ObservedEntries:
    """Attach thresholds to already-clipped values."""
    return ObservedEntries(
      self.rows, self.cols, self.row_idx, self.col_idx, self.values, spec
    )

  def clipped(self, spec: ClipSpec) -> ObservedEntries:
    """Apply `spec` to the values and attach it."""
    v = self.values
    if spec.has_ceiling:
      v = np.minimum(v, spec.upper_at(self.row_idx, self.col_idx))
    if spec.has_floor:
      v = np.maximum(v, spec.lower_at(self.row_idx, self.col_idx))
    return ObservedEntries(self.rows, self.cols, self.row_idx, self.col_idx, v, spec)

  def restricted(
    self, kept_rows: NDArray[np.intp], kept_cols: NDArray[np.intp]
  ) -> ObservedEntries:
    """Keep only the listed rows/columns, renumbered densely in the given order."""
    row_map = np.full(self.rows, -1, dtype=np.intp)
    row_map[kept_rows] = np.arange(kept_rows.size)
    col_map = np.full(self.cols, -1, dtype=np.intp)
    col_map[kept_cols] = np.arange(kept_cols.size)
    r = row_map[self.row_idx]
    c = col_map[self.col_idx]
    keep = (r >= 0) & (c >= 0)
    spec = self.spec
    if spec is not None:
      grid = np.ix_(kept_rows, kept_cols)
      ceiling_m, floor_m = spec.ceiling_matrix, spec.floor_matrix
      spec = ClipSpec(
        ceiling=spec.ceiling,
        floor=spec.floor,
        ceiling_matrix=None if ceiling_m is None else ceiling_m[grid],
        floor_matrix=None if floor_m is None else floor_m[grid],
      )
    return ObservedEntries(
      int(kept_rows.size),
      int(kept_cols.size),
      r[keep],
      c[keep],
      self.values[keep],
      spec,
    )
