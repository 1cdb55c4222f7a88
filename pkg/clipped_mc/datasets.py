"""Rating-file ingestion (MovieLens 100K, FilmTrust) and empty-row pruning."""

import io
import zipfile
from pathlib import Path
from typing import NamedTuple

import httpx
import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray
from tenacity import (
  retry,
  retry_if_exception,
  stop_after_attempt,
  wait_exponential,
)

from clipped_mc.errors import DatasetFormatError, ShapeMismatchError
from clipped_mc.models.observations import ObservedEntries
from clipped_mc.settings import settings

log = structlog.get_logger(__name__)

MOVIELENS_SHAPE = (943, 1682)
FILMTRUST_SHAPE = (1508, 2071)

# name -> (url, directory the archive is unpacked into, rating file)
_DATASETS = {
  "movielens-100k": (
    "https://files.grouplens.org/datasets/movielens/ml-100k.zip",
    Path(),
    Path("ml-100k") / "u.data",
  ),
  "filmtrust": (
    "https://guoguibing.github.io/librec/datasets/filmtrust.zip",
    Path("filmtrust"),
    Path("filmtrust") / "ratings.txt",
  ),
}


def dataset_urls() -> dict[str, str]:
  """Public download locations of the supported rating datasets."""
  return {name: url for name, (url, _, _) in _DATASETS.items()}


def default_path(name: str, root: Path | None = None) -> Path:
  """Where `download_dataset` leaves the rating file of `name`."""
  if name not in _DATASETS:
    raise ValueError(f"unknown dataset {name!r}; expected one of {sorted(_DATASETS)}")
  return (root or settings.data_root) / _DATASETS[name][2]


def _read_table(path: Path, sep: str, names: list[str]) -> pd.DataFrame:
  text = Path(path).read_text(encoding="utf-8")
  if not text.strip():
    raise DatasetFormatError(f"{path} is empty")
  try:
    return pd.read_csv(
      io.StringIO(text),
      sep=sep,
      header=None,
      names=names,
      dtype=str,
      keep_default_na=False,
      skip_blank_lines=False,
      engine="python",
    )
  except pd.errors.ParserError as e:
    raise DatasetFormatError(f"{path}: {e}") from e


def _numeric_column(frame: pd.DataFrame, column: str) -> NDArray[np.float64]:
  values = pd.to_numeric(frame[column].str.strip(), errors="coerce").to_numpy(
    dtype=np.float64
  )
  bad = np.flatnonzero(~np.isfinite(values))
  if bad.size:
    line = int(bad[0]) + 1
    raise DatasetFormatError(
      f"{column} {frame[column].iloc[bad[0]]!r} is not a number", line
    )
  return values


def _ids(frame: pd.DataFrame, column: str) -> NDArray[np.intp]:
  values = _numeric_column(frame, column)
  bad = np.flatnonzero((values < 1) | (values != np.round(values)))
  if bad.size:
    raise DatasetFormatError(
      f"{column} id must be a positive integer, got {values[bad[0]]:g}",
      int(bad[0]) + 1,
    )
  return values.astype(np.intp) - 1


def _to_entries(
  users: NDArray[np.intp],
  items: NDArray[np.intp],
  ratings: NDArray[np.float64],
  declared: tuple[int, int],
  source: Path,
) -> ObservedEntries:
  frame = pd.DataFrame({"user": users, "item": items, "rating": ratings})
  deduped = frame.drop_duplicates(subset=["user", "item"], keep="last")
  dropped = len(frame) - len(deduped)
  if dropped:
    log.warning("duplicate_ratings", path=str(source), dropped=dropped)
  rows = max(declared[0], int(users.max()) + 1)
  cols = max(declared[1], int(items.max()) + 1)
  return ObservedEntries(
    rows,
    cols,
    deduped["user"].to_numpy(dtype=np.intp),
    deduped["item"].to_numpy(dtype=np.intp),
    deduped["rating"].to_numpy(dtype=np.float64),
  )


def load_movielens(
  path: Path, shape: tuple[int, int] = MOVIELENS_SHAPE
) -> ObservedEntries:
  """Read a tab-separated "user item rating timestamp" file (1-indexed ids).

  Raises:
    DatasetFormatError: On an empty file, a malformed line or a rating outside
      the integers 1..5.
  """
  frame = _read_table(path, "\t", ["user", "item", "rating", "timestamp"])
  users = _ids(frame, "user")
  items = _ids(frame, "item")
  ratings = _numeric_column(frame, "rating")
  bad = np.flatnonzero((ratings < 1) | (ratings > 5) | (ratings != np.round(ratings)))
  if bad.size:
    raise DatasetFormatError(
      f"rating {ratings[bad[0]]:g} is not an integer in 1..5", int(bad[0]) + 1
    )
  entries = _to_entries(users, items, ratings, shape, path)
  log.info(
    "movielens_loaded", path=str(path), entries=len(entries), shape=entries.shape
  )
  return entries


def load_filmtrust(
  path: Path,
  double_ratings: bool = True,
  shape: tuple[int, int] = FILMTRUST_SHAPE,
) -> ObservedEntries:
  """Read a whitespace-separated "user item rating" file on the 0.5..4.0 grid.

  With `double_ratings` the values become the integers 1..8.

  Raises:
    DatasetFormatError: On an empty file, a malformed line or an off-grid rating.
  """
  frame = _read_table(path, r"\s+", ["user", "item", "rating"])
  users = _ids(frame, "user")
  items = _ids(frame, "item")
  ratings = _numeric_column(frame, "rating")
  doubled = 2.0 * ratings
  off_grid = np.abs(doubled - np.round(doubled)) > 1e-9
  bad = np.flatnonzero(off_grid | (doubled < 1.0 - 1e-9) | (doubled > 8.0 + 1e-9))
  if bad.size:
    raise DatasetFormatError(
      f"rating {ratings[bad[0]]:g} is not on the 0.5..4.0 grid", int(bad[0]) + 1
    )
  values = np.round(doubled) if double_ratings else ratings
  entries = _to_entries(users, items, values, shape, path)
  log.info(
    "filmtrust_loaded", path=str(path), entries=len(entries), shape=entries.shape
  )
  return entries


class PrunedSplit(NamedTuple):
  train: ObservedEntries
  val: ObservedEntries
  test: ObservedEntries
  kept_rows: NDArray[np.intp]
  kept_cols: NDArray[np.intp]


def prune_empty(
  train: ObservedEntries, val: ObservedEntries, test: ObservedEntries
) -> PrunedSplit:
  """Drop users and items without training entries from all three parts.

  Kept rows and columns are renumbered densely in their original order.

  Raises:
    ShapeMismatchError: If the parts have different dimensions.
    ValueError: If no training entry remains.
  """
  if not (train.shape == val.shape == test.shape):
    raise ShapeMismatchError(
      f"split parts differ in shape: {train.shape}, {val.shape}, {test.shape}"
    )
  kept_rows = np.unique(train.row_idx)
  kept_cols = np.unique(train.col_idx)
  if kept_rows.size == 0:
    raise ValueError("every row would be pruned: the training part is empty")
  pruned = PrunedSplit(
    train.restricted(kept_rows, kept_cols),
    val.restricted(kept_rows, kept_cols),
    test.restricted(kept_rows, kept_cols),
    kept_rows,
    kept_cols,
  )
  log.info(
    "pruned_empty",
    rows_removed=train.rows - kept_rows.size,
    cols_removed=train.cols - kept_cols.size,
    val_removed=len(val) - len(pruned.val),
    test_removed=len(test) - len(pruned.test),
  )
  return pruned


def _is_transient(error: BaseException) -> bool:
  if isinstance(error, httpx.TransportError):
    return True
  return isinstance(error, httpx.HTTPStatusError) and error.response.status_code >= 500


@retry(
  retry=retry_if_exception(_is_transient),
  stop=stop_after_attempt(4),
  wait=wait_exponential(multiplier=0.5, max=8.0),
  reraise=True,
)
def _fetch(client: httpx.Client, url: str) -> bytes:
  response = client.get(url, follow_redirects=True)
  response.raise_for_status()
  return response.content


def download_dataset(
  name: str, root: Path | None = None, client: httpx.Client | None = None
) -> Path:
  """Download and unpack dataset `name` under `root`; returns the rating file.

  Transient network failures and 5xx responses are retried with backoff.
  """
  url = dataset_urls().get(name)
  if url is None:
    raise ValueError(f"unknown dataset {name!r}; expected one of {sorted(_DATASETS)}")
  root = root or settings.data_root
  target = default_path(name, root)
  log.info("dataset_download_started", name=name, url=url)
  if client is None:
    with httpx.Client(timeout=60.0) as own:
      payload = _fetch(own, url)
  else:
    payload = _fetch(client, url)
  with zipfile.ZipFile(io.BytesIO(payload)) as archive:
    archive.extractall(root / _DATASETS[name][1])
  if not target.exists():
    raise DatasetFormatError(f"archive from {url} has no {target.relative_to(root)}")
  log.info("dataset_download_finished", name=name, path=str(target))
  return target
