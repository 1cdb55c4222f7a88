"""Writers for run artifacts: CSV tables, traces, index sets and matrices."""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from pydantic import BaseModel

from clipped_mc.datagen import GeneratedInstance
from clipped_mc.linalg import load_matrix, save_matrix
from clipped_mc.models.observations import IndexSet, ObservedEntries
from clipped_mc.models.solver import SolveResult
from clipped_mc.sampling import clipped_indices


def write_table(frame: pd.DataFrame, path: Path) -> Path:
  """CSV with a header row and no index; identical frames give identical bytes."""
  path.parent.mkdir(parents=True, exist_ok=True)
  frame.to_csv(path, index=False, lineterminator="\n")
  return path


def write_json(payload: BaseModel | dict[str, Any], path: Path) -> Path:
  path.parent.mkdir(parents=True, exist_ok=True)
  if isinstance(payload, BaseModel):
    text = payload.model_dump_json(indent=2)
  else:
    text = json.dumps(payload, indent=2, sort_keys=True)
  path.write_text(text + "\n", encoding="utf-8")
  return path


def trace_frame(result: SolveResult) -> pd.DataFrame:
  """One row per iteration; ADMM runs add their residual columns."""
  frame = pd.DataFrame(
    {
      "iteration": np.arange(len(result.objective_trace)),
      "objective": result.objective_trace,
    }
  )
  if result.residual_trace:
    residuals = np.asarray(result.residual_trace, dtype=np.float64)
    n = min(len(frame), residuals.shape[0])
    frame = frame.iloc[:n].copy()
    frame["primal_residual"] = residuals[:n, 0]
    frame["dual_residual"] = residuals[:n, 1]
    frame["rho"] = residuals[:n, 2]
  return frame


def write_trace(result: SolveResult, path: Path) -> Path:
  return write_table(trace_frame(result), path)


def entries_frame(obs: ObservedEntries) -> pd.DataFrame:
  return pd.DataFrame({"row": obs.row_idx, "col": obs.col_idx, "value": obs.values})


def write_index_set(s: IndexSet, path: Path) -> Path:
  path.parent.mkdir(parents=True, exist_ok=True)
  path.write_text(s.to_csv(), encoding="utf-8")
  return path


def write_matrix(m: NDArray[np.float64], path: Path) -> Path:
  path.parent.mkdir(parents=True, exist_ok=True)
  save_matrix(path, m)
  return path


def write_instance(instance: GeneratedInstance, directory: Path, stem: str) -> Path:
  """`<stem>.bin` holds M, `<stem>.json` the spec and clipping rate, and the
  three parts go to `<stem>_{train,val,test}.csv`.

  The training positions and the clipped subset of them are also written as
  index lists, `<stem>_omega.csv` and `<stem>_clipped.csv`; the latter only
  when a ceiling is set.
  """
  matrix_path = write_matrix(instance.m, directory / f"{stem}.bin")
  write_json(instance.sidecar(), directory / f"{stem}.json")
  for name, part in (
    ("train", instance.train),
    ("val", instance.val),
    ("test", instance.test),
  ):
    write_table(entries_frame(part), directory / f"{stem}_{name}.csv")
  write_index_set(instance.train.index_set(), directory / f"{stem}_omega.csv")
  spec = instance.train.spec
  if spec is not None and spec.has_ceiling:
    clipped = clipped_indices(instance.train)
    write_index_set(clipped, directory / f"{stem}_clipped.csv")
  return matrix_path


def read_instance_matrix(path: Path) -> tuple[NDArray[np.float64], dict[str, Any]]:
  """Matrix and sidecar written by `write_instance`."""
  sidecar = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
  return load_matrix(path), sidecar
