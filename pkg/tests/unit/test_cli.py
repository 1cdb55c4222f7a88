"""Tests for the command line."""

import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from clipped_mc.cli import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_RUNTIME, app

runner = CliRunner()

SYNTH = ["--n1", "8", "--n2", "10", "--rank", "2", "--ceiling", "7"]


@pytest.fixture
def single_solve_config(tmp_path: Path) -> Path:
  """A tiny single-solve config with an unreachable acceptance bound."""
  path = tmp_path / "cfg.json"
  path.write_text(
    json.dumps(
      {
        "pipeline": "single-solve",
        "seeds": [0],
        "synth": {"n1": 8, "n2": 10, "r": 2, "C": 7.0, "nmf_iters": 50},
        "solver": {"variant": "Tr-MC", "max_iter": 5},
        "acceptance": [{"variant": "Tr-MC", "metric": "rel_rmse_all", "max": 0.0}],
      }
    ),
    encoding="utf-8",
  )
  return path


class TestCli:
  """Tests for the typer app."""

  def test_help(self) -> None:
    """Test that every subcommand is listed."""
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in ("run", "generate", "solve", "diagnose", "sweep", "task1", "task2"):
      assert command in result.stdout

  def test_dry_run_prints_plan(self) -> None:
    """Test that a dry run validates and prints the solve count."""
    result = runner.invoke(
      app,
      ["sweep", *SYNTH[:6], "--ceilings", "5,7", "--variants", "Tr-MC", "--dry-run"],
    )
    assert result.exit_code == 0
    assert "solves: 20" in result.stdout

  def test_invalid_config(self) -> None:
    """Test that a sweep without ceilings exits with the config code."""
    result = runner.invoke(app, ["sweep", *SYNTH[:6], "--variants", "Tr-MC"])
    assert result.exit_code == EXIT_CONFIG

  def test_unknown_variant(self) -> None:
    """Test that a bad variant name is a config error."""
    result = runner.invoke(
      app,
      ["sweep", *SYNTH[:6], "--ceilings", "5", "--variants", "Nope", "--dry-run"],
    )
    assert result.exit_code == EXIT_CONFIG

  def test_acceptance_failure_exit_code(
    self, single_solve_config: Path, tmp_path: Path
  ) -> None:
    """Test that a violated acceptance bound exits with its own code."""
    result = runner.invoke(
      app, ["run", str(single_solve_config), "--out", str(tmp_path / "run")]
    )
    assert result.exit_code == EXIT_ACCEPTANCE
    assert (tmp_path / "run" / "summary.csv").exists()

  def test_solve(self, tmp_path: Path) -> None:
    """Test a single solve from flags."""
    result = runner.invoke(
      app,
      [
        "solve",
        *SYNTH,
        "--variant",
        "Tr-CMC",
        "--max-iter",
        "5",
        "--out",
        str(tmp_path),
      ],
    )
    assert result.exit_code == 0
    assert (tmp_path / "estimate.bin").exists()

  def test_generate(self, tmp_path: Path) -> None:
    """Test writing a synthetic instance."""
    result = runner.invoke(
      app, ["generate", *SYNTH, "--seed", "3", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0
    assert (tmp_path / "synth_8x10_r2_s3.bin").exists()
    assert (tmp_path / "synth_8x10_r2_s3_train.csv").exists()

  def test_missing_rating_file(self, tmp_path: Path) -> None:
    """Test that an absent rating file is a runtime failure."""
    result = runner.invoke(
      app,
      [
        "task2",
        "--dataset",
        "filmtrust",
        "--dataset-path",
        str(tmp_path / "missing.txt"),
        "--variants",
        "Tr-CMC",
        "--out",
        str(tmp_path / "run"),
      ],
    )
    assert result.exit_code == EXIT_RUNTIME

  def test_plotdata_on_empty_dir(self, tmp_path: Path) -> None:
    """Test that a directory without artifacts is reported."""
    result = runner.invoke(app, ["plotdata", str(tmp_path)])
    assert result.exit_code == EXIT_RUNTIME

  def test_fetch_lists_urls(self) -> None:
    """Test that fetch prints both dataset locations."""
    result = runner.invoke(app, ["fetch"])
    assert result.exit_code == 0
    assert "movielens-100k" in result.stdout
    assert "filmtrust" in result.stdout

  def test_every_grid_config_failing(self, tmp_path: Path) -> None:
    """Test that a grid with no working configuration is a runtime failure."""
    path = tmp_path / "cfg.json"
    path.write_text(
      json.dumps(
        {
          "pipeline": "synthetic-sweep",
          "seeds": [0],
          "ceilings": [7.0],
          "synth": {"n1": 8, "n2": 10, "r": 2, "nmf_iters": 50},
          "variants": ["Fro-MC"],
          "grids": {
            "Fro-MC": [{"variant": "Fro-MC", "rank_k": 8, "lambda1": 0.0}]
          },
        }
      ),
      encoding="utf-8",
    )
    result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "run")])
    assert result.exit_code == EXIT_RUNTIME
    assert "Run failed" in result.stdout
