"""clipped-mc command line."""

import json
from pathlib import Path
from typing import Annotated, Any

import structlog
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from structlog.typing import FilteringBoundLogger

from clipped_mc.datagen import generate_synthetic
from clipped_mc.datasets import dataset_urls, download_dataset
from clipped_mc.errors import CmcError
from clipped_mc.execution.run_config import Pipeline, RunConfig
from clipped_mc.execution.runner import RunOutcome, plan, run_experiment
from clipped_mc.export.artifacts import write_instance
from clipped_mc.export.plotdata import emit_plotdata
from clipped_mc.logging_config import configure_logging
from clipped_mc.models.solver import Variant
from clipped_mc.models.synth import SynthSpec
from clipped_mc.settings import settings

EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_ACCEPTANCE = 3

console = Console()


def get_logger() -> FilteringBoundLogger:
  """Configure logging and return a logger instance."""
  configure_logging(settings.log_level)
  return structlog.get_logger()


app = typer.Typer(
  help="Low-rank matrix completion from clipped observations",
  no_args_is_help=True,
)

ConfigOpt = Annotated[
  Path | None, typer.Option("--config", help="JSON run config; wins over flags")
]
OutOpt = Annotated[Path | None, typer.Option("--out", help="Run directory")]
JobsOpt = Annotated[int | None, typer.Option("--jobs", help="Parallel grid solves")]
DryRunOpt = Annotated[
  bool, typer.Option("--dry-run", help="Validate and print the plan only")
]
SeedsOpt = Annotated[
  str | None, typer.Option("--seeds", help="Comma-separated seeds, e.g. 0,1,2")
]
VariantsOpt = Annotated[
  str | None, typer.Option("--variants", help="Comma-separated variant names")
]


def _csv(text: str | None, cast: type[Any]) -> list[Any] | None:
  if text is None:
    return None
  return [cast(part.strip()) for part in text.split(",") if part.strip()]


def _merge(
  base: dict[str, Any], flags: dict[str, Any], log: FilteringBoundLogger, prefix: str
) -> dict[str, Any]:
  merged = dict(base)
  for key, value in flags.items():
    if value is None:
      continue
    if isinstance(value, dict) and isinstance(merged.get(key), dict):
      merged[key] = _merge(merged[key], value, log, f"{prefix}{key}.")
    elif key in merged and merged[key] != value:
      log.warning("config_overrides_flag", key=f"{prefix}{key}", used=merged[key])
    else:
      merged[key] = value
  return merged


def resolve_config(
  flags: dict[str, Any], config: Path | None, log: FilteringBoundLogger
) -> RunConfig:
  """Combine a config file with command-line flags; the file wins conflicts."""
  base: dict[str, Any] = {}
  if config is not None:
    base = json.loads(config.read_text(encoding="utf-8"))
  flags = {k: v for k, v in flags.items() if v is not None and v != {}}
  return RunConfig.model_validate(_merge(base, flags, log, ""))


def _summary_table(outcome: RunOutcome) -> Table:
  table = Table(title=f"Summary ({outcome.run_dir})")
  for column in outcome.summary.columns:
    table.add_column(str(column))
  for row in outcome.summary.itertuples(index=False):
    table.add_row(*(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
  return table


def _execute(
  flags: dict[str, Any],
  config: Path | None,
  out: Path | None,
  dry_run: bool,
) -> None:
  log = get_logger()
  try:
    cfg = resolve_config(flags, config, log)
  except (ValidationError, ValueError, OSError) as e:
    console.print(f"[bold red]Invalid configuration:[/bold red] {e}")
    raise typer.Exit(EXIT_CONFIG) from e

  if dry_run:
    for line in plan(cfg):
      console.print(line)
    return

  run_dir = out or Path("runs") / cfg.pipeline.value
  try:
    outcome = run_experiment(cfg, run_dir)
  except ExceptionGroup as group:
    for error in group.exceptions:
      log.error("grid_config_failed", error=f"{type(error).__name__}: {error}")
    console.print(f"[bold red]Run failed:[/bold red] {group.message}")
    raise typer.Exit(EXIT_RUNTIME) from group
  except (CmcError, ValueError, ArithmeticError, RuntimeError, OSError) as e:
    log.error("run_failed", error=f"{type(e).__name__}: {e}")
    console.print(f"[bold red]Run failed:[/bold red] {e}")
    raise typer.Exit(EXIT_RUNTIME) from e

  console.print(_summary_table(outcome))
  if not outcome.accepted:
    for failure in outcome.failures:
      console.print(f"[bold yellow]Acceptance failed:[/bold yellow] {failure}")
    raise typer.Exit(EXIT_ACCEPTANCE)
  console.print(f"Artifacts written to [bold blue]{run_dir}[/bold blue]")


def _synth_flags(
  n1: int | None,
  n2: int | None,
  rank: int | None,
  magnitude: int | None,
  p: float | None,
  ceiling: float | None,
) -> dict[str, Any]:
  return {
    k: v
    for k, v in {
      "n1": n1,
      "n2": n2,
      "r": rank,
      "magnitude": magnitude,
      "p": p,
      "ceiling": ceiling,
    }.items()
    if v is not None
  }


@app.command()
def run(
  config: Annotated[Path, typer.Argument(help="JSON run config")],
  out: OutOpt = None,
  jobs: JobsOpt = None,
  dry_run: DryRunOpt = False,
):
  """Run the experiment described by a config file."""
  _execute({"jobs": jobs}, config, out, dry_run)


@app.command()
def generate(
  n1: int = 100,
  n2: int = 160,
  rank: int = 5,
  magnitude: int = 15,
  p: float = 0.8,
  ceiling: Annotated[float | None, typer.Option(help="Clipping threshold C")] = None,
  seed: int = 0,
  continuous: bool = False,
  out: Annotated[Path, typer.Option(help="Output directory")] = Path("instances"),
):
  """Generate a synthetic low-rank instance and its clipped split."""
  log = get_logger()
  try:
    spec = SynthSpec(
      n1=n1,
      n2=n2,
      r=rank,
      magnitude=magnitude,
      p=p,
      ceiling=ceiling,
      seed=seed,
      continuous=continuous,
    )
  except ValidationError as e:
    console.print(f"[bold red]Invalid configuration:[/bold red] {e}")
    raise typer.Exit(EXIT_CONFIG) from e
  try:
    instance = generate_synthetic(spec)
  except CmcError as e:
    console.print(f"[bold red]Generation failed:[/bold red] {e}")
    raise typer.Exit(EXIT_RUNTIME) from e
  path = write_instance(instance, out, f"synth_{n1}x{n2}_r{rank}_s{seed}")
  log.info("instance_written", path=str(path))
  console.print(
    f"Wrote [bold blue]{path}[/bold blue] "
    f"(clipping rate {instance.clipping_rate:.4f}, attempts {instance.attempts})"
  )


@app.command()
def solve(
  variant: Annotated[Variant, typer.Option(help="Estimator to fit")] = Variant.FRO_CMC,
  rank_k: int | None = None,
  lambda1: float | None = None,
  lambda2: float | None = None,
  max_iter: int | None = None,
  n1: int | None = None,
  n2: int | None = None,
  rank: int | None = None,
  magnitude: int | None = None,
  p: float | None = None,
  ceiling: float | None = None,
  seed: int | None = None,
  config: ConfigOpt = None,
  out: OutOpt = None,
  dry_run: DryRunOpt = False,
):
  """Fit one solver configuration to a generated instance."""
  solver = {
    k: v
    for k, v in {
      "variant": variant.value,
      "rank_k": rank_k,
      "lambda1": lambda1,
      "lambda2": lambda2,
      "max_iter": max_iter,
    }.items()
    if v is not None
  }
  flags = {
    "pipeline": Pipeline.SINGLE_SOLVE.value,
    "solver": solver,
    "synth": _synth_flags(n1, n2, rank, magnitude, p, ceiling),
    "seeds": None if seed is None else [seed],
  }
  _execute(flags, config, out, dry_run)


@app.command()
def diagnose(
  n1: int | None = None,
  n2: int | None = None,
  rank: int | None = None,
  magnitude: int | None = None,
  ceiling: float | None = None,
  beta: float | None = None,
  samples: int | None = None,
  ascent_steps: int | None = None,
  seed: int | None = None,
  config: ConfigOpt = None,
  out: OutOpt = None,
  dry_run: DryRunOpt = False,
):
  """Coherence, nu_B, rho estimates and p_min of a generated ground truth."""
  options = {"beta": beta, "samples": samples, "ascent_steps": ascent_steps}
  flags = {
    "pipeline": Pipeline.DIAGNOSE.value,
    "synth": _synth_flags(n1, n2, rank, magnitude, None, ceiling),
    "diagnose": {k: v for k, v in options.items() if v is not None},
    "seeds": None if seed is None else [seed],
  }
  _execute(flags, config, out, dry_run)


@app.command()
def sweep(
  ceilings: Annotated[
    str | None, typer.Option(help="Comma-separated thresholds, e.g. 5,7,9")
  ] = None,
  n1: int | None = None,
  n2: int | None = None,
  rank: int | None = None,
  magnitude: int | None = None,
  p: float | None = None,
  seeds: SeedsOpt = None,
  variants: VariantsOpt = None,
  config: ConfigOpt = None,
  out: OutOpt = None,
  jobs: JobsOpt = None,
  dry_run: DryRunOpt = False,
):
  """rel-RMSE against clipping rate on generated instances."""
  flags = {
    "pipeline": Pipeline.SYNTHETIC_SWEEP.value,
    "ceilings": _csv(ceilings, float),
    "synth": _synth_flags(n1, n2, rank, magnitude, p, None),
    "seeds": _csv(seeds, int),
    "variants": _csv(variants, str),
    "jobs": jobs,
  }
  _execute(flags, config, out, dry_run)


def _task(
  pipeline: Pipeline,
  dataset: str | None,
  dataset_path: Path | None,
  seeds: str | None,
  variants: str | None,
  config: Path | None,
  out: Path | None,
  jobs: int | None,
  dry_run: bool,
) -> None:
  flags = {
    "pipeline": pipeline.value,
    "dataset": dataset,
    "dataset_path": None if dataset_path is None else str(dataset_path),
    "seeds": _csv(seeds, int),
    "variants": _csv(variants, str),
    "jobs": jobs,
  }
  _execute(flags, config, out, dry_run)


DatasetOpt = Annotated[str | None, typer.Option(help="movielens-100k or filmtrust")]
DatasetPathOpt = Annotated[Path | None, typer.Option(help="Rating file to read")]


@app.command()
def task1(
  dataset: DatasetOpt = None,
  dataset_path: DatasetPathOpt = None,
  seeds: SeedsOpt = None,
  variants: VariantsOpt = None,
  config: ConfigOpt = None,
  out: OutOpt = None,
  jobs: JobsOpt = None,
  dry_run: DryRunOpt = False,
):
  """Predict which test ratings were above an artificial ceiling."""
  _task(
    Pipeline.REAL_TASK1,
    dataset,
    dataset_path,
    seeds,
    variants,
    config,
    out,
    jobs,
    dry_run,
  )


@app.command()
def task2(
  dataset: DatasetOpt = None,
  dataset_path: DatasetPathOpt = None,
  seeds: SeedsOpt = None,
  variants: VariantsOpt = None,
  config: ConfigOpt = None,
  out: OutOpt = None,
  jobs: JobsOpt = None,
  dry_run: DryRunOpt = False,
):
  """Predict which test ratings sit at the top of the rating scale."""
  _task(
    Pipeline.REAL_TASK2,
    dataset,
    dataset_path,
    seeds,
    variants,
    config,
    out,
    jobs,
    dry_run,
  )


@app.command()
def plotdata(run_dir: Annotated[Path, typer.Argument(help="Run directory")]):
  """Write long-format plot CSVs for a finished run."""
  get_logger()
  try:
    paths = emit_plotdata(run_dir)
  except FileNotFoundError as e:
    console.print(f"[bold red]{e}[/bold red]")
    raise typer.Exit(EXIT_RUNTIME) from e
  for path in paths:
    console.print(f"Wrote [bold blue]{path}[/bold blue]")


@app.command()
def fetch(
  download: Annotated[
    str | None, typer.Option(help="Also download this dataset")
  ] = None,
):
  """Print the public dataset URLs, optionally downloading one."""
  log = get_logger()
  for name, url in dataset_urls().items():
    console.print(f"{name}: {url}")
  if download is None:
    return
  try:
    path = download_dataset(download)
  except ValueError as e:
    console.print(f"[bold red]{e}[/bold red]")
    raise typer.Exit(EXIT_CONFIG) from e
  except Exception as e:
    log.error("download_failed", error=str(e))
    console.print(f"[bold red]Download failed:[/bold red] {e}")
    raise typer.Exit(EXIT_RUNTIME) from e
  console.print(f"Rating file at [bold blue]{path}[/bold blue]")


if __name__ == "__main__":
  app()
