"""Command-line entry point.

Global options come before the subcommand, e.g.
``emoskit --config exp.toml --jobs 4 run``. Failures exit with code 1 and
print one JSON line ``{"error", "message", "context"}`` on stderr.
"""

import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterator, Optional

import typer

from .config import load_config, load_synth_config
from .env import env_int, load_env
from .errors import ConfigError, EmosKitError
from .logging_setup import setup_logging
from .logic.diagnostics import station_diagnostics
from .logic.experiment import (
    calibrate,
    cluster_stations,
    high_resolution_only,
    load_experiment_dataset,
    run_experiment,
    verify,
)
from .logic.exports import emit_reports
from .logic.utils import ensure_output_dir, write_csv
from .schemas.experiment import ExperimentConfig
from .schemas.synth import ExactEmosSpec, SynthConfig
from .services.clustering import write_assignment
from .services.dataset import apply_orographic_correction, load_dataset_dir
from .services.emos import read_parameters, write_parameters
from .services.synthgen import SCENARIOS, cost_equivalent_sweep, generate

logger = logging.getLogger(__name__)

app = typer.Typer(
    help="EMOS calibration and verification of single- and dual-resolution ensemble forecasts.",
    no_args_is_help=True,
    add_completion=False,
)


@dataclass
class _Options:
    config: Path | None
    seed: int | None
    jobs: int
    out: Path | None


def _fail(exc: BaseException, context: dict[str, object]) -> None:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc), "context": context}, default=str)
    typer.echo(line, err=True)
    raise typer.Exit(code=1)


@contextmanager
def _reported() -> Iterator[None]:
    try:
        yield
    except typer.Exit:
        raise
    except EmosKitError as exc:
        _fail(exc, exc.context)
    except Exception as exc:
        logger.exception("Unexpected failure")
        _fail(exc, {})


def _options(ctx: typer.Context) -> _Options:
    opts = ctx.find_object(_Options)
    assert opts is not None
    return opts


def _experiment_config(opts: _Options) -> ExperimentConfig:
    if opts.config is None:
        raise ConfigError("this command needs --config")
    config = load_config(opts.config)
    if opts.seed is not None:
        config = config.model_copy(update={"training": config.training.model_copy(update={"seed": opts.seed})})
    return config


def _out_dir(opts: _Options, config: ExperimentConfig | None = None, default: str = "results") -> Path:
    if opts.out is not None:
        return ensure_output_dir(opts.out)
    if config is not None:
        return ensure_output_dir(config.output.directory)
    return ensure_output_dir(Path(default))


@app.callback()
def _main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Experiment TOML file."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Master seed (overrides the config file)."),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker processes (default: EMOSKIT_JOBS or 1)."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
) -> None:
    load_env()
    setup_logging(logging.DEBUG if verbose else None)
    if jobs is not None and jobs < 1:
        raise typer.BadParameter("--jobs must be at least 1")
    ctx.obj = _Options(config=config, seed=seed, jobs=jobs if jobs is not None else env_int("EMOSKIT_JOBS", 1), out=out)


@app.command()
def simulate(
    ctx: typer.Context,
    stations: Optional[int] = typer.Option(None, "--stations", help="Number of stations."),
    days: Optional[int] = typer.Option(None, "--days", help="Number of initialization days."),
    lead: Optional[list[int]] = typer.Option(None, "--lead", help="Lead time in days (repeatable)."),
    exact: bool = typer.Option(False, "--exact", help="Draw observations from a known EMOS model (single lead)."),
) -> None:
    """Generate a synthetic dual-resolution dataset in the ingest CSV schemas."""
    opts = _options(ctx)
    with _reported():
        synth = (load_synth_config(opts.config) if opts.config is not None else None) or SynthConfig()
        update: dict[str, object] = {}
        if stations is not None:
            update["n_stations"] = stations
        if days is not None:
            update["n_days"] = days
        if lead:
            update["lead_times"] = list(lead)
        if exact and synth.exact_emos is None:
            update["exact_emos"] = ExactEmosSpec()
        if opts.seed is not None:
            update["seed"] = opts.seed
        if update:
            synth = SynthConfig.model_validate({**synth.model_dump(), **update})
        data = generate(synth)
        directory = _out_dir(opts, default="data")
        paths = data.write(directory)
        if data.truth is not None:
            truth_path = directory / "truth.json"
            truth_path.write_text(data.truth.model_dump_json(indent=2) + "\n", encoding="utf-8")
            paths = (*paths, truth_path)
        for path in paths:
            typer.echo(str(path))


@app.command()
def cluster(
    ctx: typer.Context,
    lead: int = typer.Option(1, "--lead", help="Lead time whose training window supplies the features."),
    target: Optional[str] = typer.Option(None, "--date", help="Target day (YYYY-MM-DD); default: first verification day."),
) -> None:
    """Cluster stations on their training-window features and write the assignment."""
    opts = _options(ctx)
    with _reported():
        config = _experiment_config(opts)
        dataset = load_experiment_dataset(config)
        if config.data.orographic_correction:
            dataset = apply_orographic_correction(dataset)
        if target is not None:
            try:
                day = date.fromisoformat(target)
            except ValueError:
                raise ConfigError(f"invalid --date {target!r}") from None
        else:
            day = config.verification.start or dataset.init_dates[0] + timedelta(days=config.training.n_days)
        k = min(config.training.k_clusters, len(dataset.station_ids))
        source = high_resolution_only(dataset, config.scenario.high_label)
        assignment = cluster_stations(source, day, lead, config.training.n_days, k, config.training.seed)
        directory = _out_dir(opts, config)
        path = write_assignment(assignment, directory / "clusters.csv", directory / "centroids.csv")
        typer.echo(str(path))


@app.command(name="calibrate")
def calibrate_command(ctx: typer.Context) -> None:
    """Fit EMOS for every mixture, lead and verification day; write parameters.jsonl."""
    opts = _options(ctx)
    with _reported():
        config = _experiment_config(opts)
        records = calibrate(config, jobs=opts.jobs)
        path = write_parameters(records, _out_dir(opts, config) / "parameters.jsonl")
        typer.echo(str(path))


@app.command(name="verify")
def verify_command(
    ctx: typer.Context,
    parameters: Path = typer.Option(..., "--parameters", "-p", help="parameters.jsonl written by calibrate."),
) -> None:
    """Score held-out forecasts with fitted parameters and write the reports."""
    opts = _options(ctx)
    with _reported():
        config = _experiment_config(opts)
        table = verify(config, read_parameters(parameters), jobs=opts.jobs)
        for path in emit_reports(table, _out_dir(opts, config)).values():
            typer.echo(str(path))


@app.command()
def run(ctx: typer.Context) -> None:
    """Calibrate and verify end to end, then write the reports."""
    opts = _options(ctx)
    with _reported():
        config = _experiment_config(opts)
        table = run_experiment(config, jobs=opts.jobs)
        for path in emit_reports(table, _out_dir(opts, config)).values():
            typer.echo(str(path))


@app.command()
def diagnose(
    ctx: typer.Context,
    data: Optional[Path] = typer.Option(None, "--data", help="Dataset directory (default: from --config)."),
    high: Optional[str] = typer.Option(None, "--high", help="High-resolution group label."),
    low: Optional[str] = typer.Option(None, "--low", help="Low-resolution group label."),
    size: int = typer.Option(50, "--size", help="Members per group after subsampling."),
    lead: Optional[int] = typer.Option(None, "--lead", help="Restrict to one lead time."),
) -> None:
    """Per-station mean, variance and RMSE differences between two groups."""
    opts = _options(ctx)
    with _reported():
        config = _experiment_config(opts) if opts.config is not None else None
        if data is not None:
            dataset = load_dataset_dir(data)
        elif config is not None:
            dataset = load_experiment_dataset(config)
        else:
            raise ConfigError("diagnose needs --data or --config")
        if config is None or config.data.orographic_correction:
            dataset = apply_orographic_correction(dataset)
        high = high or (config.scenario.high_label if config else "H")
        low = low or (config.scenario.low_label if config else "L")
        frame = station_diagnostics(dataset, (high, low), size, lead_time=lead)
        path = write_csv(frame, _out_dir(opts, config) / "station_diagnostics.csv")
        typer.echo(str(path))
        typer.echo(
            f"mean_diff={frame['mean_diff'].mean():.4f} K "
            f"variance_diff={frame['variance_diff'].mean():.4f} K^2 "
            f"rmse_diff={frame['rmse_diff'].mean():.4f} K"
        )


@app.command()
def sweep(
    ratio: Optional[float] = typer.Option(None, "--ratio", help="Cost of one high-resolution member in low-resolution units."),
    budget: Optional[float] = typer.Option(None, "--budget", help="Total budget in low-resolution member units."),
    preset: Optional[str] = typer.Option(None, "--preset", help=f"One of {', '.join(SCENARIOS)}."),
) -> None:
    """Print cost-equivalent (M_L, M_H) mixtures."""
    with _reported():
        if preset is not None:
            if preset not in SCENARIOS:
                raise ConfigError(f"unknown preset {preset!r}", known=sorted(SCENARIOS))
            _, _, mixtures = SCENARIOS[preset]
        else:
            if ratio is None or budget is None:
                raise ConfigError("sweep needs --preset or both --ratio and --budget")
            groups = [
                g.model_copy(update={"cost_per_member": ratio if g.label == "H" else 1.0}) for g in SynthConfig().groups
            ]
            mixtures = cost_equivalent_sweep(SynthConfig(groups=groups), budget)
        typer.echo("M_L,M_H")
        for low, high in mixtures:
            typer.echo(f"{low},{high}")


def main() -> None:
    app()


if __name__ == "__main__":
    main()
