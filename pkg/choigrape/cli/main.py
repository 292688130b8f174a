#!/usr/bin/env python3
"""
choi-grape CLI - measurement-pulse optimization for a phase qubit
Fits the three-level model, optimizes pulses with Choi-matrix GRAPE and
replays pulses, writing CSV/JSON artifacts with config-hash provenance.
"""
import json
import logging
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console

try:  # Allow running as module or script
    from ..core.config import settings, setup_logging
    from ..core.errors import ChoiGrapeError, ConfigurationError
    from ..core.models import RunConfig
    from .formatter import CLIFormatter
    from .runner import PipelineRunner
except ImportError:  # pragma: no cover - fallback for script execution
    from choigrape.core.config import settings, setup_logging
    from choigrape.core.errors import ChoiGrapeError, ConfigurationError
    from choigrape.core.models import RunConfig
    from choigrape.cli.formatter import CLIFormatter
    from choigrape.cli.runner import PipelineRunner

app = typer.Typer(help="choi-grape - Choi-matrix GRAPE for phase qubit measurement pulses")
console = Console()
logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_CONFIG = 2

ConfigOption = typer.Option(None, "--config", "-c", help="Run configuration JSON (defaults apply when omitted)")
OutOption = typer.Option(None, "--out", "-o", help="Output directory (overrides CHOIGRAPE_OUTPUT_DIR and config)")
WorkersOption = typer.Option(None, "--workers", "-w", min=1, help="Worker threads (default: CHOIGRAPE_WORKERS)")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Print every progress message")


@app.callback()
def main() -> None:
    """Configure logging before any command runs."""
    setup_logging(settings)


def _load_config(config_path: Optional[Path]) -> RunConfig:
    if config_path is None:
        return RunConfig()
    return RunConfig.from_file(config_path)


def resolve_output_dir(config: RunConfig, out: Optional[Path]) -> Path:
    """--out, then CHOIGRAPE_OUTPUT_DIR, then the config's output_dir, then ./runs"""
    for candidate in (out, settings.OUTPUT_DIR, config.output_dir):
        if candidate is not None:
            return Path(candidate)
    return Path("runs")


def _make_runner(
    config_path: Optional[Path], out: Optional[Path], workers: Optional[int], verbose: bool, **pulse_overrides
) -> PipelineRunner:
    config = _load_config(config_path)
    if pulse_overrides:
        pulse = {**config.pulse.model_dump(), **pulse_overrides}
        config = config.model_copy(update={"pulse": type(config.pulse).model_validate(pulse)})
    output_dir = resolve_output_dir(config, out)
    output_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Writing artifacts to %s (config %s)", output_dir, config.config_hash()[:12])
    return PipelineRunner(config, output_dir, workers=workers or settings.WORKERS, verbose=verbose)


def _fail(error: Exception) -> None:
    """Print the error and exit with the matching code"""
    if isinstance(error, typer.Exit):
        raise error
    if isinstance(error, ValidationError):
        console.print(f"[red]Configuration error:[/red] {error.error_count()} invalid field(s)")
        for item in error.errors():
            location = ".".join(str(part) for part in item["loc"]) or "<root>"
            console.print(f"  {location}: {item['msg']}")
        raise typer.Exit(EXIT_CONFIG)
    if isinstance(error, (ConfigurationError, json.JSONDecodeError)):
        console.print(f"[red]Configuration error:[/red] {error}")
        raise typer.Exit(EXIT_CONFIG)
    if isinstance(error, ChoiGrapeError):
        console.print(f"[red]Error:[/red] {error}")
        raise typer.Exit(EXIT_FAILURE)
    console.print(f"[red]Unexpected error:[/red] {error}")
    import traceback

    console.print(f"[dim]{traceback.format_exc()}[/dim]")
    raise typer.Exit(EXIT_FAILURE)


@app.command()
def fit(
    config_path: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    workers: Optional[int] = WorkersOption,
    verbose: bool = VerboseOption,
):
    """Fit the three-level model curves and locate the validity limit."""
    try:
        runner = _make_runner(config_path, out, workers, verbose)
        fits = runner.run_fit()
        formatter = CLIFormatter(console)
        console.print(formatter.create_fit_table(fits))
        console.print(f"\n[green]✓ Model fit saved to: {runner.output_dir}[/green]")
    except Exception as e:
        _fail(e)


@app.command()
def optimize(
    config_path: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    duration: Optional[float] = typer.Option(None, "--duration", "-T", min=0.0, help="Override pulse duration (ns)"),
    workers: Optional[int] = WorkersOption,
    verbose: bool = VerboseOption,
):
    """Optimize the measurement pulse and write report, pulse and population artifacts."""
    overrides = {} if duration is None else {"duration_ns": duration}
    try:
        runner = _make_runner(config_path, out, workers, verbose, **overrides)
        _, report, artifacts = runner.run_optimize()
        formatter = CLIFormatter(console)
        formatter.print_report_summary(report)
        if verbose:
            console.print(formatter.create_history_table(report))
        formatter.print_artifacts(artifacts)
    except Exception as e:
        _fail(e)


@app.command()
def simulate(
    pulse: Path = typer.Option(..., "--pulse", "-p", help="Pulse CSV (t_ns, phi_b_raw, phi_b_smoothed)"),
    config_path: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    workers: Optional[int] = WorkersOption,
    verbose: bool = VerboseOption,
):
    """Replay a pulse and report fidelity, contrast and population traces."""
    try:
        runner = _make_runner(config_path, out, workers, verbose)
        result, artifacts = runner.run_simulate(pulse)
        formatter = CLIFormatter(console)
        formatter.print_simulation_summary(result)
        formatter.print_artifacts(artifacts)
    except Exception as e:
        _fail(e)


@app.command()
def sweep(
    config_path: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    durations: Optional[list[float]] = typer.Option(
        None, "--duration", "-T", help="Duration in ns; repeat for several (default: config sweep_durations_ns)"
    ),
    workers: Optional[int] = WorkersOption,
    verbose: bool = VerboseOption,
):
    """Optimize at several pulse durations and tabulate the results."""
    try:
        runner = _make_runner(config_path, out, workers, verbose)
        result, artifacts = runner.run_sweep(durations or None)
        formatter = CLIFormatter(console)
        console.print(formatter.create_sweep_table(result))
        formatter.print_artifacts({k: v for k, v in artifacts.items() if k in ("sweep", "sweep_csv")})
    except Exception as e:
        _fail(e)


@app.command()
def schema():
    """Print the JSON schema of the run configuration."""
    typer.echo(json.dumps(RunConfig.model_json_schema(), indent=2))


@app.command()
def version():
    """Show version information."""
    console.print(f"{settings.APP_NAME} v{settings.APP_VERSION}")
    console.print("Choi-matrix GRAPE for phase qubit measurement")
    if settings.DEBUG:
        console.print(f"Debug mode: {settings.DEBUG}")
        console.print(f"Log level: {settings.LOG_LEVEL}")


if __name__ == "__main__":
    app()
