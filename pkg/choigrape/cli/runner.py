"""
CLI runner - progress display and artifact writing around the pipeline
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

try:
    from ..core.export import (
        read_pulse_csv,
        write_fit_csv,
        write_fit_json,
        write_json,
        write_population_csv,
        write_pulse_csv,
        write_sweep_csv,
    )
    from ..core.models import OptimizationReport, QubitModelFits, RunConfig, SimulationResult, SweepResult
    from ..core.pipeline import FIT_FILENAME, MeasurementPipeline
except ImportError:  # pragma: no cover - fallback for script execution
    from choigrape.core.export import (
        read_pulse_csv,
        write_fit_csv,
        write_fit_json,
        write_json,
        write_population_csv,
        write_pulse_csv,
        write_sweep_csv,
    )
    from choigrape.core.models import OptimizationReport, QubitModelFits, RunConfig, SimulationResult, SweepResult
    from choigrape.core.pipeline import FIT_FILENAME, MeasurementPipeline


class PipelineRunner:
    """Runs pipeline commands under a Rich progress bar and writes their artifacts"""

    def __init__(self, config: RunConfig, output_dir: Path, workers: int = 1, verbose: bool = False):
        self.config = config
        self.output_dir = Path(output_dir)
        self.workers = workers
        self.verbose = verbose
        self.console = Console()
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")
        self.current_progress: Optional[Progress] = None
        self.current_task = None

        # Progress stages with percentage ranges
        self.progress_stages = {
            "fit": (0, 30),
            "optimize": (30, 95),
            "simulate": (30, 95),
            "export": (95, 100),
        }

    @contextmanager
    def _quiet_console(self):
        """Raise terminal log handlers to ERROR while the progress bar owns the screen"""
        handlers = [
            h
            for h in logging.getLogger().handlers
            if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)
        ]
        levels = [h.level for h in handlers]
        for h in handlers:
            h.setLevel(max(h.level, logging.ERROR))
        try:
            yield
        finally:
            for h, level in zip(handlers, levels):
                h.setLevel(level)

    @contextmanager
    def _progress(self, description: str):
        with self._quiet_console(), Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            console=self.console,
            transient=not self.verbose,
        ) as progress:
            self.current_progress = progress
            self.current_task = progress.add_task(description, total=100)
            try:
                yield
            finally:
                self.current_progress = None
                self.current_task = None

    def _update_progress_stage(self, stage: str, fraction: float, message: str = "") -> None:
        """Map a stage-local fraction onto the overall bar"""
        if self.current_progress is None or self.current_task is None:
            return
        start, end = self.progress_stages.get(stage, (0, 100))
        completed = start + (end - start) * max(0.0, min(1.0, fraction))
        self.current_progress.update(self.current_task, completed=completed, description=message or stage)
        if self.verbose and message:
            self.console.print(f"[dim]{message}[/dim]")

    def _pipeline(self) -> MeasurementPipeline:
        return MeasurementPipeline(self.config, workers=self.workers, progress_callback=self._update_progress_stage)

    def _fit(self, pipeline: MeasurementPipeline) -> QubitModelFits:
        fits = pipeline.fit(cache_dir=self.output_dir)
        write_fit_json(fits, self.output_dir / FIT_FILENAME, self.config.config_hash())
        write_fit_csv(fits.samples, self.output_dir / "model_fit_samples.csv", self.config.config_hash())
        return fits

    def run_fit(self) -> QubitModelFits:
        """Fit the model and write model_fit.json plus the sampled curve table"""
        with self._progress("Fitting phase qubit model..."):
            fits = self._fit(self._pipeline())
            self._update_progress_stage("export", 1.0, "Model fit written")
        return fits

    def _write_report(self, report: OptimizationReport, directory: Path) -> dict[str, Path]:
        config_hash = self.config.config_hash()
        return {
            "report": write_json(report, directory / "report.json"),
            "pulse": write_pulse_csv(report.final_pulse, directory / "pulse.csv", config_hash),
            "initial_pulse": write_pulse_csv(report.initial_pulse, directory / "pulse_initial.csv", config_hash),
            "populations": write_population_csv(report.final_traces, directory / "populations.csv", config_hash),
            "initial_populations": write_population_csv(
                report.initial_traces, directory / "populations_initial.csv", config_hash
            ),
        }

    def run_optimize(self) -> tuple[QubitModelFits, OptimizationReport, dict[str, Path]]:
        """Fit (or load) the model, optimize the pulse and write all artifacts"""
        with self._progress("Optimizing measurement pulse..."):
            pipeline = self._pipeline()
            fits = self._fit(pipeline)
            report = pipeline.optimize(fits)
            self._update_progress_stage("export", 0.0, "Writing artifacts")
            artifacts = self._write_report(report, self.output_dir)
            self._update_progress_stage("export", 1.0, "Done")
        return fits, report, artifacts

    def run_simulate(self, pulse_path: Path) -> tuple[SimulationResult, dict[str, Path]]:
        """Replay a pulse CSV and write populations plus contrast"""
        pulse = read_pulse_csv(pulse_path)
        with self._progress("Simulating pulse..."):
            pipeline = self._pipeline()
            fits = self._fit(pipeline)
            result = pipeline.simulate(fits, pulse)
            config_hash = self.config.config_hash()
            artifacts = {
                "contrast": write_json(result, self.output_dir / "simulation.json"),
                "populations": write_population_csv(
                    result.traces, self.output_dir / "simulation_populations.csv", config_hash
                ),
            }
            self._update_progress_stage("export", 1.0, "Done")
        return result, artifacts

    def run_sweep(self, durations: Optional[list[float]] = None) -> tuple[SweepResult, dict[str, Path]]:
        """Optimize at several durations; one artifact subdirectory per duration"""
        with self._progress("Sweeping pulse durations..."):
            pipeline = self._pipeline()
            fits = self._fit(pipeline)
            sweep, reports = pipeline.sweep(fits, durations)
            artifacts = {
                "sweep": write_json(sweep, self.output_dir / "sweep.json"),
                "sweep_csv": write_sweep_csv(sweep, self.output_dir / "sweep.csv"),
            }
            for report in reports:
                directory = self.output_dir / f"T_{report.duration_ns:g}ns"
                for name, path in self._write_report(report, directory).items():
                    artifacts[f"{report.duration_ns:g}ns_{name}"] = path
            self._update_progress_stage("export", 1.0, "Done")
        return sweep, artifacts
