"""
Measurement-pulse pipeline shared by all CLI commands
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .channel import cptp_report, reshuffle
from .control import (
    OptimizationProblem,
    PulseTemplate,
    evaluate_physical,
    maximize,
    population_traces,
)
from .errors import ConfigurationError
from .export import check_pulse_grid, read_fit_json
from .models import (
    TWO_PI,
    IterationRecord,
    OptimizationReport,
    PulseRecord,
    PulseSettings,
    QubitModelFits,
    RunConfig,
    SimulationResult,
    SweepEntry,
    SweepResult,
)
from .phase_qubit import (
    PhaseQubitModel,
    contrast,
    fit_model_curves,
    target_choi,
    trace_states,
)
from .phase_qubit.model import LEVEL_LABELS

ProgressCallback = Callable[[str, float, str], None]

FIT_FILENAME = "model_fit.json"


class MeasurementPipeline:
    """
    Phase qubit measurement-pulse workflow

    Handles:
    1. Model fitting (with a fit cache keyed by the fit hash)
    2. Problem assembly from the run configuration
    3. Pulse optimization and duration sweeps
    4. Forward simulation of given pulses
    """

    def __init__(
        self,
        config: RunConfig,
        workers: int = 1,
        progress_callback: Optional[ProgressCallback] = None,
    ):
        self.config = config
        self.workers = workers
        self.progress_callback = progress_callback
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    def _progress(self, stage: str, fraction: float, message: str) -> None:
        if self.progress_callback:
            self.progress_callback(stage, fraction, message)

    def fit(self, cache_dir: Optional[Path] = None) -> QubitModelFits:
        """
        Fit the three-level model, reusing a cached fit with the same fit hash

        Args:
            cache_dir: directory holding a previous model_fit.json

        Returns:
            QubitModelFits with validity limit
        """
        fit_hash = self.config.fit_hash()
        if cache_dir is not None:
            cached = Path(cache_dir) / FIT_FILENAME
            if cached.exists():
                try:
                    fits = read_fit_json(cached)
                except ConfigurationError as e:
                    self.logger.warning("Ignoring unreadable fit cache: %s", e)
                else:
                    if fits.fit_hash == fit_hash:
                        self.logger.info("Using cached model fit %s", cached)
                        self._progress("fit", 1.0, "Loaded cached model fit")
                        return fits
                    self.logger.info("Cached model fit is stale, refitting")

        fits = fit_model_curves(
            self.config.qubit,
            self.config.model,
            workers=self.workers,
            progress=lambda fraction, message: self._progress("fit", fraction, message),
        )
        return fits.model_copy(update={"fit_hash": fit_hash})

    def build_template(self, fits: QubitModelFits, pulse: PulseSettings) -> PulseTemplate:
        lower = fits.fit_min if pulse.lower_over_2pi is None else pulse.lower_over_2pi * TWO_PI
        upper = fits.validity_limit if pulse.upper_over_2pi is None else pulse.upper_over_2pi * TWO_PI
        if upper is None:
            raise ConfigurationError("No upper pulse bound: model fit has no validity limit")
        hold = pulse.hold_pixels
        return PulseTemplate(
            n_pixels=pulse.n_pixels,
            dt=pulse.resolved_dt,
            reference=fits.phi_ref,
            lower=lower,
            upper=upper,
            kernel_sigma=pulse.resolved_sigma,
            head=hold,
            tail=hold,
        )

    def build_problem(
        self, fits: QubitModelFits, pulse: Optional[PulseSettings] = None
    ) -> OptimizationProblem:
        """Assemble the measurement problem for the given (or configured) pulse settings"""
        pulse = pulse or self.config.pulse
        return OptimizationProblem(
            model=PhaseQubitModel(fits),
            target=target_choi(),
            template=self.build_template(fits, pulse),
            settings=self.config.optimizer,
            contrast=contrast,
            trace_states=trace_states(),
            level_labels=LEVEL_LABELS,
            workers=self.workers,
        )

    def optimize(
        self, fits: QubitModelFits, pulse: Optional[PulseSettings] = None
    ) -> OptimizationReport:
        """Optimize the measurement pulse starting from the smoothed square pulse"""
        pulse = pulse or self.config.pulse
        problem = self.build_problem(fits, pulse)
        x0 = problem.template.initial_variables(pulse.initial_amplitude_over_2pi * TWO_PI)
        max_iterations = max(1, self.config.optimizer.max_iterations)
        label = f"T = {pulse.duration_ns:g} ns"

        def on_iteration(record: IterationRecord) -> None:
            xi = "" if record.contrast is None else f", xi {record.contrast:.4f}"
            self._progress(
                "optimize",
                min(record.iteration / max_iterations, 1.0),
                f"{label}: iteration {record.iteration}, fidelity {record.fidelity:.5f}{xi}",
            )

        report = maximize(problem, x0, callback=on_iteration)
        self._progress("optimize", 1.0, f"{label}: {report.termination.value}")
        return report.model_copy(update={"config_hash": self.config.config_hash()})

    def simulate(self, fits: QubitModelFits, pulse: PulseRecord) -> SimulationResult:
        """
        Forward-evolve a smoothed pulse and evaluate fidelity and contrast

        Raises:
            GridMismatchError: pulse times do not match the configured grid
        """
        problem = self.build_problem(fits)
        check_pulse_grid(pulse, problem.template.times)
        physical = np.asarray(pulse.smoothed, dtype=float)
        result = evaluate_physical(problem, physical)
        self._progress("simulate", 1.0, "Simulation complete")
        return SimulationResult(
            config_hash=self.config.config_hash(),
            fidelity=result.fidelity,
            contrast=contrast(result.propagator.entries),
            traces=population_traces(problem, result.pulse),
            clamped_pixels=result.clamped_pixels,
            cptp=cptp_report(reshuffle(result.propagator)),
        )

    def sweep(
        self, fits: QubitModelFits, durations: Optional[list[float]] = None
    ) -> tuple[SweepResult, list[OptimizationReport]]:
        """Optimize the configured problem at several durations"""
        durations = durations or self.config.sweep_durations_ns
        entries, reports = [], []
        for duration in durations:
            pulse = self.config.pulse.model_copy(update={"duration_ns": duration})
            pulse = PulseSettings.model_validate(pulse.model_dump())
            report = self.optimize(fits, pulse)
            reports.append(report)
            entries.append(
                SweepEntry(
                    duration_ns=duration,
                    initial_fidelity=report.initial_fidelity,
                    final_fidelity=report.final_fidelity,
                    initial_xi=report.initial_contrast.xi if report.initial_contrast else None,
                    final_xi=report.final_contrast.xi if report.final_contrast else None,
                    iterations=report.iterations,
                    termination=report.termination,
                    max_bias=max(report.final_pulse.smoothed),
                )
            )
        return SweepResult(config_hash=self.config.config_hash(), entries=entries), reports
