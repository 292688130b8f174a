"""Quasi-Newton ascent of the channel fidelity."""

from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np
from scipy.optimize import OptimizeResult, minimize

from ..channel import cptp_report, reshuffle
from ..errors import OptimizationAbort
from ..models import (
    IterationRecord,
    OptimizationReport,
    PulseRecord,
    TerminationReason,
)
from .problem import Evaluation, OptimizationProblem, evaluate, population_traces

logger = logging.getLogger(__name__)

IterationCallback = Callable[[IterationRecord], None]

_STATUS = {
    0: TerminationReason.CONVERGED,
    1: TerminationReason.MAX_ITERATIONS,
    2: TerminationReason.LINE_SEARCH_FAILURE,
}


class _CachedObjective:
    """Negated objective for scipy with a small cache of evaluations"""

    def __init__(self, problem: OptimizationProblem, size: int = 8):
        self.problem = problem
        self.size = size
        self.cache: dict[bytes, Evaluation] = {}
        self.evaluations = 0
        self.iteration = 0

    def evaluation(self, x: np.ndarray) -> Evaluation:
        key = np.asarray(x, dtype=float).tobytes()
        if key not in self.cache:
            result = evaluate(self.problem, x)
            self.evaluations += 1
            if not np.isfinite(result.fidelity) or not np.all(np.isfinite(result.gradient)):
                raise OptimizationAbort(
                    "Non-finite objective or gradient",
                    iteration=self.iteration,
                    diagnostic={
                        "fidelity": float(result.fidelity),
                        "max_pulse": float(np.max(result.physical_pulse)),
                        "min_pulse": float(np.min(result.physical_pulse)),
                    },
                )
            if len(self.cache) >= self.size:
                self.cache.pop(next(iter(self.cache)))
            self.cache[key] = result
        return self.cache[key]

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        result = self.evaluation(x)
        return -result.fidelity, -result.gradient


def _record(problem: OptimizationProblem, iteration: int, result: Evaluation) -> IterationRecord:
    contrast = problem.contrast(result.propagator.entries).xi if problem.contrast else None
    return IterationRecord(
        iteration=iteration,
        fidelity=result.fidelity,
        gradient_norm=float(np.max(np.abs(result.gradient))) if result.gradient.size else 0.0,
        contrast=contrast,
    )


def _pulse_record(problem: OptimizationProblem, result: Evaluation) -> PulseRecord:
    return PulseRecord(
        t_ns=problem.template.times.tolist(),
        raw=result.raw_pulse.tolist(),
        smoothed=result.physical_pulse.tolist(),
    )


def maximize(
    problem: OptimizationProblem,
    initial_variables: np.ndarray,
    callback: Optional[IterationCallback] = None,
) -> OptimizationReport:
    """
    Maximize the Frobenius channel fidelity with BFGS.

    The search runs on the unconstrained pulse variables, so every
    evaluated pulse respects the template bounds. Termination follows the
    gradient tolerance (max norm), the iteration cap, or a failed Wolfe
    line search.

    Raises:
        OptimizationAbort: the objective or gradient became non-finite
    """
    settings = problem.settings
    objective = _CachedObjective(problem)
    x0 = np.asarray(initial_variables, dtype=float)

    initial = objective.evaluation(x0)
    history = [_record(problem, 0, initial)]
    if callback:
        callback(history[0])
    logger.info("Initial fidelity %.6f", initial.fidelity)

    if history[0].gradient_norm <= settings.gradient_tolerance:
        final, x_final = initial, x0
        termination = TerminationReason.CONVERGED
        iterations, message = 0, "Initial point is stationary"
    else:

        def on_iteration(intermediate_result: OptimizeResult) -> None:
            objective.iteration += 1
            record = _record(problem, objective.iteration, objective.evaluation(intermediate_result.x))
            history.append(record)
            logger.debug(
                "Iteration %d: fidelity %.8f, |grad| %.3e",
                record.iteration,
                record.fidelity,
                record.gradient_norm,
            )
            if callback:
                callback(record)

        result = minimize(
            objective,
            x0,
            jac=True,
            method="BFGS",
            callback=on_iteration,
            options={
                "gtol": settings.gradient_tolerance,
                "maxiter": settings.max_iterations,
                "c1": settings.c1,
                "c2": settings.c2,
            },
        )
        x_final = result.x
        final = objective.evaluation(x_final)
        termination = _STATUS.get(result.status, TerminationReason.LINE_SEARCH_FAILURE)
        iterations, message = int(result.nit), str(result.message)

    logger.info(
        "Optimization finished after %d iteration(s): %s, fidelity %.6f -> %.6f",
        iterations,
        termination.value,
        initial.fidelity,
        final.fidelity,
    )

    template = problem.template
    return OptimizationReport(
        duration_ns=template.duration,
        dt_ns=template.dt,
        n_pixels=template.n_pixels,
        n_variables=template.n_free,
        initial_fidelity=initial.fidelity,
        final_fidelity=final.fidelity,
        initial_contrast=problem.contrast(initial.propagator.entries) if problem.contrast else None,
        final_contrast=problem.contrast(final.propagator.entries) if problem.contrast else None,
        history=history,
        iterations=iterations,
        function_evaluations=objective.evaluations,
        termination=termination,
        message=message,
        initial_pulse=_pulse_record(problem, initial),
        final_pulse=_pulse_record(problem, final),
        initial_traces=population_traces(problem, initial.physical_pulse),
        final_traces=population_traces(problem, final.physical_pulse),
        clamped_pixels=final.clamped_pixels,
        lower_bound=template.lower,
        upper_bound=template.upper,
        final_cptp=cptp_report(reshuffle(final.propagator)),
    )
