"""Pulse parameterization, GRAPE objective and quasi-Newton search."""

from .optimizer import maximize
from .problem import (
    ControlExpansion,
    ControlModel,
    Evaluation,
    OptimizationProblem,
    evaluate,
    evaluate_physical,
    objective_and_gradient,
    population_traces,
)
from .pulse import PulseTemplate, smooth, smoothing_jacobian

__all__ = [
    "ControlExpansion",
    "ControlModel",
    "Evaluation",
    "OptimizationProblem",
    "PulseTemplate",
    "evaluate",
    "evaluate_physical",
    "maximize",
    "objective_and_gradient",
    "population_traces",
    "smooth",
    "smoothing_jacobian",
]
