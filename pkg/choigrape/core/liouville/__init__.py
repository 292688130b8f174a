"""Vectorized Lindblad dynamics."""

from .expm import expm, expm_directional_derivative
from .propagator import evolve, piecewise_propagator, propagator_trajectory
from .vectorize import (
    build_generator,
    check_density_vector,
    coherent_generator,
    column_stack,
    dissipator,
    trace_residual,
    unstack,
)

__all__ = [
    "build_generator",
    "check_density_vector",
    "coherent_generator",
    "column_stack",
    "dissipator",
    "evolve",
    "expm",
    "expm_directional_derivative",
    "piecewise_propagator",
    "propagator_trajectory",
    "trace_residual",
    "unstack",
]
