"""Piecewise-constant propagators."""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..models import Propagator
from .expm import expm

PropagatorLike = Union[Propagator, np.ndarray]


def _entries(propagator: PropagatorLike) -> np.ndarray:
    if isinstance(propagator, Propagator):
        return propagator.entries
    return np.asarray(propagator)


def _validate(generators: Sequence[np.ndarray], dt: float) -> None:
    if len(generators) == 0:
        raise ArgumentError("At least one pixel generator is required")
    if not dt > 0:
        raise ArgumentError(f"Pixel duration must be positive, got {dt}")


def propagator_trajectory(generators: Sequence[np.ndarray], dt: float) -> list[np.ndarray]:
    """
    Cumulative propagators after each pixel.

    Element k is T_k ... T_0; pixel 0 is applied first.
    """
    _validate(generators, dt)
    dim = np.shape(generators[0])[0]
    current = np.eye(dim, dtype=complex)
    trajectory = []
    for generator in generators:
        if np.shape(generator) != (dim, dim):
            raise DimensionError(f"Generator shape {np.shape(generator)} != {(dim, dim)}")
        current = expm(np.asarray(generator) * dt) @ current
        trajectory.append(current)
    return trajectory


def piecewise_propagator(generators: Sequence[np.ndarray], dt: float) -> Propagator:
    """Time-ordered product of pixel exponentials, early times to the right."""
    trajectory = propagator_trajectory(generators, dt)
    return Propagator(entries=trajectory[-1], duration=len(generators) * dt)


def evolve(propagator: PropagatorLike, state: np.ndarray) -> np.ndarray:
    """Apply a propagator to a column-stacked density matrix."""
    entries = _entries(propagator)
    vector = np.asarray(state)
    if entries.ndim != 2 or vector.ndim != 1 or entries.shape[1] != vector.shape[0]:
        raise DimensionError(
            f"Cannot apply propagator of shape {entries.shape} to state of shape {vector.shape}"
        )
    return entries @ vector
