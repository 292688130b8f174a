"""
Column-stacking vectorization and Lindblad generators.

The convention is fixed project-wide: entry ``d*j + i`` of col(M) holds
``M[i, j]``, which is numpy's Fortran order. Under it
col(ABC) = (C^T kron A) col(B) and the master equation becomes
d col(rho)/dt = S col(rho) with

    S = i(H^T kron 1 - 1 kron H)
        + sum_l gamma_l (L* kron L - 1/2 L^T L* kron 1 - 1/2 1 kron L^dag L)
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from ..errors import DimensionError, ValidityError
from ..models import DecayChannel, DensityReport

HERMITIAN_TOLERANCE = 1e-12


def _square(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    array = np.asarray(matrix)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {array.shape}")
    return array


def hilbert_dimension(n: int) -> int:
    """Return d for a d^2 sized superoperator or vector."""
    d = math.isqrt(n)
    if d * d != n:
        raise DimensionError(f"Size {n} is not a perfect square")
    return d


def column_stack(matrix: np.ndarray) -> np.ndarray:
    """Vectorize a square matrix by stacking its columns."""
    array = _square(matrix)
    return np.asarray(array, dtype=complex).flatten(order="F")


def unstack(vector: np.ndarray) -> np.ndarray:
    """Inverse of :func:`column_stack`."""
    array = np.asarray(vector)
    if array.ndim != 1:
        raise DimensionError(f"Expected a vector, got shape {array.shape}")
    d = hilbert_dimension(array.shape[0])
    return array.reshape((d, d), order="F")


def coherent_generator(hamiltonian: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i[H, rho]."""
    h = np.asarray(_square(hamiltonian, "Hamiltonian"), dtype=complex)
    identity = np.eye(h.shape[0], dtype=complex)
    return 1j * (np.kron(h.T, identity) - np.kron(identity, h))


def dissipator(operator: np.ndarray) -> np.ndarray:
    """Unit-rate Lindblad dissipator of a single jump operator."""
    lind = np.asarray(_square(operator, "Lindblad operator"), dtype=complex)
    identity = np.eye(lind.shape[0], dtype=complex)
    l_dag_l = lind.conj().T @ lind
    return (
        np.kron(lind.conj(), lind)
        - 0.5 * np.kron(l_dag_l.T, identity)
        - 0.5 * np.kron(identity, l_dag_l)
    )


def build_generator(
    hamiltonian: np.ndarray, channels: Iterable[DecayChannel] = ()
) -> np.ndarray:
    """
    Build the generator of the column-stacked master equation.

    Args:
        hamiltonian: d x d Hermitian matrix in rad/ns
        channels: decay channels with non-negative rates in 1/ns

    Returns:
        d^2 x d^2 complex generator

    Raises:
        ValidityError: non-Hermitian Hamiltonian or negative rate
        DimensionError: shape mismatch between H and a jump operator
    """
    h = np.asarray(_square(hamiltonian, "Hamiltonian"), dtype=complex)
    asymmetry = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if asymmetry > HERMITIAN_TOLERANCE:
        raise ValidityError(f"Hamiltonian is not Hermitian (max |H - H^dag| = {asymmetry:.3e})")

    generator = coherent_generator(h)
    for channel in channels:
        if channel.rate < 0 or not math.isfinite(channel.rate):
            raise ValidityError(
                f"Decay channel {channel.name or '<unnamed>'} has invalid rate {channel.rate}"
            )
        if np.shape(channel.operator) != h.shape:
            raise DimensionError(
                f"Jump operator shape {np.shape(channel.operator)} does not match H {h.shape}"
            )
        if channel.rate:
            generator = generator + channel.rate * dissipator(channel.operator)
    return generator


def trace_residual(superoperator: np.ndarray, reference: np.ndarray | None = None) -> float:
    """
    Norm of col(1)^T X - reference.

    With no reference this is the trace-preservation residual of a
    generator; pass col(1)^T as reference to check a propagator.
    """
    op = _square(superoperator, "superoperator")
    d = hilbert_dimension(op.shape[0])
    row = column_stack(np.eye(d)) @ op
    if reference is not None:
        row = row - reference
    return float(np.linalg.norm(row))


def check_density_vector(vector: np.ndarray) -> DensityReport:
    """Report how far a column-stacked state is from a valid density matrix."""
    rho = unstack(vector)
    hermitian = 0.5 * (rho + rho.conj().T)
    return DensityReport(
        hermiticity_error=float(np.max(np.abs(rho - rho.conj().T))),
        trace_error=float(abs(np.trace(rho) - 1.0)),
        min_eigenvalue=float(np.linalg.eigvalsh(hermitian)[0]),
    )
