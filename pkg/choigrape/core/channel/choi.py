"""
Conversions between Liouville propagators and Choi matrices.

C = sum_ij |i><j| kron E(|i><j|), where the input factor comes first.
With column stacking, [E(|a><a'|)]_{b,b'} = T[d*b' + b, d*a' + a] and

    C[d*a + b, d*a' + b'] = T[d*b' + b, d*a' + a]
"""

from __future__ import annotations

from typing import Union

import numpy as np

from ..errors import DimensionError
from ..liouville.vectorize import column_stack, hilbert_dimension
from ..models import CPTPReport, Propagator

MatrixLike = Union[Propagator, np.ndarray]


def _matrix(value: MatrixLike) -> np.ndarray:
    array = value.entries if isinstance(value, Propagator) else np.asarray(value)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionError(f"Expected a square d^2 x d^2 matrix, got shape {array.shape}")
    return array


def reshuffle(matrix: MatrixLike) -> np.ndarray:
    """
    Reorder a propagator into its Choi matrix.

    Pure index permutation; it is its own inverse, so the same call
    maps a Choi matrix back to the propagator.
    """
    t = _matrix(matrix)
    d = hilbert_dimension(t.shape[0])
    # T4[b', b, a', a] from row d*b' + b and column d*a' + a
    t4 = t.reshape(d, d, d, d)
    return t4.transpose(3, 1, 2, 0).reshape(d * d, d * d)


def choi_blocks(choi: np.ndarray) -> np.ndarray:
    """View C as blocks[i, j] = E(|i><j|)."""
    c = _matrix(choi)
    d = hilbert_dimension(c.shape[0])
    return c.reshape(d, d, d, d).transpose(0, 2, 1, 3)


def apply_channel(choi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """E(rho) = sum_ij rho_ij E(|i><j|)."""
    blocks = choi_blocks(choi)
    rho = np.asarray(rho)
    if rho.shape != blocks.shape[:2]:
        raise DimensionError(f"State shape {rho.shape} does not match channel {blocks.shape[:2]}")
    return np.einsum("ij,ijab->ab", rho, blocks)


def choi_from_unitary(unitary: np.ndarray) -> np.ndarray:
    """Choi matrix |phi><phi| of rho -> U rho U^dag, |phi> = sum_i |i> kron U|i>."""
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    phi = np.einsum("ik,jk->ij", np.eye(d), u).reshape(d * d)
    return np.outer(phi, phi.conj())


def partial_trace_output(choi: np.ndarray) -> np.ndarray:
    """Trace out the output factor: sum_ij |i><j| Tr E(|i><j|)."""
    c = _matrix(choi)
    d = hilbert_dimension(c.shape[0])
    return np.einsum("iaja->ij", c.reshape(d, d, d, d))


def cptp_report(choi: np.ndarray) -> CPTPReport:
    """Minimum eigenvalue of the Hermitized Choi matrix and the TP residual."""
    c = _matrix(choi)
    d = hilbert_dimension(c.shape[0])
    hermitian = 0.5 * (c + c.conj().T)
    return CPTPReport(
        min_eigenvalue=float(np.linalg.eigvalsh(hermitian)[0]),
        tp_residual=float(np.linalg.norm(partial_trace_output(c) - np.eye(d))),
    )


def propagator_from_channel(choi: np.ndarray) -> np.ndarray:
    """Liouville matrix of the channel, built column by column from E(|i><j|)."""
    blocks = choi_blocks(choi)
    d = blocks.shape[0]
    columns = [column_stack(blocks[i, j]) for j in range(d) for i in range(d)]
    return np.stack(columns, axis=1)
