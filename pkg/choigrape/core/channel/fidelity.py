"""
Channel fidelities between Choi matrices.

The Frobenius form Re Tr(C_t^dag C) / Re Tr(C_t^dag C_t) is linear in C
and drives the gradient search. The square-root channel fidelity is a
diagnostic only.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, ValidityError, ZeroTargetError
from ..liouville.vectorize import hilbert_dimension

EIGENVALUE_CLIP = 1e-12
NEGATIVE_EIGENVALUE_LIMIT = -1e-6


def _pair(target: np.ndarray, other: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(target)
    o = np.asarray(other)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape != o.shape:
        raise DimensionError(f"Choi matrices must share a square shape, got {t.shape} and {o.shape}")
    return t, o


def _target_norm(target: np.ndarray) -> float:
    norm = float(np.vdot(target, target).real)
    if norm == 0.0:
        raise ZeroTargetError("Target Choi matrix is zero")
    return norm


def frobenius_fidelity(target: np.ndarray, choi: np.ndarray) -> float:
    """Re Tr(C_t^dag C) / Re Tr(C_t^dag C_t)."""
    t, c = _pair(target, choi)
    return float(np.vdot(t, c).real) / _target_norm(t)


def fidelity_gradient_term(target: np.ndarray, choi_derivative: np.ndarray) -> float:
    """One gradient entry: the Frobenius overlap of C_t with dC/du."""
    t, dc = _pair(target, choi_derivative)
    return float(np.vdot(t, dc).real) / _target_norm(t)


def _psd_sqrt(matrix: np.ndarray, name: str) -> np.ndarray:
    hermitian = 0.5 * (matrix + matrix.conj().T)
    values, vectors = np.linalg.eigh(hermitian)
    if values[0] < NEGATIVE_EIGENVALUE_LIMIT:
        raise ValidityError(f"{name} has eigenvalue {values[0]:.3e}; not positive semidefinite")
    values = np.where(values < EIGENVALUE_CLIP, 0.0, values)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def sqrt_channel_fidelity(target: np.ndarray, choi: np.ndarray) -> float:
    """(Tr sqrt(sqrt(C_t) C sqrt(C_t)))^2 / d^2 via Hermitian eigendecompositions."""
    t, c = _pair(target, choi)
    d = hilbert_dimension(t.shape[0])
    root_t = _psd_sqrt(t, "Target Choi matrix")
    _psd_sqrt(c, "Choi matrix")
    inner = root_t @ (0.5 * (c + c.conj().T)) @ root_t
    inner_values = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    inner_values = np.where(inner_values < EIGENVALUE_CLIP, 0.0, inner_values)
    return float(np.sum(np.sqrt(inner_values)) ** 2) / d**2


def gate_overlap_fidelity(target_unitary: np.ndarray, unitary: np.ndarray) -> float:
    """|Tr(U_t^dag U)|^2 / d^2."""
    ut, u = _pair(target_unitary, unitary)
    d = ut.shape[0]
    return float(abs(np.trace(ut.conj().T @ u)) ** 2) / d**2
