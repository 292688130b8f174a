"""Matrix exponentials and their exact directional derivatives."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import DimensionError, NumericError


def expm(matrix: np.ndarray) -> np.ndarray:
    """
    Matrix exponential (degree-13 Pade with scaling and squaring).

    Raises:
        DimensionError: non-square input
        NumericError: NaN or Inf entries
    """
    array = np.asarray(matrix, dtype=complex)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionError(f"expm needs a square matrix, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NumericError("expm input contains NaN or Inf entries")
    return scipy.linalg.expm(array)


def expm_directional_derivative(
    a: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Return (e^A, D) where D = d/dx e^{A + xB} at x = 0.

    Both come out of a single exponential of the block matrix
    [[A, B], [0, A]]: the diagonal blocks are e^A and the upper-right
    block is the integral of e^{A(1-t)} B e^{At} over [0, 1].
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionError(
            f"Directional derivative needs equal square shapes, got {a.shape} and {b.shape}"
        )
    n = a.shape[0]
    augmented = np.zeros((2 * n, 2 * n), dtype=complex)
    augmented[:n, :n] = a
    augmented[:n, n:] = b
    augmented[n:, n:] = a
    exponential = expm(augmented)
    return exponential[:n, :n], exponential[:n, n:]
