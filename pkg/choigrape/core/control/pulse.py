"""
Pulse parameterization: bounded optimizer variables, hold pixels and
Gaussian smoothing.

    x (free variables) -> raw = [ref]*head + lo + (hi - lo) expit(x) + [ref]*tail
                       -> physical = J raw

J is the constant smoothing matrix, so gradients pull back as J^T.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.special import expit, logit

from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

KERNEL_TRUNCATE = 4.0
LOGIT_MARGIN = 1e-9


def smooth(raw_pixels: np.ndarray, kernel_sigma: float, dt: float) -> np.ndarray:
    """
    Convolve with a normalized Gaussian truncated at 4 sigma.

    Edges are extended with the boundary value; sigma = 0 returns the input.
    """
    raw = np.asarray(raw_pixels, dtype=float)
    if kernel_sigma == 0.0:
        return raw.copy()
    return gaussian_filter1d(raw, kernel_sigma / dt, mode="nearest", truncate=KERNEL_TRUNCATE)


def smoothing_jacobian(n_pixels: int, kernel_sigma: float, dt: float) -> np.ndarray:
    """Constant matrix J with smooth(x) = J x."""
    identity = np.eye(n_pixels)
    if kernel_sigma == 0.0:
        return identity
    return gaussian_filter1d(
        identity, kernel_sigma / dt, axis=0, mode="nearest", truncate=KERNEL_TRUNCATE
    )


class PulseTemplate:
    """Pixel grid, hold pixels, bounds and smoothing of a control pulse"""

    def __init__(
        self,
        n_pixels: int,
        dt: float,
        reference: float,
        lower: float,
        upper: float,
        kernel_sigma: float = 0.0,
        head: int = 0,
        tail: int = 0,
    ):
        if n_pixels < 1 or dt <= 0:
            raise ConfigurationError(f"Invalid pulse grid: {n_pixels} pixels of {dt} ns")
        if head < 0 or tail < 0 or head + tail >= n_pixels:
            raise ConfigurationError(f"Holds of {head}+{tail} pixels leave no free pixels out of {n_pixels}")
        if not lower < upper:
            raise ConfigurationError(f"Pulse bounds are inconsistent: lower {lower} >= upper {upper}")
        if not lower <= reference <= upper:
            raise ConfigurationError(
                f"Reference value {reference} lies outside the pulse bounds [{lower}, {upper}]"
            )
        if kernel_sigma < 0:
            raise ConfigurationError("Smoothing width must be non-negative")

        self.n_pixels = n_pixels
        self.dt = dt
        self.reference = reference
        self.lower = lower
        self.upper = upper
        self.kernel_sigma = kernel_sigma
        self.head = head
        self.tail = tail
        self.jacobian = smoothing_jacobian(n_pixels, kernel_sigma, dt)

    @property
    def n_free(self) -> int:
        return self.n_pixels - self.head - self.tail

    @property
    def duration(self) -> float:
        return self.n_pixels * self.dt

    @property
    def times(self) -> np.ndarray:
        """Left edge of every pixel, ns"""
        return np.arange(self.n_pixels) * self.dt

    @property
    def free_slice(self) -> slice:
        return slice(self.head, self.n_pixels - self.tail)

    def bounded(self, variables: np.ndarray) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * expit(np.asarray(variables, dtype=float))

    def raw_from_variables(self, variables: np.ndarray) -> np.ndarray:
        variables = np.asarray(variables, dtype=float)
        if variables.shape != (self.n_free,):
            raise ConfigurationError(f"Expected {self.n_free} pulse variables, got {variables.shape}")
        raw = np.full(self.n_pixels, self.reference, dtype=float)
        raw[self.free_slice] = self.bounded(variables)
        return raw

    def physical(self, raw_pixels: np.ndarray) -> np.ndarray:
        return self.jacobian @ np.asarray(raw_pixels, dtype=float)

    def variables_from_values(self, values: np.ndarray) -> np.ndarray:
        """Inverse of the bounded transform, clipped just inside the bounds"""
        fraction = (np.asarray(values, dtype=float) - self.lower) / (self.upper - self.lower)
        return logit(np.clip(fraction, LOGIT_MARGIN, 1.0 - LOGIT_MARGIN))

    def initial_variables(self, amplitude: float) -> np.ndarray:
        """Square pulse at ``amplitude`` on the free pixels"""
        if not self.lower < amplitude < self.upper:
            raise ConfigurationError(
                f"Initial amplitude {amplitude:.6f} must lie strictly inside [{self.lower:.6f}, {self.upper:.6f}]"
            )
        return self.variables_from_values(np.full(self.n_free, amplitude))

    def pull_back(self, raw_gradient: np.ndarray, variables: np.ndarray) -> np.ndarray:
        """Chain rule from raw pixels to the free optimizer variables"""
        s = expit(np.asarray(variables, dtype=float))
        return np.asarray(raw_gradient)[self.free_slice] * (self.upper - self.lower) * s * (1.0 - s)
