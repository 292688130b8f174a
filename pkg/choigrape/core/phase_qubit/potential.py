"""
Flux-biased phase qubit potential and its shallow-well extrema.

All energies are angular frequencies in rad/ns with hbar = 1:

    V(phi) = E_J ((phi - phi_b)^2 / (2 beta) - cos(phi))

For a bias a little below 2pi the shallow well minimum lies where
V'' > 0, i.e. |phi| < arccos(-1/beta), and its barrier maximum in the
adjacent V'' < 0 band. Both are found by bracketed root finding on V'.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.optimize import brentq

from ..errors import WellDisappearedError
from ..models import PotentialAnalysis, QubitParams

logger = logging.getLogger(__name__)


def potential(phi: np.ndarray | float, phi_b: float, params: QubitParams) -> tuple[np.ndarray, np.ndarray]:
    """Return V(phi) and dV/dphi for the given bias."""
    phi = np.asarray(phi, dtype=float)
    e_j, beta = params.E_J, params.beta
    value = e_j * ((phi - phi_b) ** 2 / (2.0 * beta) - np.cos(phi))
    slope = e_j * ((phi - phi_b) / beta + np.sin(phi))
    return value, slope


def _slope(phi: float, phi_b: float, params: QubitParams) -> float:
    return params.E_J * ((phi - phi_b) / params.beta + math.sin(phi))


def harmonic_frequency(phi_min: float, params: QubitParams) -> float:
    """hbar omega = sqrt(2 E_c E_J (1/beta + cos(phi_min)))."""
    curvature = 1.0 / params.beta + math.cos(phi_min)
    return math.sqrt(2.0 * params.E_c * params.E_J * curvature)


def find_well_extrema(phi_b: float, params: QubitParams) -> PotentialAnalysis:
    """
    Locate the shallow-well minimum and its barrier maximum.

    Raises:
        WellDisappearedError: V' has no sign change in either bracket
    """
    phi_c = params.critical_phase
    xtol = 1e-14

    if _slope(phi_c, phi_b, params) <= 0.0 or _slope(-phi_c, phi_b, params) >= 0.0:
        raise WellDisappearedError(phi_b)
    if _slope(2.0 * math.pi - phi_c, phi_b, params) >= 0.0:
        raise WellDisappearedError(phi_b, f"No barrier beyond the shallow well at phi_b = {phi_b:.6f}")

    phi_min = brentq(_slope, -phi_c, phi_c, args=(phi_b, params), xtol=xtol, rtol=4 * np.finfo(float).eps)
    phi_max = brentq(
        _slope, phi_c, 2.0 * math.pi - phi_c, args=(phi_b, params), xtol=xtol, rtol=4 * np.finfo(float).eps
    )

    v_min = float(potential(phi_min, phi_b, params)[0])
    v_max = float(potential(phi_max, phi_b, params)[0])
    omega = harmonic_frequency(phi_min, params)
    height = v_max - v_min
    mass = params.mass
    phi_tilde = math.sqrt(6.0 * height / (mass * omega**2))

    return PotentialAnalysis(
        phi_b=phi_b,
        phi_min=phi_min,
        phi_max=phi_max,
        V_min=v_min,
        V_max=v_max,
        alpha=6.0 * height / omega,
        omega_harmonic=omega,
        mass=mass,
        phi_tilde=phi_tilde,
    )


def alpha_of_bias(phi_b: float, params: QubitParams) -> float:
    """6 (V_max - V_min) / hbar omega from the located extrema."""
    return find_well_extrema(phi_b, params).alpha


def alpha_from_cubic(analysis: PotentialAnalysis) -> float:
    """m omega^2 phi_tilde^2 / hbar omega from the cubic-potential parameters."""
    omega = analysis.omega_harmonic
    return analysis.mass * omega**2 * analysis.phi_tilde**2 / omega
