"""
Particle-in-a-box discrete variable representation of the phase qubit.

Kinetic energy E_c N^2 with N = -i d/dphi uses the Colbert-Miller
uniform-grid formula for the interval (a, b) with hard walls, E_c in the
role of hbar^2/2m and N intervals of width dx = (b - a)/N:

    T_ii = E_c pi^2 / (2 L^2) ((2N^2 + 1)/3 - 1/sin^2(pi i/N))
    T_ij = E_c pi^2 / (2 L^2) (-1)^(i-j) (1/sin^2(pi (i-j)/2N) - 1/sin^2(pi (i+j)/2N))

The walls sit at fixed positions relative to the well extrema, so halving
dx refines the same problem. Wavefunctions are sine series on their box;
overlaps between biases evaluate one series on the other's grid.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
import scipy.fft
import scipy.linalg
from scipy.optimize import brentq

from ..errors import ArgumentError, ResolutionError, WellDisappearedError
from ..models import DVRSolution, ModelSettings, PotentialAnalysis, QubitParams
from .potential import find_well_extrema, potential

logger = logging.getLogger(__name__)


def box_grid(left: float, right: float, n_intervals: int) -> np.ndarray:
    """Interior points of (left, right) split into n_intervals equal parts."""
    if n_intervals < 4:
        raise ArgumentError("DVR box needs at least four intervals")
    if right <= left:
        raise ArgumentError(f"Empty DVR box ({left:.6f}, {right:.6f})")
    return left + (right - left) * np.arange(1, n_intervals) / n_intervals


def box_dvr(
    left: float,
    right: float,
    potential_values: np.ndarray,
    kinetic_scale: float,
    n_states: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Diagonalize kinetic_scale * (-d^2/dx^2) + V between hard walls.

    ``potential_values`` are taken on ``box_grid(left, right, len + 1)``.

    Returns:
        (energies, vectors): ascending eigenvalues and orthonormal columns
    """
    values = np.asarray(potential_values, dtype=float)
    n = values.size
    n_intervals = n + 1
    if n_intervals < 4:
        raise ArgumentError("DVR box needs at least four intervals")
    width = right - left

    index = np.arange(1, n_intervals)
    diff = index[:, None] - index[None, :]
    total = index[:, None] + index[None, :]
    with np.errstate(divide="ignore"):
        kinetic = (-1.0) ** diff * (
            1.0 / np.sin(np.pi * diff / (2 * n_intervals)) ** 2
            - 1.0 / np.sin(np.pi * total / (2 * n_intervals)) ** 2
        )
    kinetic[np.diag_indices(n)] = (2.0 * n_intervals**2 + 1.0) / 3.0 - 1.0 / np.sin(
        np.pi * index / n_intervals
    ) ** 2

    hamiltonian = kinetic_scale * np.pi**2 / (2.0 * width**2) * kinetic
    hamiltonian[np.diag_indices(n)] += values

    subset = None if n_states is None else (0, min(n_states, n) - 1)
    return scipy.linalg.eigh(hamiltonian, subset_by_index=subset)


def _barrier_left_edge(analysis: PotentialAnalysis, left: float, params: QubitParams) -> float:
    """Left turning point of the shallow well at the barrier energy."""

    def excess(phi: float) -> float:
        return float(potential(phi, analysis.phi_b, params)[0]) - analysis.V_max

    if excess(left) <= 0.0:
        return left
    return brentq(excess, left, analysis.phi_min, xtol=1e-12)


def _solve_in_box(
    phi_b: float,
    params: QubitParams,
    settings: ModelSettings,
    right_margin: float,
    refinement: int = 1,
) -> DVRSolution:
    analysis = find_well_extrema(phi_b, params)
    left = analysis.phi_min - settings.dvr_left_extent
    right = analysis.phi_max + right_margin
    n_intervals = math.ceil((right - left) / settings.dvr_dx) * refinement
    grid = box_grid(left, right, n_intervals)
    dx = (right - left) / n_intervals
    values, _ = potential(grid, phi_b, params)

    energies, vectors = box_dvr(left, right, values, params.E_c, settings.dvr_states)
    wavefunctions = vectors / math.sqrt(dx)

    # Sign convention: positive at the well minimum, else at the largest lobe
    at_min = int(np.argmin(np.abs(grid - analysis.phi_min)))
    for k in range(wavefunctions.shape[1]):
        column = wavefunctions[:, k]
        pivot = column[at_min]
        if abs(pivot) < 1e-3 * np.max(np.abs(column)):
            pivot = column[int(np.argmax(np.abs(column)))]
        if pivot < 0:
            wavefunctions[:, k] = -column

    edge = _barrier_left_edge(analysis, left, params)
    inside = (grid >= edge) & (grid <= analysis.phi_max)
    well = [
        k
        for k in range(len(energies))
        if energies[k] < analysis.V_max
        and np.sum(wavefunctions[inside, k] ** 2) * dx >= settings.well_mass_threshold
    ]

    return DVRSolution(
        phi_b=phi_b,
        left=left,
        right=right,
        dx=dx,
        grid=grid,
        potential=values,
        energies=energies,
        wavefunctions=wavefunctions,
        well_indices=well,
        analysis=analysis,
    )


def dvr_solve(
    phi_b: float,
    params: QubitParams,
    settings: ModelSettings,
    check_convergence: Optional[bool] = None,
    right_margin: Optional[float] = None,
) -> DVRSolution:
    """
    Solve the shallow-well spectrum at one bias.

    Args:
        phi_b: flux bias in rad
        params: circuit parameters
        settings: window, grid spacing and convergence tolerance
        check_convergence: override ``settings.dvr_check_convergence``
        right_margin: override ``settings.dvr_right_margin``

    Raises:
        WellDisappearedError: no shallow well at this bias
        ResolutionError: well energies move by more than the tolerance when dx is halved
    """
    margin = settings.dvr_right_margin if right_margin is None else right_margin
    solution = _solve_in_box(phi_b, params, settings, margin)

    check = settings.dvr_check_convergence if check_convergence is None else check_convergence
    if check:
        fine = _solve_in_box(phi_b, params, settings, margin, refinement=2)
        levels = min(2, solution.n_well_states, fine.n_well_states)
        for level in range(levels):
            change = abs(fine.well_energy(level) - solution.well_energy(level))
            if change > settings.dvr_convergence_tol:
                raise ResolutionError(
                    f"E{level} changes by {change:.3e} rad/ns on refinement at phi_b = {phi_b:.6f}"
                )
    return solution


def evaluate_state(solution: DVRSolution, level: int, points: np.ndarray) -> np.ndarray:
    """Sine-series interpolant of a well state, zero outside the box."""
    psi = solution.well_state(level)
    width = solution.right - solution.left
    norm = math.sqrt(2.0 / width)
    coefficients = 0.5 * solution.dx * norm * scipy.fft.dst(psi, type=1)

    points = np.asarray(points, dtype=float)
    values = np.zeros(points.shape)
    inside = (points > solution.left) & (points < solution.right)
    modes = np.arange(1, psi.size + 1)
    basis = norm * np.sin(np.pi * np.outer(points[inside] - solution.left, modes) / width)
    values[inside] = basis @ coefficients
    return values


def overlap(a: DVRSolution, b: DVRSolution, level: int = 0) -> float:
    """Inner product of a well state at two biases, quadrature on the grid of ``a``."""
    return float(np.dot(a.well_state(level), evaluate_state(b, level, a.grid)) * a.dx)


def eta_overlap(
    phi_b: float, phi_ref: float, params: QubitParams, settings: ModelSettings
) -> float:
    """Overlap of the |0> wavefunction at phi_b with itself at phi_ref."""
    return overlap(dvr_solve(phi_b, params, settings), dvr_solve(phi_ref, params, settings))


def count_well_states(phi_b: float, params: QubitParams, settings: ModelSettings) -> int:
    """Bound shallow-well states with the right wall at ``well_count_margin``."""
    try:
        solution = dvr_solve(
            phi_b, params, settings, check_convergence=False, right_margin=settings.well_count_margin
        )
    except WellDisappearedError:
        return 0
    return solution.n_well_states


def two_state_limit(
    params: QubitParams,
    settings: ModelSettings,
    lower: float,
    upper: Optional[float] = None,
    tolerance: float = 1e-7,
) -> float:
    """
    Largest bias at which the DVR still finds two shallow-well states.

    Bisects on the well-state count between ``lower`` (two states) and
    ``upper`` (fewer than two), defaulting to the well-disappearance bias.
    """
    hi = params.critical_bias if upper is None else upper
    lo = lower
    if count_well_states(lo, params, settings) < 2:
        raise ArgumentError(f"Fewer than two well states already at phi_b = {lo:.6f}")
    if count_well_states(hi, params, settings) >= 2:
        raise ArgumentError(f"Two well states persist up to phi_b = {hi:.6f}")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if count_well_states(mid, params, settings) >= 2:
            lo = mid
        else:
            hi = mid
    logger.debug("DVR two-state limit at %.6f*2pi", lo / (2 * math.pi))
    return lo
