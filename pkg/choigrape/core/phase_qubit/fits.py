"""
Fitted analytic curves of the three-level phase qubit model.

DVR and cubic-potential data are sampled on a bias grid and reduced to
curves with analytic derivatives:

- eta: cubic in delta = phi_b - phi_ref constrained to eta(0) = 1, eta'(0) = 0
- alpha: quadratic in delta, fitted in relative residuals
- omega: five-parameter form a (b + c phi_b)^d + e
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq, least_squares

from ..errors import ConfigurationError, FitQualityError, ValidityError, WellDisappearedError
from ..models import (
    TWO_PI,
    DVRSolution,
    FitSample,
    ModelSettings,
    QubitModelFits,
    QubitParams,
    WKBRates,
)
from .dvr import dvr_solve, overlap, two_state_limit
from .potential import alpha_of_bias

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[float, str], None]


def wkb_log_gamma1(alpha: float, omega: float) -> float:
    return math.log(432.0 * omega) + 0.5 * math.log(alpha**3 / math.pi) - 1.2 * alpha


def wkb_rates(phi_b: float, fits: QubitModelFits) -> WKBRates:
    """
    Tunneling rates of |0> and |1> into the continuum.

        gamma0 = 6 omega sqrt(alpha/pi) exp(-6 alpha/5)
        gamma1 = 432 omega sqrt(alpha^3/pi) exp(-6 alpha/5)

    Raises:
        ValidityError: fitted alpha is not positive
    """
    alpha = fits.alpha(phi_b)
    omega = fits.omega(phi_b)
    if alpha.value <= 0.0:
        raise ValidityError(f"alpha = {alpha.value:.4g} <= 0 at phi_b = {phi_b:.6f}")

    decay = math.exp(-1.2 * alpha.value)
    gamma0 = 6.0 * omega.value * math.sqrt(alpha.value / math.pi) * decay
    gamma1 = 432.0 * omega.value * math.sqrt(alpha.value**3 / math.pi) * decay

    log_omega = omega.derivative / omega.value
    dgamma0 = gamma0 * (log_omega + alpha.derivative * (0.5 / alpha.value - 1.2))
    dgamma1 = gamma1 * (log_omega + alpha.derivative * (1.5 / alpha.value - 1.2))
    return WKBRates(gamma0=gamma0, gamma1=gamma1, dgamma0=dgamma0, dgamma1=dgamma1)


def find_reference_bias(params: QubitParams, settings: ModelSettings) -> float:
    """
    Largest bias with gamma1 below the configured threshold.

    Uses the directly computed alpha and the DVR transition frequency, so
    it does not depend on the fits it anchors.
    """
    if settings.phi_ref_over_2pi is not None:
        return settings.phi_ref_over_2pi * TWO_PI

    target = math.log(settings.gamma1_threshold)

    def excess(phi_b: float) -> float:
        alpha = alpha_of_bias(phi_b, params)
        omega = dvr_solve(phi_b, params, settings, check_convergence=False).transition_frequency
        return wkb_log_gamma1(alpha, omega) - target

    lo = settings.ref_search_min_over_2pi * TWO_PI
    hi = settings.ref_search_max_over_2pi * TWO_PI
    try:
        if excess(lo) > 0.0 or excess(hi) < 0.0:
            raise ConfigurationError(
                f"gamma1 = {settings.gamma1_threshold:g}/ns is not crossed between "
                f"{settings.ref_search_min_over_2pi} and {settings.ref_search_max_over_2pi} (x2pi)"
            )
    except (WellDisappearedError, ValidityError) as e:
        raise ConfigurationError(f"Reference search range is outside the model: {e}") from e
    phi_ref = brentq(excess, lo, hi, xtol=1e-10)
    logger.info("Reference bias phi_ref = %.6f*2pi", phi_ref / TWO_PI)
    return phi_ref


def fit_eta(delta: np.ndarray, eta: np.ndarray) -> list[float]:
    """Least squares for eta - 1 = a2 delta^2 + a3 delta^3."""
    design = np.column_stack([delta**2, delta**3])
    (a2, a3), *_ = np.linalg.lstsq(design, eta - 1.0, rcond=None)
    return [1.0, 0.0, float(a2), float(a3)]


def fit_alpha(delta: np.ndarray, alpha: np.ndarray) -> list[float]:
    """Quadratic least squares in relative residuals."""
    return [float(c) for c in P.polyfit(delta, alpha, 2, w=1.0 / np.abs(alpha))]


def omega_model(params: np.ndarray, phi_b: np.ndarray) -> np.ndarray:
    a, b, c, d, e = params
    base = np.maximum(b + c * phi_b, 1e-12)
    return a * base**d + e


def fit_omega(phi_b: np.ndarray, omega: np.ndarray, critical_bias: float) -> list[float]:
    """Nonlinear least squares for a (b + c phi_b)^d + e in relative residuals."""
    b0, c0, d0 = critical_bias, -1.0, 0.25
    base = np.maximum(b0 + c0 * phi_b, 1e-12)
    a0 = float(np.dot(base**d0, omega) / np.dot(base**d0, base**d0))
    start = np.array([a0, b0, c0, d0, 0.0])

    result = least_squares(
        lambda p: (omega_model(p, phi_b) - omega) / omega,
        start,
        method="trf",
        x_scale="jac",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=20000,
    )
    if not result.success:
        logger.warning("omega fit did not converge: %s", result.message)
    return [float(v) for v in result.x]


def _sample(
    phi_b: float, params: QubitParams, settings: ModelSettings, reference: DVRSolution
) -> FitSample:
    solution = dvr_solve(phi_b, params, settings)
    analysis = solution.analysis
    omega_dvr = solution.transition_frequency if solution.n_well_states >= 2 else None
    return FitSample(
        phi_b=phi_b,
        eta=overlap(solution, reference),
        alpha=analysis.alpha,
        omega_harmonic=analysis.omega_harmonic,
        omega_dvr=omega_dvr,
        n_well_states=solution.n_well_states,
    )


def validity_limit(fits: QubitModelFits, threshold: Optional[float] = None) -> float:
    """
    Bias where the fitted alpha reaches the three-level threshold.

    Raises:
        ConfigurationError: alpha does not cross the threshold on the fit range
    """
    level = fits.alpha_threshold if threshold is None else threshold

    def gap(phi_b: float) -> float:
        return fits.alpha(phi_b).value - level

    lo, hi = fits.fit_min, fits.fit_max
    if gap(lo) * gap(hi) > 0.0:
        raise ConfigurationError(
            f"alpha = {level} is not reached between {lo / TWO_PI:.5f} and {hi / TWO_PI:.5f} (x2pi)"
        )
    return brentq(gap, lo, hi, xtol=1e-14)


def alpha_threshold_bias(params: QubitParams, threshold: float, lower: float, upper: float) -> float:
    """
    Bias where the directly computed alpha crosses the threshold.

    Raises:
        ConfigurationError: no crossing between lower and upper
    """

    def gap(phi_b: float) -> float:
        return alpha_of_bias(phi_b, params) - threshold

    try:
        bracketed = gap(lower) * gap(upper) <= 0.0
    except WellDisappearedError as e:
        raise ConfigurationError(f"alpha search range is outside the model: {e}") from e
    if not bracketed:
        raise ConfigurationError(
            f"alpha = {threshold} is not reached between {lower / TWO_PI:.5f} and {upper / TWO_PI:.5f} (x2pi)"
        )
    return brentq(gap, lower, upper, xtol=1e-14)


def fit_model_curves(
    params: QubitParams,
    settings: ModelSettings,
    workers: int = 1,
    progress: Optional[ProgressCallback] = None,
) -> QubitModelFits:
    """
    Sample the model on the bias grid and fit eta, alpha and omega.

    Args:
        params: circuit parameters
        settings: fit ranges, DVR grid and residual thresholds
        workers: thread count for the per-bias DVR solves
        progress: optional callback receiving (fraction, message)

    Returns:
        QubitModelFits with validity and two-state limits filled in

    Raises:
        FitQualityError: a fit misses its data by more than its tolerance
        ConfigurationError: no reference bias or no alpha = threshold root
    """

    def report(fraction: float, message: str) -> None:
        if progress:
            progress(fraction, message)

    report(0.0, "Locating reference bias")
    phi_ref = find_reference_bias(params, settings)
    reference = dvr_solve(phi_ref, params, settings)
    omega_ref = reference.transition_frequency

    fit_min = min(settings.fit_min_over_2pi * TWO_PI, phi_ref)
    fit_max = settings.fit_max_over_2pi * TWO_PI
    biases = np.linspace(fit_min, fit_max, settings.fit_points)

    report(0.1, f"Solving DVR at {len(biases)} biases")
    try:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            samples = list(executor.map(lambda phi: _sample(phi, params, settings, reference), biases))
    except WellDisappearedError as e:
        raise ConfigurationError(f"Fit range reaches past the shallow well: {e}") from e
    report(0.7, "Fitting curves")

    phi = np.array([s.phi_b for s in samples])
    delta = phi - phi_ref
    eta = np.array([s.eta for s in samples])
    alpha = np.array([s.alpha for s in samples])
    two_state = np.array([s.omega_dvr is not None for s in samples])
    if two_state.sum() < 6:
        raise ConfigurationError("Too few biases with two well states to fit omega")
    omega_dvr = np.array([s.omega_dvr for s in samples if s.omega_dvr is not None])
    omega_harm = np.array([s.omega_harmonic for s in samples])[two_state]

    eta_poly = fit_eta(delta, eta)
    alpha_poly = fit_alpha(delta, alpha)
    omega_params = fit_omega(phi[two_state], omega_dvr, params.critical_bias)

    eta_fit = P.polyval(delta, eta_poly)
    alpha_fit = P.polyval(delta, alpha_poly)
    omega_fit = omega_model(np.asarray(omega_params), phi)

    residuals = {
        "eta_max_abs": float(np.max(np.abs(eta_fit - eta))),
        "alpha_max_rel": float(np.max(np.abs(alpha_fit - alpha) / np.abs(alpha))),
        "omega_max_rel": float(np.max(np.abs(omega_fit[two_state] - omega_dvr) / omega_dvr)),
        "omega_harmonic_max_rel": float(np.max(np.abs(omega_harm - omega_dvr) / omega_dvr)),
    }
    logger.info(
        "Fit residuals: eta %.2e abs, alpha %.2e rel, omega %.2e rel (harmonic %.2e)",
        residuals["eta_max_abs"],
        residuals["alpha_max_rel"],
        residuals["omega_max_rel"],
        residuals["omega_harmonic_max_rel"],
    )
    for curve, key, tolerance in (
        ("eta", "eta_max_abs", settings.eta_tolerance),
        ("alpha", "alpha_max_rel", settings.alpha_tolerance),
        ("omega", "omega_max_rel", settings.omega_tolerance),
    ):
        if residuals[key] > tolerance:
            raise FitQualityError(curve, residuals[key], tolerance)

    fitted_samples = [
        sample.model_copy(
            update={
                "eta_fit": float(eta_fit[k]),
                "alpha_fit": float(alpha_fit[k]),
                "omega_fit": float(omega_fit[k]),
            }
        )
        for k, sample in enumerate(samples)
    ]

    fits = QubitModelFits(
        params=params,
        phi_ref=phi_ref,
        omega_ref=omega_ref,
        eta_poly=eta_poly,
        alpha_poly=alpha_poly,
        omega_params=omega_params,
        fit_min=fit_min,
        fit_max=fit_max,
        alpha_threshold=settings.alpha_threshold,
        residuals=residuals,
        samples=fitted_samples,
    )

    report(0.8, "Solving validity limits")
    limit = validity_limit(fits)
    direct = alpha_threshold_bias(params, settings.alpha_threshold, fit_min, fit_max)
    if abs(direct - limit) > 1e-4 * TWO_PI:
        logger.warning(
            "Fitted alpha = %g at %.5f*2pi but direct alpha at %.5f*2pi",
            settings.alpha_threshold,
            limit / TWO_PI,
            direct / TWO_PI,
        )
    last_two_state = float(phi[two_state].max())
    dvr_limit = two_state_limit(params, settings, lower=last_two_state)
    logger.info(
        "Validity limit %.5f*2pi (alpha = %g), DVR two-state limit %.5f*2pi",
        limit / TWO_PI,
        settings.alpha_threshold,
        dvr_limit / TWO_PI,
    )
    report(1.0, "Model fit complete")
    return fits.model_copy(update={"validity_limit": limit, "two_state_limit": dvr_limit})
