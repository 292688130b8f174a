"""Tests for the phase qubit potential, DVR, fitted curves and three-level model"""
import math

import numpy as np
import pytest

from choigrape.core.channel import cptp_report, propagator_from_channel
from choigrape.core.errors import (
    ArgumentError,
    ConfigurationError,
    ResolutionError,
    ValidityError,
    WellDisappearedError,
)
from choigrape.core.liouville import coherent_generator, column_stack, dissipator, evolve, expm, trace_residual, unstack
from choigrape.core.models import TWO_PI, ModelSettings, QubitParams
from choigrape.core.phase_qubit import (
    PhaseQubitModel,
    alpha_from_cubic,
    alpha_of_bias,
    alpha_threshold_bias,
    box_dvr,
    box_grid,
    contrast,
    control_generator,
    count_well_states,
    drift_generator,
    dvr_solve,
    eta_overlap,
    evaluate_state,
    find_reference_bias,
    find_well_extrema,
    fit_alpha,
    fit_eta,
    fit_omega,
    ket_bra,
    mixing_matrix,
    omega_model,
    overlap,
    potential,
    target_choi,
    validity_limit,
    wkb_log_gamma1,
    wkb_rates,
)


@pytest.fixture
def params() -> QubitParams:
    return QubitParams()


def brute_force_alpha(phi_b: float, params: QubitParams) -> float:
    """6 dU / omega from dense-grid extrema and a finite-difference curvature"""
    phi_c = params.critical_phase

    def vertex(grid: np.ndarray, k: int) -> float:
        v = potential(grid[k - 1 : k + 2], phi_b, params)[0]
        h = grid[1] - grid[0]
        return grid[k] - 0.5 * h * (v[2] - v[0]) / (v[2] - 2.0 * v[1] + v[0])

    well = np.linspace(-phi_c, phi_c, 200001)
    barrier = np.linspace(phi_c, TWO_PI - phi_c, 200001)
    phi_min = vertex(well, int(np.argmin(potential(well, phi_b, params)[0])))
    phi_max = vertex(barrier, int(np.argmax(potential(barrier, phi_b, params)[0])))

    h = 1e-3
    v = potential(np.array([phi_min - h, phi_min, phi_min + h]), phi_b, params)[0]
    curvature = (v[0] - 2.0 * v[1] + v[2]) / h**2
    omega = math.sqrt(2.0 * params.E_c * curvature)
    height = float(potential(phi_max, phi_b, params)[0] - potential(phi_min, phi_b, params)[0])
    return 6.0 * height / omega


class TestQubitParams:
    """Derived circuit quantities"""

    def test_energies(self, params):
        assert params.E_c == pytest.approx(0.4868, rel=1e-3)
        assert params.E_J == pytest.approx(6241.5, rel=1e-4)
        assert params.mass == pytest.approx(1.0 / (2.0 * params.E_c))

    def test_critical_bias(self, params):
        phi_c = math.acos(-1.0 / params.beta)
        assert params.critical_bias == pytest.approx(phi_c + params.beta * math.sin(phi_c))
        assert 0.96 < params.critical_bias / TWO_PI < 0.97

    def test_relaxation_rate(self, params):
        assert params.relaxation_rate == pytest.approx(0.002, rel=1e-15)


class TestPotential:
    """Shallow-well extrema and the cubic approximation"""

    def test_slope_matches_finite_difference(self, params):
        phi = np.linspace(-1.0, 5.0, 7)
        h = 1e-6
        _, slope = potential(phi, 0.93 * TWO_PI, params)
        fd = (potential(phi + h, 0.93 * TWO_PI, params)[0] - potential(phi - h, 0.93 * TWO_PI, params)[0]) / (2 * h)
        np.testing.assert_allclose(slope, fd, rtol=1e-6)

    def test_extrema_are_stationary(self, params):
        analysis = find_well_extrema(0.94 * TWO_PI, params)
        for phi in (analysis.phi_min, analysis.phi_max):
            assert abs(potential(phi, analysis.phi_b, params)[1]) < 1e-6
        assert analysis.phi_min < analysis.phi_max
        assert analysis.barrier_height > 0

    @pytest.mark.parametrize("fraction", [0.93, 0.94, 0.945])
    def test_alpha_matches_dense_grid(self, params, fraction):
        assert alpha_of_bias(fraction * TWO_PI, params) == pytest.approx(
            brute_force_alpha(fraction * TWO_PI, params), rel=1e-6
        )

    def test_cubic_alpha_matches_direct(self, params):
        analysis = find_well_extrema(0.94 * TWO_PI, params)
        assert alpha_from_cubic(analysis) == pytest.approx(alpha_of_bias(0.94 * TWO_PI, params), rel=1e-12)

    def test_alpha_decreases_with_bias(self, params):
        alphas = [alpha_of_bias(f * TWO_PI, params) for f in (0.93, 0.94, 0.95)]
        assert alphas[0] > alphas[1] > alphas[2]

    def test_alpha_threshold_bias(self, params):
        phi_9 = alpha_threshold_bias(params, 9.0, 0.93 * TWO_PI, 0.95 * TWO_PI)
        assert alpha_of_bias(phi_9, params) == pytest.approx(9.0, abs=1e-9)
        assert 0.9444 <= phi_9 / TWO_PI <= 0.9464
        assert phi_9 / TWO_PI == pytest.approx(0.94484, abs=1e-4)

    def test_alpha_threshold_outside_range_rejected(self, params):
        with pytest.raises(ConfigurationError):
            alpha_threshold_bias(params, 1000.0, 0.93 * TWO_PI, 0.94 * TWO_PI)

    def test_well_disappears_past_critical_bias(self, params):
        with pytest.raises(WellDisappearedError) as excinfo:
            find_well_extrema(params.critical_bias + 0.01, params)
        assert excinfo.value.phi_b == pytest.approx(params.critical_bias + 0.01)


class TestBoxDVR:
    """Hard-walled uniform-grid DVR"""

    def test_harmonic_oscillator_levels(self):
        grid = box_grid(-10.0, 10.0, 400)
        energies, vectors = box_dvr(-10.0, 10.0, 0.5 * grid**2, kinetic_scale=0.5, n_states=5)
        np.testing.assert_allclose(energies, np.arange(5) + 0.5, rtol=1e-6)
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(5), atol=1e-12)

    def test_particle_in_a_box(self):
        grid = box_grid(0.0, 1.0, 64)
        energies, _ = box_dvr(0.0, 1.0, np.zeros_like(grid), kinetic_scale=1.0, n_states=3)
        np.testing.assert_allclose(energies, (np.pi * np.arange(1, 4)) ** 2, rtol=1e-10)

    def test_grid_excludes_walls(self):
        grid = box_grid(1.0, 2.0, 10)
        assert len(grid) == 9
        assert grid[0] == pytest.approx(1.1)
        assert grid[-1] == pytest.approx(1.9)

    @pytest.mark.parametrize("left, right, n", [(0.0, 1.0, 3), (1.0, 1.0, 10), (1.0, 0.0, 10)])
    def test_degenerate_boxes_rejected(self, left, right, n):
        with pytest.raises(ArgumentError):
            box_grid(left, right, n)

    def test_too_few_points_rejected(self):
        with pytest.raises(ArgumentError):
            box_dvr(0.0, 1.0, np.zeros(2), 1.0)


class TestShallowWellDVR:
    """Shallow-well spectrum, convergence and overlaps"""

    def test_well_states_are_normalized(self, params):
        solution = dvr_solve(0.93 * TWO_PI, params, ModelSettings())
        assert solution.n_well_states >= 2
        for level in (0, 1):
            psi = solution.well_state(level)
            assert np.sum(psi**2) * solution.dx == pytest.approx(1.0, abs=1e-10)
        assert solution.transition_frequency > 0

    def test_walls_do_not_depend_on_spacing(self, params):
        coarse = dvr_solve(0.94 * TWO_PI, params, ModelSettings(dvr_dx=0.004), check_convergence=False)
        fine = dvr_solve(0.94 * TWO_PI, params, ModelSettings(dvr_dx=0.0025), check_convergence=False)
        assert coarse.left == fine.left
        assert coarse.right == fine.right
        assert fine.dx < coarse.dx

    @pytest.mark.parametrize("fraction", [0.93, 0.94, 0.945])
    def test_halving_spacing_leaves_levels_unchanged(self, params, fraction):
        settings = ModelSettings()
        solution = dvr_solve(fraction * TWO_PI, params, settings)
        halved = dvr_solve(
            fraction * TWO_PI,
            params,
            ModelSettings(dvr_dx=0.5 * solution.dx * (1.0 + 1e-12)),
            check_convergence=False,
        )
        assert len(halved.grid) == 2 * len(solution.grid) + 1
        for level in (0, 1):
            assert abs(halved.well_energy(level) - solution.well_energy(level)) < 1e-8

    def test_coarse_grid_fails_convergence(self, params):
        with pytest.raises(ResolutionError):
            dvr_solve(0.945 * TWO_PI, params, ModelSettings(dvr_dx=0.02))

    def test_two_well_states_below_alpha_nine(self, params):
        assert count_well_states(0.94 * TWO_PI, params, ModelSettings()) >= 2
        assert count_well_states(0.95 * TWO_PI, params, ModelSettings()) < 2
        assert count_well_states(params.critical_bias + 0.01, params, ModelSettings()) == 0

    def test_state_interpolant_reproduces_grid(self, params):
        solution = dvr_solve(0.935 * TWO_PI, params, ModelSettings(), check_convergence=False)
        for level in (0, 1):
            np.testing.assert_allclose(
                evaluate_state(solution, level, solution.grid), solution.well_state(level), atol=1e-10
            )
        assert evaluate_state(solution, 0, np.array([solution.left - 0.1, solution.right + 0.1])).tolist() == [0.0, 0.0]

    def test_overlap_is_one_at_reference(self, params):
        settings = ModelSettings()
        assert eta_overlap(0.93 * TWO_PI, 0.93 * TWO_PI, params, settings) == pytest.approx(1.0, abs=1e-10)
        assert 0.0 < eta_overlap(0.94 * TWO_PI, 0.93 * TWO_PI, params, settings) < 1.0

    def test_overlap_is_symmetric(self, params):
        settings = ModelSettings()
        a = dvr_solve(0.93 * TWO_PI, params, settings, check_convergence=False)
        b = dvr_solve(0.94 * TWO_PI, params, settings, check_convergence=False)
        assert overlap(a, b) == pytest.approx(overlap(b, a), abs=1e-6)


class TestCurveFits:
    """Least-squares fits on synthetic data"""

    def test_eta_fit_recovers_constrained_cubic(self):
        delta = np.linspace(0.0, 0.1, 15)
        coeffs = fit_eta(delta, 1.0 - 12.0 * delta**2 + 5.0 * delta**3)
        np.testing.assert_allclose(coeffs, [1.0, 0.0, -12.0, 5.0], atol=1e-9)

    def test_alpha_fit_recovers_quadratic(self):
        delta = np.linspace(-0.08, 0.04, 15)
        coeffs = fit_alpha(delta, 23.0 - 150.0 * delta + 30.0 * delta**2)
        np.testing.assert_allclose(coeffs, [23.0, -150.0, 30.0], rtol=1e-9)

    def test_omega_fit_reproduces_curve(self, params):
        phi = np.linspace(0.925, 0.945, 30) * TWO_PI
        truth = [55.0, params.critical_bias + 0.01, -1.0, 0.27, 1.5]
        omega = omega_model(np.array(truth), phi)
        fitted = fit_omega(phi, omega, params.critical_bias)
        np.testing.assert_allclose(omega_model(np.array(fitted), phi), omega, rtol=1e-4)

    def test_validity_limit_of_synthetic_fits(self, synthetic_fits):
        assert validity_limit(synthetic_fits) / TWO_PI == pytest.approx(0.9454, abs=1e-10)

    def test_validity_limit_requires_a_crossing(self, synthetic_fits):
        with pytest.raises(ConfigurationError):
            validity_limit(synthetic_fits, threshold=100.0)

    def test_mixing_is_sqrt_one_minus_eta_squared(self, synthetic_fits):
        for delta in (0.0, 0.02, 0.08):
            phi_b = synthetic_fits.phi_ref + delta
            eta = synthetic_fits.eta(phi_b).value
            assert synthetic_fits.mixing(phi_b).value == pytest.approx(math.sqrt(1.0 - eta**2), abs=1e-12)

    def test_log_gamma1_matches_rate(self, synthetic_fits):
        phi_b = synthetic_fits.phi_ref + 0.05
        log_rate = wkb_log_gamma1(synthetic_fits.alpha(phi_b).value, synthetic_fits.omega(phi_b).value)
        assert math.exp(log_rate) == pytest.approx(wkb_rates(phi_b, synthetic_fits).gamma1, rel=1e-12)


class TestThreeLevelModel:
    """Generators, target and contrast of the measurement model"""

    def test_mixing_matrix_is_involution(self):
        p = mixing_matrix(0.93)
        np.testing.assert_allclose(p @ p, np.eye(3), atol=1e-14)

    def test_drift_is_trace_preserving(self, params):
        assert trace_residual(drift_generator(params)) < 1e-15

    def test_drift_relaxes_excited_state_at_t1(self, params):
        generator = drift_generator(params)
        np.testing.assert_allclose(generator, 0.002 * dissipator(ket_bra(0, 1)), atol=1e-15)
        rho = unstack(evolve(expm(params.T1 * generator), column_stack(ket_bra(1, 1))))
        assert rho[1, 1].real == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert rho[0, 0].real == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)

    def test_control_is_rotated_reference_hamiltonian(self, synthetic_fits):
        phi_b = synthetic_fits.phi_ref + 0.04
        p = mixing_matrix(synthetic_fits.eta(phi_b).value)
        rotated = p @ (synthetic_fits.omega_ref * ket_bra(1, 1)) @ p
        rates = wkb_rates(phi_b, synthetic_fits)
        expected = (
            coherent_generator(rotated)
            + rates.gamma0 * dissipator(ket_bra(2, 0))
            + rates.gamma1 * dissipator(ket_bra(2, 1))
        )
        generator, _ = control_generator(phi_b, synthetic_fits)
        np.testing.assert_allclose(generator, expected, atol=1e-12)

    def test_control_derivative_matches_finite_difference(self, synthetic_fits):
        phi_b = synthetic_fits.phi_ref + 0.05
        h = 1e-7
        _, derivative = control_generator(phi_b, synthetic_fits)
        fd = (control_generator(phi_b + h, synthetic_fits)[0] - control_generator(phi_b - h, synthetic_fits)[0]) / (2 * h)
        np.testing.assert_allclose(derivative, fd, rtol=1e-5, atol=1e-6)

    def test_wkb_rate_derivatives(self, synthetic_fits):
        phi_b = synthetic_fits.phi_ref + 0.07
        h = 1e-7
        rates = wkb_rates(phi_b, synthetic_fits)
        plus, minus = wkb_rates(phi_b + h, synthetic_fits), wkb_rates(phi_b - h, synthetic_fits)
        assert rates.gamma1 > rates.gamma0 > 0
        assert rates.dgamma0 == pytest.approx((plus.gamma0 - minus.gamma0) / (2 * h), rel=1e-5)
        assert rates.dgamma1 == pytest.approx((plus.gamma1 - minus.gamma1) / (2 * h), rel=1e-5)

    @pytest.mark.parametrize("delta", [0.0, 0.03, 0.09])
    def test_excited_rate_ratio_is_72_alpha(self, synthetic_fits, delta):
        phi_b = synthetic_fits.phi_ref + delta
        rates = wkb_rates(phi_b, synthetic_fits)
        assert rates.gamma1 / rates.gamma0 == pytest.approx(72.0 * synthetic_fits.alpha(phi_b).value, rel=1e-12)

    def test_bias_above_validity_limit_rejected(self, synthetic_fits):
        with pytest.raises(ValidityError):
            control_generator(synthetic_fits.validity_limit + 0.01, synthetic_fits)

    def test_model_generator_is_drift_plus_control(self, synthetic_fits):
        model = PhaseQubitModel(synthetic_fits)
        phi_b = synthetic_fits.phi_ref + 0.03
        generator, derivative = model.generator(phi_b)
        control, control_derivative = control_generator(phi_b, synthetic_fits)
        np.testing.assert_allclose(generator, drift_generator(synthetic_fits.params) + control, atol=1e-12)
        np.testing.assert_allclose(derivative, control_derivative, atol=1e-12)
        assert model.reference == synthetic_fits.phi_ref
        assert model.dimension == 3

    def test_model_requires_validity_limit(self, synthetic_fits):
        with pytest.raises(ValidityError):
            PhaseQubitModel(synthetic_fits.model_copy(update={"validity_limit": None}))

    def test_target_is_cptp(self):
        report = cptp_report(target_choi())
        assert report.is_cptp()
        assert report.tp_residual < 1e-15

    def test_target_spectrum(self):
        choi = target_choi()
        assert np.trace(choi).real == pytest.approx(3.0)
        assert np.trace(choi @ choi).real == pytest.approx(5.0)
        eigenvalues = np.sort(np.linalg.eigvalsh(choi))[::-1]
        np.testing.assert_allclose(eigenvalues, [2.0, 1.0] + [0.0] * 7, atol=1e-14)

    def test_contrast_of_target_and_identity(self):
        ideal = contrast(propagator_from_channel(target_choi()))
        assert ideal.xi == pytest.approx(1.0)
        assert ideal.p_dark == pytest.approx(0.0)
        idle = contrast(np.eye(9))
        assert idle.xi == 0.0

    def test_reference_bias_only_relaxes(self, synthetic_fits):
        """At phi_ref the |1> population decays with T1 and barely tunnels"""
        model = PhaseQubitModel(synthetic_fits)
        generator, _ = model.generator(synthetic_fits.phi_ref)
        result = contrast(expm(10.0 * generator))
        assert result.p_bright < 1e-3
        assert result.xi < 1e-3


@pytest.mark.slow
def test_reference_bias_search_hits_rate_threshold(params):
    settings = ModelSettings(phi_ref_over_2pi=None)
    phi_ref = find_reference_bias(params, settings)
    omega = dvr_solve(phi_ref, params, settings, check_convergence=False).transition_frequency
    gamma1 = math.exp(wkb_log_gamma1(alpha_of_bias(phi_ref, params), omega))
    assert gamma1 == pytest.approx(settings.gamma1_threshold, rel=1e-6)
    assert 0.92 < phi_ref / TWO_PI < 0.925


@pytest.mark.slow
class TestModelFit:
    """Full DVR-based fit with default parameters"""

    def test_fit_range(self, model_fits):
        assert model_fits.phi_ref / TWO_PI == pytest.approx(0.939)
        assert model_fits.fit_min / TWO_PI == pytest.approx(0.925)
        assert model_fits.fit_max / TWO_PI == pytest.approx(0.945)

    def test_validity_limit(self, model_fits):
        assert 0.9444 <= model_fits.validity_limit / TWO_PI <= 0.9464
        direct = alpha_threshold_bias(model_fits.params, 9.0, model_fits.fit_min, model_fits.fit_max)
        assert abs(direct - model_fits.validity_limit) / TWO_PI <= 1e-3

    def test_two_state_limit_agrees(self, model_fits):
        assert abs(model_fits.two_state_limit - model_fits.validity_limit) / TWO_PI <= 0.001

    def test_eta_anchored_at_reference(self, model_fits):
        assert model_fits.eta(model_fits.phi_ref).value == pytest.approx(1.0)
        assert model_fits.eta(model_fits.phi_ref).derivative == pytest.approx(0.0)
        below = [model_fits.eta(model_fits.phi_ref - d).value for d in (0.02, 0.05, 0.08)]
        above = [model_fits.eta(model_fits.phi_ref + d).value for d in (0.01, 0.03)]
        assert 1.0 > below[0] > below[1] > below[2]
        assert 1.0 > above[0] > above[1]

    def test_residuals_within_tolerance(self, model_fits):
        assert model_fits.residuals["eta_max_abs"] <= 1e-3
        assert model_fits.residuals["alpha_max_rel"] <= 1e-3
        assert model_fits.residuals["omega_max_rel"] <= 1e-3

    def test_omega_fit_beats_harmonic_estimate(self, model_fits):
        assert model_fits.residuals["omega_max_rel"] < model_fits.residuals["omega_harmonic_max_rel"]

    def test_samples_carry_fitted_curves(self, model_fits):
        assert len(model_fits.samples) == 40
        assert all(s.eta_fit is not None for s in model_fits.samples)
