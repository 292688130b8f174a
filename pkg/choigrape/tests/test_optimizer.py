"""Tests for the GRAPE objective, its gradient and the BFGS driver"""
from unittest.mock import MagicMock, patch

import numpy as np
import pytest
import scipy.linalg
from scipy.stats import unitary_group

from choigrape.core.channel import choi_from_unitary, cptp_report, gate_overlap_fidelity, reshuffle
from choigrape.core.control import (
    ControlExpansion,
    ControlModel,
    OptimizationProblem,
    PulseTemplate,
    evaluate,
    evaluate_physical,
    maximize,
    objective_and_gradient,
    population_traces,
)
from choigrape.core.errors import DimensionError, OptimizationAbort, ValidityError
from choigrape.core.liouville import coherent_generator
from choigrape.core.models import OptimizerSettings, TerminationReason
from choigrape.core.pipeline import MeasurementPipeline
from choigrape.tests.factories import random_hermitian


def central_difference(problem: OptimizationProblem, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    gradient = np.zeros_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = h
        plus, _ = objective_and_gradient(problem, x + step)
        minus, _ = objective_and_gradient(problem, x - step)
        gradient[k] = (plus - minus) / (2 * h)
    return gradient


def square_template(n_pixels: int = 6, dt: float = 0.3) -> PulseTemplate:
    return PulseTemplate(n_pixels=n_pixels, dt=dt, reference=0.0, lower=-1.5, upper=1.5)


class TestGradient:
    """Analytic gradient against central finite differences"""

    def test_random_problems(self, rng, make_problem):
        for _ in range(10):
            problem = make_problem(rng)
            x = rng.normal(size=problem.template.n_free)
            _, gradient = objective_and_gradient(problem, x)
            np.testing.assert_allclose(gradient, central_difference(problem, x), rtol=1e-5, atol=1e-8)

    def test_without_smoothing_or_holds(self, rng, make_problem):
        problem = make_problem(rng, kernel_sigma=0.0, holds=0, n_pixels=5)
        x = rng.normal(size=5)
        _, gradient = objective_and_gradient(problem, x)
        np.testing.assert_allclose(gradient, central_difference(problem, x), rtol=1e-5, atol=1e-8)

    def test_threaded_matches_serial(self, rng, make_problem):
        problem = make_problem(rng)
        x = rng.normal(size=problem.template.n_free)
        serial = evaluate(problem, x)
        problem.workers = 3
        threaded = evaluate(problem, x)
        assert threaded.fidelity == serial.fidelity
        np.testing.assert_array_equal(threaded.gradient, serial.gradient)

    def test_phase_qubit_model(self, rng, synthetic_fits, short_config):
        problem = MeasurementPipeline(short_config).build_problem(synthetic_fits)
        x = problem.template.initial_variables(0.938 * 2 * np.pi) + 0.3 * rng.normal(size=problem.template.n_free)
        _, gradient = objective_and_gradient(problem, x)
        fd = central_difference(problem, x)
        np.testing.assert_allclose(gradient, fd, rtol=1e-5, atol=1e-8)


class TestChannelProperties:
    """Every evaluated propagator is a physical channel"""

    def test_cptp_for_random_pulses(self, rng, make_problem):
        problem = make_problem(rng)
        for _ in range(50):
            x = 3.0 * rng.normal(size=problem.template.n_free)
            report = cptp_report(reshuffle(evaluate(problem, x).propagator))
            assert report.tp_residual <= 1e-9
            assert report.min_eigenvalue >= -1e-9

    def test_unitary_reduction(self, rng):
        d = 3
        for _ in range(20):
            h0, h1 = random_hermitian(rng, d), random_hermitian(rng, d)
            model = ControlExpansion(
                coherent_generator(h0),
                [coherent_generator(h1)],
                lambda u: (np.array([u]), np.array([1.0])),
            )
            target_unitary = unitary_group.rvs(d, random_state=rng)
            template = square_template()
            problem = OptimizationProblem(model, choi_from_unitary(target_unitary), template)
            x = rng.normal(size=template.n_free)
            result = evaluate(problem, x)

            unitary = np.eye(d, dtype=complex)
            for u in result.physical_pulse:
                unitary = scipy.linalg.expm(-1j * template.dt * (h0 + u * h1)) @ unitary
            assert result.fidelity == pytest.approx(gate_overlap_fidelity(target_unitary, unitary), abs=1e-10)

    def test_population_traces(self, rng, make_problem):
        problem = make_problem(rng)
        problem.trace_states = {"0": np.diag([1.0, 0.0, 0.0]), "1": np.diag([0.0, 1.0, 0.0])}
        pulse = problem.template.physical(problem.template.raw_from_variables(np.zeros(problem.template.n_free)))
        traces = population_traces(problem, pulse)
        assert [t.init_state for t in traces] == ["0", "1"]
        for trace in traces:
            assert len(trace.t_ns) == problem.template.n_pixels + 1
            assert trace.t_ns[0] == 0.0
            np.testing.assert_allclose(np.sum(trace.populations, axis=1), 1.0, atol=1e-12)
        assert traces[0].populations[0] == [1.0, 0.0, 0.0]


class TestProblem:
    """Problem validation and validity clamping"""

    def test_model_satisfies_protocol(self, rng, make_problem):
        assert isinstance(make_problem(rng).model, ControlModel)

    def test_non_cptp_target_rejected(self, rng, make_problem):
        model = make_problem(rng).model
        with pytest.raises(ValidityError):
            OptimizationProblem(model, -np.eye(9), square_template())

    def test_target_dimension_mismatch_rejected(self, rng, make_problem):
        model = make_problem(rng).model
        with pytest.raises(DimensionError):
            OptimizationProblem(model, choi_from_unitary(np.eye(2)), square_template())

    def test_clamping_flags_pixels_and_zeroes_their_gradient(self, rng):
        h0, h1 = random_hermitian(rng, 2), random_hermitian(rng, 2)
        model = ControlExpansion(
            coherent_generator(h0),
            [coherent_generator(h1)],
            lambda u: (np.array([u]), np.array([1.0])),
            validity_limit=0.5,
        )
        problem = OptimizationProblem(model, choi_from_unitary(np.eye(2)), square_template())
        pulse = np.array([0.1, 0.4, 0.9, 1.2, 0.5 + 1e-14, 0.2])
        result = evaluate_physical(problem, pulse)
        assert result.clamped_pixels == 2
        assert result.pulse.max() == 0.5
        assert result.physical_gradient[2] == 0.0
        assert result.physical_gradient[3] == 0.0
        assert result.physical_gradient[4] != 0.0


class TestMaximize:
    """BFGS driver"""

    def test_improves_fidelity(self, rng, make_problem):
        problem = make_problem(rng)
        x0 = np.zeros(problem.template.n_free)
        records = []
        report = maximize(problem, x0, callback=records.append)

        assert report.final_fidelity > report.initial_fidelity
        assert report.history[0].iteration == 0
        assert [r.iteration for r in records] == list(range(len(records)))
        fidelities = [r.fidelity for r in report.history]
        assert all(b >= a - 1e-12 for a, b in zip(fidelities, fidelities[1:]))
        assert report.final_cptp.is_cptp()
        assert report.termination in TerminationReason

    def test_stationary_start_returns_immediately(self, rng):
        model = ControlExpansion(coherent_generator(random_hermitian(rng, 2)), [], lambda u: (np.zeros(0), np.zeros(0)))
        problem = OptimizationProblem(model, choi_from_unitary(np.eye(2)), square_template())
        report = maximize(problem, np.zeros(6))
        assert report.iterations == 0
        assert report.termination == TerminationReason.CONVERGED
        assert report.final_fidelity == report.initial_fidelity

    def test_iteration_cap(self, rng, make_problem):
        problem = make_problem(rng)
        problem.settings = OptimizerSettings(max_iterations=2)
        report = maximize(problem, np.zeros(problem.template.n_free))
        assert report.iterations <= 2
        assert report.termination in (TerminationReason.MAX_ITERATIONS, TerminationReason.CONVERGED)

    def test_non_finite_objective_aborts(self, rng, make_problem):
        problem = make_problem(rng)
        n = problem.template.n_free
        broken = MagicMock(
            fidelity=float("nan"),
            gradient=np.zeros(n),
            physical_pulse=np.zeros(problem.template.n_pixels),
        )
        with patch("choigrape.core.control.optimizer.evaluate", return_value=broken):
            with pytest.raises(OptimizationAbort) as excinfo:
                maximize(problem, np.zeros(n))
        assert excinfo.value.iteration == 0
        assert "fidelity" in excinfo.value.diagnostic
