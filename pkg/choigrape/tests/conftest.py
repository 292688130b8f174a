"""Test configuration and fixtures for pytest"""
from typing import Callable

import numpy as np
import pytest
from scipy.stats import unitary_group

from choigrape.core.channel import choi_from_unitary
from choigrape.core.control import ControlExpansion, OptimizationProblem, PulseTemplate
from choigrape.core.liouville import coherent_generator, dissipator
from choigrape.core.models import (
    ModelSettings,
    OptimizerSettings,
    PulseSettings,
    QubitModelFits,
    QubitParams,
    RunConfig,
)
from choigrape.tests.factories import build_synthetic_fits, random_hermitian


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so every test run sees the same random problems"""
    return np.random.default_rng(20240611)


@pytest.fixture
def make_problem() -> Callable[..., OptimizationProblem]:
    """
    Factory for random GRAPE problems.

    The model is S(u) = S_d + u S_1 + u^2 S_2 + r(u) D with a random
    Hermitian drift, random coherent controls and a jump operator whose
    rate r(u) = r0 (1.5 + sin u) stays positive for every control value.
    ``dissipative=False`` drops the jump term, leaving a unitary problem.
    """

    def factory(
        rng: np.random.Generator,
        d: int = 3,
        n_pixels: int = 8,
        dt: float = 0.25,
        dissipative: bool = True,
        kernel_sigma: float = 0.3,
        holds: int = 1,
    ) -> OptimizationProblem:
        drift = coherent_generator(random_hermitian(rng, d))
        controls = [
            coherent_generator(random_hermitian(rng, d)),
            coherent_generator(random_hermitian(rng, d, scale=0.3)),
        ]
        r0 = 0.0
        if dissipative:
            jump = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            controls.append(dissipator(jump / np.linalg.norm(jump)))
            r0 = float(rng.uniform(0.1, 0.5))

        def coefficients(u: float):
            values = [u, u**2]
            derivatives = [1.0, 2.0 * u]
            if dissipative:
                values.append(r0 * (1.5 + np.sin(u)))
                derivatives.append(r0 * np.cos(u))
            return np.array(values), np.array(derivatives)

        model = ControlExpansion(drift, controls, coefficients)
        target = choi_from_unitary(unitary_group.rvs(d, random_state=rng))
        template = PulseTemplate(
            n_pixels=n_pixels,
            dt=dt,
            reference=0.0,
            lower=-1.5,
            upper=1.5,
            kernel_sigma=kernel_sigma,
            head=holds,
            tail=holds,
        )
        return OptimizationProblem(model, target, template, OptimizerSettings(max_iterations=50))

    return factory


@pytest.fixture
def synthetic_fits() -> QubitModelFits:
    return build_synthetic_fits()


@pytest.fixture
def short_config() -> RunConfig:
    """1 ns pulse of 50 pixels capped at three iterations"""
    return RunConfig(
        pulse=PulseSettings(duration_ns=1.0),
        optimizer=OptimizerSettings(max_iterations=3),
    )


@pytest.fixture(scope="session")
def model_fits() -> QubitModelFits:
    """Full DVR-based model fit with default parameters (slow)"""
    from choigrape.core.phase_qubit import fit_model_curves

    return fit_model_curves(QubitParams(), ModelSettings(), workers=4)
