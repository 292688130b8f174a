"""
GRAPE objective for piecewise-constant controls.

For pixel generators S_j and propagator T = E_{N-1} ... E_0 with
E_j = exp(S_j dt), the derivative with respect to pixel j is

    dT/du_j = (E_{N-1} ... E_{j+1}) D_j (E_{j-1} ... E_0)

where D_j is the directional derivative of exp(S_j dt) along
(dS/du)(u_j) dt. Forward and backward products are cached once per
evaluation and each dT/du_j is contracted with the target Choi matrix.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Mapping, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from ..channel import cptp_report, fidelity_gradient_term, frobenius_fidelity, reshuffle
from ..errors import DimensionError, ValidityError
from ..liouville import column_stack, expm_directional_derivative, propagator_trajectory, unstack
from ..models import ArrayModel, ContrastResult, OptimizerSettings, PopulationTrace, Propagator
from .pulse import PulseTemplate

logger = logging.getLogger(__name__)

CoefficientFunction = Callable[[float], tuple[np.ndarray, np.ndarray]]
ContrastFunction = Callable[[np.ndarray], ContrastResult]

# Overshoot of the validity limit absorbed as roundoff
CLAMP_SLACK = 1e-12


@runtime_checkable
class ControlModel(Protocol):
    """Anything producing a generator and its control derivative"""

    dimension: int
    validity_limit: float

    def generator(self, control: float) -> tuple[np.ndarray, np.ndarray]:
        ...


class ControlExpansion:
    """
    Drift plus control-weighted fixed generators.

        S(u) = S_d + sum_k f_k(u) S_k,   dS/du = sum_k f_k'(u) S_k
    """

    def __init__(
        self,
        drift: np.ndarray,
        controls: Sequence[np.ndarray],
        coefficients: CoefficientFunction,
        validity_limit: float = math.inf,
    ):
        drift = np.asarray(drift, dtype=complex)
        n = drift.shape[0]
        dimension = math.isqrt(n)
        if drift.shape != (n, n) or dimension * dimension != n:
            raise DimensionError(f"Drift generator has invalid shape {drift.shape}")
        if any(np.shape(c) != drift.shape for c in controls):
            raise DimensionError("Control generators must match the drift shape")

        self.dimension = dimension
        self.drift = drift
        self.controls = (
            np.stack([np.asarray(c, dtype=complex) for c in controls])
            if len(controls)
            else np.zeros((0, n, n), dtype=complex)
        )
        self.coefficients = coefficients
        self.validity_limit = validity_limit

    def generator(self, control: float) -> tuple[np.ndarray, np.ndarray]:
        values, derivatives = self.coefficients(control)
        generator = self.drift + np.tensordot(values, self.controls, axes=1)
        derivative = np.tensordot(derivatives, self.controls, axes=1)
        return generator, derivative


class PhysicalEvaluation(ArrayModel):
    """Objective and pixel gradient on a fixed physical pulse"""

    fidelity: float
    physical_gradient: np.ndarray
    propagator: Propagator
    pulse: np.ndarray
    clamped_pixels: int


class Evaluation(ArrayModel):
    """Objective and gradient at one point of the optimizer variables"""

    fidelity: float
    gradient: np.ndarray
    raw_gradient: np.ndarray
    physical_gradient: np.ndarray
    propagator: Propagator
    raw_pulse: np.ndarray
    physical_pulse: np.ndarray
    clamped_pixels: int


class OptimizationProblem:
    """
    Target channel, control model and pulse template of a GRAPE run.

    Raises:
        ValidityError: the target is not a CPTP Choi matrix
        DimensionError: target and model dimensions disagree
    """

    def __init__(
        self,
        model: ControlModel,
        target: np.ndarray,
        template: PulseTemplate,
        settings: Optional[OptimizerSettings] = None,
        contrast: Optional[ContrastFunction] = None,
        trace_states: Optional[Mapping[str, np.ndarray]] = None,
        level_labels: Optional[Sequence[str]] = None,
        workers: int = 1,
    ):
        target = np.asarray(target, dtype=complex)
        d2 = model.dimension**2
        if target.shape != (d2, d2):
            raise DimensionError(f"Target shape {target.shape} does not match model dimension {model.dimension}")
        report = cptp_report(target)
        if not report.is_cptp():
            raise ValidityError(
                f"Target is not CPTP (min eigenvalue {report.min_eigenvalue:.3e}, "
                f"TP residual {report.tp_residual:.3e})"
            )

        self.model = model
        self.target = target
        self.template = template
        self.settings = settings or OptimizerSettings()
        self.contrast = contrast
        self.trace_states = dict(trace_states or {})
        self.level_labels = list(level_labels or [f"p{k}" for k in range(model.dimension)])
        self.workers = workers
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    def clamp(self, pulse: np.ndarray, warn: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Clamp pixels above the model's validity limit; returns (pulse, flagged mask)."""
        limit = self.model.validity_limit
        pulse = np.asarray(pulse, dtype=float)
        over = pulse > limit
        flagged = pulse > limit + CLAMP_SLACK * max(1.0, abs(limit))
        if warn and np.any(flagged):
            self.logger.warning(
                "%d pixel(s) above the validity limit %.6f were clamped", int(flagged.sum()), limit
            )
        return np.where(over, limit, pulse), flagged

    def pixel_generators(self, pulse: np.ndarray) -> list[np.ndarray]:
        """Generators of a pulse already reported by evaluate_physical; clamps silently."""
        clamped, _ = self.clamp(pulse, warn=False)
        return [self.model.generator(float(u))[0] for u in clamped]

    def map_pixels(self, func: Callable, items: Sequence) -> list:
        """Ordered map, threaded when workers > 1"""
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(func, items))
        return [func(item) for item in items]


def evaluate_physical(problem: OptimizationProblem, pulse: np.ndarray) -> PhysicalEvaluation:
    """Fidelity and d(fidelity)/d(physical pixel) for a smoothed pulse."""
    template = problem.template
    dt = template.dt
    clamped, flagged = problem.clamp(pulse)

    def pixel(u: float) -> tuple[np.ndarray, np.ndarray]:
        generator, derivative = problem.model.generator(float(u))
        return expm_directional_derivative(generator * dt, derivative * dt)

    pixels = problem.map_pixels(pixel, list(clamped))
    exponentials = [e for e, _ in pixels]

    n = len(exponentials)
    dim = exponentials[0].shape[0]
    forward = [np.eye(dim, dtype=complex)]
    for e in exponentials[:-1]:
        forward.append(e @ forward[-1])
    backward = [np.eye(dim, dtype=complex)] * n
    for j in range(n - 2, -1, -1):
        backward[j] = backward[j + 1] @ exponentials[j + 1]
    total = exponentials[-1] @ forward[-1]

    def pixel_gradient(j: int) -> float:
        if flagged[j]:
            return 0.0
        derivative = backward[j] @ pixels[j][1] @ forward[j]
        return fidelity_gradient_term(problem.target, reshuffle(derivative))

    gradient = np.array(problem.map_pixels(pixel_gradient, list(range(n))), dtype=float)
    return PhysicalEvaluation(
        fidelity=frobenius_fidelity(problem.target, reshuffle(total)),
        physical_gradient=gradient,
        propagator=Propagator(entries=total, duration=n * dt),
        pulse=clamped,
        clamped_pixels=int(flagged.sum()),
    )


def evaluate(problem: OptimizationProblem, variables: np.ndarray) -> Evaluation:
    """Full forward/backward evaluation at the optimizer variables."""
    template = problem.template
    raw = template.raw_from_variables(variables)
    physical = template.physical(raw)
    result = evaluate_physical(problem, physical)
    raw_gradient = template.jacobian.T @ result.physical_gradient
    return Evaluation(
        fidelity=result.fidelity,
        gradient=template.pull_back(raw_gradient, variables),
        raw_gradient=raw_gradient,
        physical_gradient=result.physical_gradient,
        propagator=result.propagator,
        raw_pulse=raw,
        physical_pulse=result.pulse,
        clamped_pixels=result.clamped_pixels,
    )


def objective_and_gradient(
    problem: OptimizationProblem, variables: np.ndarray
) -> tuple[float, np.ndarray]:
    """Frobenius channel fidelity and its gradient in the optimizer variables."""
    result = evaluate(problem, variables)
    return result.fidelity, result.gradient


def population_traces(problem: OptimizationProblem, pulse: np.ndarray) -> list[PopulationTrace]:
    """Level populations of each trace state at t = 0 and after every pixel."""
    template = problem.template
    trajectory = propagator_trajectory(problem.pixel_generators(pulse), template.dt)
    times = [0.0] + [(k + 1) * template.dt for k in range(len(trajectory))]

    traces = []
    for label, rho in problem.trace_states.items():
        initial = column_stack(rho)
        states = [initial] + [t @ initial for t in trajectory]
        populations = [np.real(np.diag(unstack(v))).tolist() for v in states]
        traces.append(
            PopulationTrace(
                init_state=label,
                t_ns=times,
                populations=populations,
                level_labels=problem.level_labels,
            )
        )
    return traces
