from __future__ import annotations

import hashlib
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import constants

from .errors import ConfigurationError, ValidityError

TWO_PI = 2.0 * math.pi


def _canonical_hash(payload: Any) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ArrayModel(BaseModel):
    """Immutable container for numpy-valued results"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# ---------------------------------------------------------------------------
# Linear-algebra value types
# ---------------------------------------------------------------------------


class DecayChannel(ArrayModel):
    """Lindblad jump operator with its rate"""

    operator: np.ndarray = Field(description="Dimensionless d x d jump operator")
    rate: float = Field(description="Rate in 1/ns, must be >= 0")
    name: str = ""


class Propagator(ArrayModel):
    """Liouville-space propagator of a pulse"""

    entries: np.ndarray = Field(description="d^2 x d^2 complex matrix")
    duration: float = Field(description="Duration in ns")


class DensityReport(BaseModel):
    """Distance of a vectorized state from a valid density matrix"""

    hermiticity_error: float
    trace_error: float
    min_eigenvalue: float

    def is_valid(self, tolerance: float = 1e-10) -> bool:
        return (
            self.hermiticity_error <= tolerance
            and self.trace_error <= tolerance
            and self.min_eigenvalue >= -tolerance
        )


class CPTPReport(BaseModel):
    """Complete positivity and trace preservation of a Choi matrix"""

    min_eigenvalue: float = Field(description="Smallest eigenvalue of (C + C^dag)/2")
    tp_residual: float = Field(description="Norm of Tr_out(C) - 1")

    def is_cptp(self, tolerance: float = 1e-9) -> bool:
        return self.min_eigenvalue >= -tolerance and self.tp_residual <= tolerance


class ContrastResult(BaseModel):
    """Measurement contrast xi = P_bright (1 - P_dark)"""

    xi: float
    p_bright: float
    p_dark: float


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


class QubitParams(BaseModel):
    """Flux-biased phase qubit circuit parameters"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    I0: float = Field(default=2.0, gt=0, description="Critical current in uA")
    C_jj: float = Field(default=1.0, gt=0, description="Junction capacitance in pF")
    beta: float = Field(default=4.375, gt=1, description="Flux coupling 2eLI0/hbar")
    T1: float = Field(default=500.0, gt=0, description="Energy relaxation time in ns")

    @property
    def E_c(self) -> float:
        """Charging energy 2e^2/C as an angular frequency in rad/ns"""
        return 2.0 * constants.e**2 / (self.C_jj * 1e-12) / constants.hbar * 1e-9

    @property
    def E_J(self) -> float:
        """Josephson energy I0 hbar/2e as an angular frequency in rad/ns"""
        return self.I0 * 1e-6 / (2.0 * constants.e) * 1e-9

    @property
    def mass(self) -> float:
        """Effective mass hbar^2/2E_c in units where hbar = 1"""
        return 1.0 / (2.0 * self.E_c)

    @property
    def critical_phase(self) -> float:
        """Phase where V'' changes sign, arccos(-1/beta)"""
        return math.acos(-1.0 / self.beta)

    @property
    def critical_bias(self) -> float:
        """Bias at which the shallow well merges with its barrier"""
        phi_c = self.critical_phase
        return phi_c + self.beta * math.sin(phi_c)

    @property
    def relaxation_rate(self) -> float:
        return 1.0 / self.T1

    @model_validator(mode="after")
    def _phase_regime(self) -> "QubitParams":
        if self.E_J / self.E_c < 100.0:
            raise ValueError(
                f"E_J/E_c = {self.E_J / self.E_c:.1f} is not in the phase regime (needs >= 100)"
            )
        return self


class ModelSettings(BaseModel):
    """Numerical settings of the three-level model fit"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    phi_ref_over_2pi: Optional[float] = Field(
        default=0.939, gt=0, description="Reference bias; searched from gamma1 threshold when null"
    )
    gamma1_threshold: float = Field(default=1e-6, gt=0, description="gamma1 at the reference bias, 1/ns")
    ref_search_min_over_2pi: float = Field(default=0.90, gt=0)
    ref_search_max_over_2pi: float = Field(default=0.94, gt=0)

    fit_min_over_2pi: float = Field(default=0.925, gt=0)
    fit_max_over_2pi: float = Field(default=0.945, gt=0)
    fit_points: int = Field(default=40, ge=8)

    dvr_dx: float = Field(default=0.003, gt=0, description="Largest DVR grid spacing in rad")
    dvr_left_extent: float = Field(default=0.8, gt=0, description="Left wall distance from the minimum, rad")
    dvr_right_margin: float = Field(
        default=0.2, ge=0, description="Right wall distance past the barrier for spectra and overlaps, rad"
    )
    well_count_margin: float = Field(
        default=0.0, ge=0, description="Right wall distance past the barrier when counting bound states, rad"
    )
    dvr_states: int = Field(default=6, ge=2)
    dvr_check_convergence: bool = True
    dvr_convergence_tol: float = Field(default=1e-8, gt=0, description="Max change of E0, E1 when dx is halved")
    well_mass_threshold: float = Field(default=0.5, gt=0, le=1)

    alpha_threshold: float = Field(default=9.0, gt=0, description="Three-level validity bound alpha > threshold")
    eta_tolerance: float = Field(default=1e-3, gt=0, description="Max abs. error of the eta fit")
    alpha_tolerance: float = Field(default=1e-3, gt=0, description="Max rel. error of the alpha fit")
    omega_tolerance: float = Field(default=1e-3, gt=0, description="Max rel. error of the omega fit")

    @model_validator(mode="after")
    def _ordered_ranges(self) -> "ModelSettings":
        if self.fit_min_over_2pi >= self.fit_max_over_2pi:
            raise ValueError("fit_min_over_2pi must be below fit_max_over_2pi")
        if self.ref_search_min_over_2pi >= self.ref_search_max_over_2pi:
            raise ValueError("ref_search_min_over_2pi must be below ref_search_max_over_2pi")
        return self


class PulseSettings(BaseModel):
    """Measurement pulse discretization, smoothing and bounds"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    duration_ns: float = Field(default=10.0, gt=0, description="Measurement duration T_meas")
    dt_ns: Optional[float] = Field(default=None, gt=0, description="Pixel width; 0.1 ns for T >= 5 ns else 0.02 ns")
    sigma_ns: Optional[float] = Field(default=None, ge=0, description="Gaussian width; min(0.5 ns, T/10)")
    hold_ns: Optional[float] = Field(default=None, ge=0, description="Head and tail hold; min(2 ns, T/5)")
    lower_over_2pi: Optional[float] = Field(default=None, description="Lower bias bound; bottom of the fit range when unset")
    upper_over_2pi: Optional[float] = Field(default=None, description="Upper bias bound; validity limit when unset")
    initial_amplitude_over_2pi: float = Field(default=0.935, gt=0)

    @property
    def resolved_dt(self) -> float:
        if self.dt_ns is not None:
            return self.dt_ns
        return 0.1 if self.duration_ns >= 5.0 else 0.02

    @property
    def resolved_sigma(self) -> float:
        return self.sigma_ns if self.sigma_ns is not None else min(0.5, self.duration_ns / 10.0)

    @property
    def resolved_hold(self) -> float:
        return self.hold_ns if self.hold_ns is not None else min(2.0, 0.2 * self.duration_ns)

    @property
    def n_pixels(self) -> int:
        return int(round(self.duration_ns / self.resolved_dt))

    @property
    def hold_pixels(self) -> int:
        return int(round(self.resolved_hold / self.resolved_dt))

    @model_validator(mode="after")
    def _grid_consistency(self) -> "PulseSettings":
        n = self.duration_ns / self.resolved_dt
        if abs(n - round(n)) > 1e-6 or round(n) < 1:
            raise ValueError(
                f"duration_ns={self.duration_ns} is not a whole number of {self.resolved_dt} ns pixels"
            )
        if 2 * self.hold_pixels >= self.n_pixels:
            raise ValueError("Head and tail holds leave no free pixels")
        return self


class OptimizerSettings(BaseModel):
    """Quasi-Newton search settings"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iterations: int = Field(default=500, ge=0)
    gradient_tolerance: float = Field(default=1e-7, gt=0)
    c1: float = Field(default=1e-4, gt=0, lt=1, description="Armijo constant")
    c2: float = Field(default=0.9, gt=0, lt=1, description="Curvature constant")

    @model_validator(mode="after")
    def _wolfe_order(self) -> "OptimizerSettings":
        if self.c1 >= self.c2:
            raise ValueError("Wolfe constants need c1 < c2")
        return self


class RunConfig(BaseModel):
    """Complete configuration of a fit, optimization or simulation run"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    qubit: QubitParams = Field(default_factory=QubitParams)
    model: ModelSettings = Field(default_factory=ModelSettings)
    pulse: PulseSettings = Field(default_factory=PulseSettings)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    output_dir: Optional[Path] = Field(default=None, description="Artifact directory")
    seed: int = Field(default=0, description="Reserved; the pipeline is deterministic")
    sweep_durations_ns: list[float] = Field(default_factory=lambda: [1.4, 5.0, 10.0, 15.0])

    def config_hash(self) -> str:
        """SHA-256 of everything that influences numerical results"""
        return _canonical_hash(self.model_dump(mode="json", exclude={"output_dir"}))

    def fit_hash(self) -> str:
        """SHA-256 of the sections the model fit depends on"""
        return _canonical_hash(
            self.model_dump(mode="json", include={"qubit", "model"})
        )

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        """
        Load and validate a JSON run configuration.

        Raises:
            ConfigurationError: unreadable file or malformed JSON
            pydantic.ValidationError: schema violations
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"Cannot read config {path}: {e}") from e
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            if any(err["type"] == "json_invalid" for err in e.errors()):
                raise ConfigurationError(f"Config {path} is not valid JSON: {e}") from e
            raise


# ---------------------------------------------------------------------------
# Phase qubit model data
# ---------------------------------------------------------------------------


class PotentialAnalysis(BaseModel):
    """Shallow-well extrema and cubic-approximation parameters at one bias"""

    model_config = ConfigDict(frozen=True)

    phi_b: float
    phi_min: float
    phi_max: float
    V_min: float
    V_max: float
    alpha: float
    omega_harmonic: float = Field(description="sqrt(2 E_c E_J (1/beta + cos phi_min)), rad/ns")
    mass: float = Field(description="1/(2 E_c)")
    phi_tilde: float = Field(description="Cubic-potential width parameter")

    @property
    def barrier_height(self) -> float:
        return self.V_max - self.V_min


class DVRSolution(ArrayModel):
    """Box-DVR eigenpairs on a hard-walled window around the shallow well"""

    phi_b: float
    left: float = Field(description="Left wall, rad")
    right: float = Field(description="Right wall, rad")
    dx: float
    grid: np.ndarray
    potential: np.ndarray
    energies: np.ndarray
    wavefunctions: np.ndarray = Field(description="Columns normalized to sum |psi|^2 dx = 1")
    well_indices: list[int] = Field(description="Indices of shallow-well states, ascending energy")
    analysis: PotentialAnalysis

    @property
    def n_well_states(self) -> int:
        return len(self.well_indices)

    def well_state(self, level: int) -> np.ndarray:
        return self.wavefunctions[:, self.well_indices[level]]

    def well_energy(self, level: int) -> float:
        return float(self.energies[self.well_indices[level]])

    @property
    def transition_frequency(self) -> float:
        """E1 - E0 of the two lowest well states"""
        if self.n_well_states < 2:
            raise ValidityError(
                f"Only {self.n_well_states} shallow-well state(s) at phi_b = {self.phi_b:.6f}"
            )
        return self.well_energy(1) - self.well_energy(0)


class FitSample(BaseModel):
    """DVR and cubic-model data at one bias, with the fitted curves"""

    phi_b: float
    eta: float
    alpha: float
    omega_harmonic: float
    omega_dvr: Optional[float] = None
    n_well_states: int
    eta_fit: Optional[float] = None
    alpha_fit: Optional[float] = None
    omega_fit: Optional[float] = None


class CurveValue(BaseModel):
    """A fitted curve value with its bias derivative"""

    model_config = ConfigDict(frozen=True)

    value: float
    derivative: float


class QubitModelFits(BaseModel):
    """
    Analytic curves of the three-level model.

    eta and alpha are polynomials in delta = phi_b - phi_ref with
    ascending coefficients; omega is a(b + c phi_b)^d + e.
    """

    model_config = ConfigDict(frozen=True)

    params: QubitParams
    phi_ref: float
    omega_ref: float
    eta_poly: list[float] = Field(description="[1, 0, a2, a3]")
    alpha_poly: list[float] = Field(description="Quadratic coefficients in delta")
    omega_params: list[float] = Field(description="(a, b, c, d, e)")
    fit_min: float
    fit_max: float
    validity_limit: Optional[float] = None
    two_state_limit: Optional[float] = None
    alpha_threshold: float = 9.0
    residuals: dict[str, float] = Field(default_factory=dict)
    samples: list[FitSample] = Field(default_factory=list)
    fit_hash: str = ""

    def eta(self, phi_b: float) -> CurveValue:
        delta = phi_b - self.phi_ref
        coeffs = np.asarray(self.eta_poly)
        return CurveValue(
            value=float(P.polyval(delta, coeffs)),
            derivative=float(P.polyval(delta, P.polyder(coeffs))),
        )

    def mixing(self, phi_b: float) -> CurveValue:
        """
        sqrt(1 - eta^2), evaluated as delta*sqrt(g(delta)).

        With eta = 1 + a2 d^2 + a3 d^3 one has 1 - eta^2 = d^2 g(d), so the
        factored form stays differentiable at the reference bias.
        """
        a2, a3 = self.eta_poly[2], self.eta_poly[3]
        d = phi_b - self.phi_ref
        g = -(2 * a2 + 2 * a3 * d + a2**2 * d**2 + 2 * a2 * a3 * d**3 + a3**2 * d**4)
        if g <= 0.0:
            return CurveValue(value=0.0, derivative=0.0)
        dg = -(2 * a3 + 2 * a2**2 * d + 6 * a2 * a3 * d**2 + 4 * a3**2 * d**3)
        root = math.sqrt(g)
        return CurveValue(value=d * root, derivative=root + d * dg / (2.0 * root))

    def alpha(self, phi_b: float) -> CurveValue:
        delta = phi_b - self.phi_ref
        coeffs = np.asarray(self.alpha_poly)
        return CurveValue(
            value=float(P.polyval(delta, coeffs)),
            derivative=float(P.polyval(delta, P.polyder(coeffs))),
        )

    def omega(self, phi_b: float) -> CurveValue:
        a, b, c, d, e = self.omega_params
        base = max(b + c * phi_b, 1e-12)
        return CurveValue(
            value=a * base**d + e,
            derivative=a * d * c * base ** (d - 1.0),
        )


class WKBRates(BaseModel):
    """Tunneling rates out of |0> and |1> with their bias derivatives"""

    model_config = ConfigDict(frozen=True)

    gamma0: float
    gamma1: float
    dgamma0: float
    dgamma1: float


# ---------------------------------------------------------------------------
# Optimization and simulation results
# ---------------------------------------------------------------------------


class TerminationReason(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    LINE_SEARCH_FAILURE = "line_search_failure"


class IterationRecord(BaseModel):
    """Objective value after an accepted quasi-Newton step"""

    iteration: int
    fidelity: float
    gradient_norm: float
    contrast: Optional[float] = None


class PopulationTrace(BaseModel):
    """Level populations sampled after every pixel"""

    init_state: str = Field(description="Label of the initial state, e.g. '0' or '1'")
    t_ns: list[float]
    populations: list[list[float]] = Field(description="One row per time, one column per level")
    level_labels: list[str] = Field(default_factory=lambda: ["p0", "p1", "pm"])


class PulseRecord(BaseModel):
    """Pulse samples at the left edge of each pixel, bias in rad"""

    t_ns: list[float]
    raw: list[float]
    smoothed: list[float]


class OptimizationReport(BaseModel):
    """Everything a maximize run produced"""

    config_hash: str = ""
    duration_ns: float
    dt_ns: float
    n_pixels: int
    n_variables: int
    initial_fidelity: float
    final_fidelity: float
    initial_contrast: Optional[ContrastResult] = None
    final_contrast: Optional[ContrastResult] = None
    history: list[IterationRecord] = Field(default_factory=list)
    iterations: int = 0
    function_evaluations: int = 0
    termination: TerminationReason
    message: str = ""
    initial_pulse: PulseRecord
    final_pulse: PulseRecord
    initial_traces: list[PopulationTrace] = Field(default_factory=list)
    final_traces: list[PopulationTrace] = Field(default_factory=list)
    clamped_pixels: int = 0
    lower_bound: float
    upper_bound: float
    final_cptp: Optional[CPTPReport] = None


class SimulationResult(BaseModel):
    """Forward evolution of a fixed pulse"""

    config_hash: str = ""
    fidelity: float
    contrast: Optional[ContrastResult] = None
    traces: list[PopulationTrace] = Field(default_factory=list)
    clamped_pixels: int = 0
    cptp: Optional[CPTPReport] = None


class SweepEntry(BaseModel):
    duration_ns: float
    initial_fidelity: float
    final_fidelity: float
    initial_xi: Optional[float] = None
    final_xi: Optional[float] = None
    iterations: int
    termination: TerminationReason
    max_bias: float


class SweepResult(BaseModel):
    config_hash: str = ""
    entries: list[SweepEntry] = Field(default_factory=list)
