"""
Three-level (|0>, |1>, |m>) phase qubit measurement model.

The bias enters through the mixing matrix P(eta) and the tunneling
rates. With H_ref = omega_ref |1><1| and P|1> = (s, -eta, 0), s = sqrt(1 - eta^2),

    P H_ref P^-1 = omega_ref (s^2 |0><0| - s eta (|0><1| + |1><0|) + eta^2 |1><1|)

so the control generator is a fixed-generator expansion with coefficients
(omega_ref s^2, -omega_ref s eta, omega_ref eta^2, gamma0, gamma1).
"""

from __future__ import annotations

import math

import numpy as np

from ..control.problem import ControlExpansion
from ..errors import DimensionError, ValidityError
from ..liouville import build_generator, coherent_generator, column_stack, dissipator, evolve, unstack
from ..models import ContrastResult, DecayChannel, QubitModelFits, QubitParams
from .fits import wkb_rates

DIMENSION = 3
GROUND, EXCITED, MEASURED = 0, 1, 2
LEVEL_LABELS = ["p0", "p1", "pm"]


def ket_bra(i: int, j: int, dimension: int = DIMENSION) -> np.ndarray:
    op = np.zeros((dimension, dimension), dtype=complex)
    op[i, j] = 1.0
    return op


def mixing_matrix(eta: float) -> np.ndarray:
    """P(eta); real symmetric and its own inverse for |eta| <= 1."""
    s = math.sqrt(max(0.0, 1.0 - eta**2))
    return np.array([[eta, s, 0.0], [s, -eta, 0.0], [0.0, 0.0, 1.0]])


def drift_generator(params: QubitParams) -> np.ndarray:
    """T1 relaxation |1> -> |0> only."""
    return build_generator(
        np.zeros((DIMENSION, DIMENSION)),
        [DecayChannel(operator=ket_bra(GROUND, EXCITED), rate=params.relaxation_rate, name="T1")],
    )


def fixed_control_generators() -> list[np.ndarray]:
    """Generators multiplied by the five bias-dependent coefficients."""
    return [
        coherent_generator(ket_bra(GROUND, GROUND)),
        coherent_generator(ket_bra(GROUND, EXCITED) + ket_bra(EXCITED, GROUND)),
        coherent_generator(ket_bra(EXCITED, EXCITED)),
        dissipator(ket_bra(MEASURED, GROUND)),
        dissipator(ket_bra(MEASURED, EXCITED)),
    ]


def control_coefficients(phi_b: float, fits: QubitModelFits) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of the fixed control generators and their bias derivatives."""
    eta = fits.eta(phi_b)
    s = fits.mixing(phi_b)
    rates = wkb_rates(phi_b, fits)
    w = fits.omega_ref
    values = np.array(
        [
            w * s.value**2,
            -w * s.value * eta.value,
            w * eta.value**2,
            rates.gamma0,
            rates.gamma1,
        ]
    )
    derivatives = np.array(
        [
            2.0 * w * s.value * s.derivative,
            -w * (s.derivative * eta.value + s.value * eta.derivative),
            2.0 * w * eta.value * eta.derivative,
            rates.dgamma0,
            rates.dgamma1,
        ]
    )
    return values, derivatives


def _check_bias(phi_b: float, fits: QubitModelFits) -> None:
    if fits.validity_limit is not None and phi_b > fits.validity_limit:
        raise ValidityError(
            f"phi_b = {phi_b / (2 * math.pi):.6f}*2pi is above the validity limit "
            f"{fits.validity_limit / (2 * math.pi):.6f}*2pi"
        )


def control_generator(phi_b: float, fits: QubitModelFits) -> tuple[np.ndarray, np.ndarray]:
    """
    Bias-dependent part S_c of the generator and dS_c/dphi_b.

    Raises:
        ValidityError: bias above the validity limit or non-positive alpha
    """
    _check_bias(phi_b, fits)
    values, derivatives = control_coefficients(phi_b, fits)
    generators = np.stack(fixed_control_generators())
    return (
        np.tensordot(values, generators, axes=1),
        np.tensordot(derivatives, generators, axes=1),
    )


def target_choi() -> np.ndarray:
    """|1><1| (x) |m><m| + sum_{i,j in {0,m}} |i><j| (x) |i><j|."""
    choi = np.kron(ket_bra(EXCITED, EXCITED), ket_bra(MEASURED, MEASURED))
    for i in (GROUND, MEASURED):
        for j in (GROUND, MEASURED):
            choi = choi + np.kron(ket_bra(i, j), ket_bra(i, j))
    return choi


def contrast(propagator: np.ndarray) -> ContrastResult:
    """xi = P_bright (1 - P_dark) from the tunneled population of |1> and |0>."""
    t = np.asarray(propagator)
    if t.shape != (DIMENSION**2, DIMENSION**2):
        raise DimensionError(f"Contrast needs a 9 x 9 propagator, got {t.shape}")
    bright = unstack(evolve(t, column_stack(ket_bra(EXCITED, EXCITED))))
    dark = unstack(evolve(t, column_stack(ket_bra(GROUND, GROUND))))
    p_bright = float(bright[MEASURED, MEASURED].real)
    p_dark = float(dark[MEASURED, MEASURED].real)
    return ContrastResult(xi=p_bright * (1.0 - p_dark), p_bright=p_bright, p_dark=p_dark)


def trace_states() -> dict[str, np.ndarray]:
    return {"0": ket_bra(GROUND, GROUND), "1": ket_bra(EXCITED, EXCITED)}


class PhaseQubitModel(ControlExpansion):
    """Phase qubit generator S_d + S_c(phi_b) as a control expansion"""

    def __init__(self, fits: QubitModelFits):
        if fits.validity_limit is None:
            raise ValidityError("Model fits carry no validity limit")
        self.fits = fits
        super().__init__(
            drift=drift_generator(fits.params),
            controls=fixed_control_generators(),
            coefficients=lambda phi_b: control_coefficients(phi_b, fits),
            validity_limit=fits.validity_limit,
        )

    @property
    def reference(self) -> float:
        return self.fits.phi_ref
