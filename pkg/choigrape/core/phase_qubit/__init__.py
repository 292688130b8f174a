"""Flux-biased phase qubit: potential, DVR, fitted curves and the three-level model."""

from .dvr import (
    box_dvr,
    box_grid,
    count_well_states,
    dvr_solve,
    eta_overlap,
    evaluate_state,
    overlap,
    two_state_limit,
)
from .fits import (
    alpha_threshold_bias,
    find_reference_bias,
    fit_alpha,
    fit_eta,
    fit_model_curves,
    fit_omega,
    omega_model,
    validity_limit,
    wkb_log_gamma1,
    wkb_rates,
)
from .model import (
    PhaseQubitModel,
    contrast,
    control_coefficients,
    control_generator,
    drift_generator,
    fixed_control_generators,
    ket_bra,
    mixing_matrix,
    target_choi,
    trace_states,
)
from .potential import alpha_from_cubic, alpha_of_bias, find_well_extrema, harmonic_frequency, potential

__all__ = [
    "PhaseQubitModel",
    "alpha_from_cubic",
    "alpha_of_bias",
    "alpha_threshold_bias",
    "box_dvr",
    "box_grid",
    "contrast",
    "control_coefficients",
    "control_generator",
    "count_well_states",
    "drift_generator",
    "dvr_solve",
    "eta_overlap",
    "evaluate_state",
    "find_reference_bias",
    "find_well_extrema",
    "fit_alpha",
    "fit_eta",
    "fit_model_curves",
    "fit_omega",
    "fixed_control_generators",
    "harmonic_frequency",
    "ket_bra",
    "mixing_matrix",
    "omega_model",
    "overlap",
    "potential",
    "target_choi",
    "trace_states",
    "two_state_limit",
    "validity_limit",
    "wkb_log_gamma1",
    "wkb_rates",
]
