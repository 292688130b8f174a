"""Choi matrices, channel fidelities and CPTP checks."""

from .choi import (
    apply_channel,
    choi_from_unitary,
    cptp_report,
    partial_trace_output,
    propagator_from_channel,
    reshuffle,
)
from .fidelity import (
    fidelity_gradient_term,
    frobenius_fidelity,
    gate_overlap_fidelity,
    sqrt_channel_fidelity,
)

__all__ = [
    "apply_channel",
    "choi_from_unitary",
    "cptp_report",
    "fidelity_gradient_term",
    "frobenius_fidelity",
    "gate_overlap_fidelity",
    "partial_trace_output",
    "propagator_from_channel",
    "reshuffle",
    "sqrt_channel_fidelity",
]
