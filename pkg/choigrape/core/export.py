"""Artifact writers and readers shared by all CLI commands"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from pydantic import BaseModel

from .errors import ConfigurationError, GridMismatchError
from .models import TWO_PI, FitSample, PopulationTrace, PulseRecord, QubitModelFits, SweepResult

logger = logging.getLogger(__name__)

PULSE_HEADER = ["t_ns", "phi_b_raw", "phi_b_smoothed"]
POPULATION_HEADER = ["t_ns", "init_state", "p0", "p1", "pm"]
FIT_HEADER = [
    "phi_b",
    "n_well_states",
    "eta_dvr",
    "eta_fit",
    "alpha",
    "alpha_fit",
    "omega_dvr",
    "omega_harmonic",
    "omega_fit",
]
SWEEP_HEADER = [
    "duration_ns",
    "initial_fidelity",
    "final_fidelity",
    "initial_xi",
    "final_xi",
    "iterations",
    "termination",
    "max_bias",
]


def _number(value: float | None) -> str:
    return "" if value is None else f"{value:.17g}"


def _open_csv(path: Path, config_hash: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = path.open("w", encoding="utf-8", newline="")
    handle.write(f"# config_hash={config_hash}\n")
    return handle


def write_json(model: BaseModel | dict[str, Any], path: Path | str) -> Path:
    """Write a pydantic model or dict as indented UTF-8 JSON with LF endings"""
    output = Path(path)
    output.parent.mkdir(parents=True, exist_ok=True)
    payload = model.model_dump(mode="json") if isinstance(model, BaseModel) else model
    with output.open("w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=False)
        f.write("\n")
    logger.info("Wrote %s", output)
    return output


def write_fit_json(fits: QubitModelFits, path: Path | str, config_hash: str = "") -> Path:
    """Model fit document: coefficients, ranges, limits and the sampled data"""
    payload = {"config_hash": config_hash, **fits.model_dump(mode="json")}
    for key in ("phi_ref", "fit_min", "fit_max", "validity_limit", "two_state_limit"):
        value = payload.get(key)
        payload[f"{key}_over_2pi"] = None if value is None else value / TWO_PI
    return write_json(payload, path)


def read_fit_json(path: Path | str) -> QubitModelFits:
    """
    Load a cached model fit.

    Raises:
        ConfigurationError: unreadable or malformed document
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        payload = {
            k: v for k, v in payload.items() if not k.endswith("_over_2pi") and k != "config_hash"
        }
        return QubitModelFits.model_validate(payload)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Cannot read model fit {path}: {e}") from e


def write_fit_csv(samples: Iterable[FitSample], path: Path | str, config_hash: str) -> Path:
    output = Path(path)
    with _open_csv(output, config_hash) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(FIT_HEADER)
        for s in samples:
            writer.writerow(
                [
                    _number(s.phi_b / TWO_PI),
                    s.n_well_states,
                    _number(s.eta),
                    _number(s.eta_fit),
                    _number(s.alpha),
                    _number(s.alpha_fit),
                    _number(s.omega_dvr),
                    _number(s.omega_harmonic),
                    _number(s.omega_fit),
                ]
            )
    logger.info("Wrote %s", output)
    return output


def write_pulse_csv(pulse: PulseRecord, path: Path | str, config_hash: str) -> Path:
    """Pulse samples, bias in units of 2pi"""
    output = Path(path)
    with _open_csv(output, config_hash) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PULSE_HEADER)
        for t, raw, smoothed in zip(pulse.t_ns, pulse.raw, pulse.smoothed):
            writer.writerow([_number(t), _number(raw / TWO_PI), _number(smoothed / TWO_PI)])
    logger.info("Wrote %s", output)
    return output


def read_pulse_csv(path: Path | str) -> PulseRecord:
    """
    Read a pulse CSV back into radians.

    Raises:
        ConfigurationError: missing file or unexpected header
    """
    source = Path(path)
    try:
        with source.open("r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(line for line in f if not line.startswith("#"))]
    except OSError as e:
        raise ConfigurationError(f"Cannot read pulse file {source}: {e}") from e
    if not rows or rows[0] != PULSE_HEADER:
        raise ConfigurationError(f"{source} does not start with header {','.join(PULSE_HEADER)}")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as e:
        raise ConfigurationError(f"Malformed value in {source}: {e}") from e
    if data.size == 0:
        raise ConfigurationError(f"{source} contains no pulse samples")
    return PulseRecord(
        t_ns=data[:, 0].tolist(),
        raw=(data[:, 1] * TWO_PI).tolist(),
        smoothed=(data[:, 2] * TWO_PI).tolist(),
    )


def check_pulse_grid(pulse: PulseRecord, times: np.ndarray, tolerance: float = 1e-9) -> None:
    """
    Raises:
        GridMismatchError: sample count or times differ from the configured grid
    """
    t = np.asarray(pulse.t_ns)
    if t.shape != times.shape:
        raise GridMismatchError(f"Pulse has {t.size} samples, configured grid has {times.size}")
    worst = float(np.max(np.abs(t - times)))
    if worst > tolerance:
        raise GridMismatchError(f"Pulse times deviate from the configured grid by {worst:.3e} ns")


def write_population_csv(
    traces: Iterable[PopulationTrace], path: Path | str, config_hash: str
) -> Path:
    output = Path(path)
    with _open_csv(output, config_hash) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(POPULATION_HEADER)
        for trace in traces:
            for t, populations in zip(trace.t_ns, trace.populations):
                writer.writerow([_number(t), trace.init_state, *(_number(p) for p in populations)])
    logger.info("Wrote %s", output)
    return output


def write_sweep_csv(sweep: SweepResult, path: Path | str) -> Path:
    output = Path(path)
    with _open_csv(output, sweep.config_hash) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for e in sweep.entries:
            writer.writerow(
                [
                    _number(e.duration_ns),
                    _number(e.initial_fidelity),
                    _number(e.final_fidelity),
                    _number(e.initial_xi),
                    _number(e.final_xi),
                    e.iterations,
                    e.termination.value,
                    _number(e.max_bias / TWO_PI),
                ]
            )
    logger.info("Wrote %s", output)
    return output
