"""Tests for CSV and JSON artifacts"""
import json

import numpy as np
import pytest

from choigrape.core.errors import ConfigurationError, GridMismatchError
from choigrape.core.export import (
    POPULATION_HEADER,
    PULSE_HEADER,
    check_pulse_grid,
    read_fit_json,
    read_pulse_csv,
    write_fit_json,
    write_population_csv,
    write_pulse_csv,
)
from choigrape.core.models import TWO_PI, PopulationTrace, PulseRecord


@pytest.fixture
def pulse() -> PulseRecord:
    t = [0.0, 0.1, 0.2, 0.3]
    return PulseRecord(
        t_ns=t,
        raw=[0.93 * TWO_PI, 0.94 * TWO_PI, 0.94 * TWO_PI, 0.93 * TWO_PI],
        smoothed=[0.931 * TWO_PI, 0.938 * TWO_PI, 0.938 * TWO_PI, 0.931 * TWO_PI],
    )


class TestPulseCSV:
    """Pulse files"""

    def test_layout(self, pulse, tmp_path):
        path = write_pulse_csv(pulse, tmp_path / "pulse.csv", "abc123")
        lines = path.read_bytes().decode("utf-8").split("\n")
        assert lines[0] == "# config_hash=abc123"
        assert lines[1] == ",".join(PULSE_HEADER)
        assert float(lines[2].split(",")[1]) == pytest.approx(0.93, rel=1e-15)
        assert b"\r" not in path.read_bytes()

    def test_read_restores_radians(self, pulse, tmp_path):
        restored = read_pulse_csv(write_pulse_csv(pulse, tmp_path / "pulse.csv", "x"))
        np.testing.assert_allclose(restored.smoothed, pulse.smoothed, rtol=1e-15)
        assert restored.t_ns == pulse.t_ns

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "pulse.csv"
        path.write_text("t,phi\n0.0,0.9\n")
        with pytest.raises(ConfigurationError):
            read_pulse_csv(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            read_pulse_csv(tmp_path / "nope.csv")

    def test_grid_check(self, pulse):
        check_pulse_grid(pulse, np.arange(4) * 0.1)
        with pytest.raises(GridMismatchError):
            check_pulse_grid(pulse, np.arange(5) * 0.1)
        with pytest.raises(GridMismatchError):
            check_pulse_grid(pulse, np.arange(4) * 0.1001)


class TestPopulationCSV:
    """Population traces"""

    def test_rows_per_state_and_time(self, tmp_path):
        traces = [
            PopulationTrace(init_state=label, t_ns=[0.0, 0.1], populations=[[1.0, 0.0, 0.0], [0.9, 0.05, 0.05]])
            for label in ("0", "1")
        ]
        path = write_population_csv(traces, tmp_path / "populations.csv", "h")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[1] == ",".join(POPULATION_HEADER)
        assert len(lines) == 2 + 4
        assert lines[4].startswith("0,1,")


class TestFitJSON:
    """Model fit cache documents"""

    def test_keeps_fit_hash_and_reports_units(self, synthetic_fits, tmp_path):
        fits = synthetic_fits.model_copy(update={"fit_hash": "deadbeef"})
        path = write_fit_json(fits, tmp_path / "model_fit.json", config_hash="cafe")
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["config_hash"] == "cafe"
        assert payload["validity_limit_over_2pi"] == pytest.approx(0.9454)
        assert read_fit_json(path) == fits

    def test_malformed_document_rejected(self, tmp_path):
        path = tmp_path / "model_fit.json"
        path.write_text('{"phi_ref": 1.0}')
        with pytest.raises(ConfigurationError):
            read_fit_json(path)
