"""
CLI output formatting utilities
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

from rich.console import Console
from rich.table import Table

try:
    from ..core.models import TWO_PI, OptimizationReport, QubitModelFits, SimulationResult, SweepResult
except ImportError:  # pragma: no cover - fallback for script execution
    from choigrape.core.models import TWO_PI, OptimizationReport, QubitModelFits, SimulationResult, SweepResult


def _percent(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}%"


def _bias(value: float | None) -> str:
    return "-" if value is None else f"{value / TWO_PI:.5f}·2π"


class CLIFormatter:
    """Renders fits, reports and sweeps as Rich tables"""

    def __init__(self, console: Console | None = None):
        self.console = console or Console()

    def create_fit_table(self, fits: QubitModelFits) -> Table:
        table = Table(title="Three-Level Model Fit", show_header=True, header_style="bold magenta")
        table.add_column("Quantity", style="cyan", no_wrap=True)
        table.add_column("Value", style="yellow")

        table.add_row("Reference bias φ_ref", _bias(fits.phi_ref))
        table.add_row("ω_ref", f"{fits.omega_ref:.4f} rad/ns ({fits.omega_ref / TWO_PI:.4f} GHz)")
        table.add_row("Fit range", f"{_bias(fits.fit_min)} – {_bias(fits.fit_max)}")
        table.add_row(f"Validity limit (α = {fits.alpha_threshold:g})", _bias(fits.validity_limit))
        table.add_row("DVR two-state limit", _bias(fits.two_state_limit))
        for key, value in fits.residuals.items():
            table.add_row(f"Residual {key}", f"{value:.2e}")
        return table

    def create_history_table(self, report: OptimizationReport, rows: int = 10) -> Table:
        table = Table(title="Optimization History", show_header=True, header_style="bold magenta")
        table.add_column("Iteration", style="cyan", justify="right")
        table.add_column("Φ'", style="green", justify="right")
        table.add_column("ξ", style="green", justify="right")
        table.add_column("|∇|∞", style="dim", justify="right")

        history = report.history
        step = max(1, len(history) // rows)
        shown = history[::step]
        if history and shown[-1] is not history[-1]:
            shown.append(history[-1])
        for record in shown:
            table.add_row(
                str(record.iteration),
                f"{record.fidelity:.6f}",
                "-" if record.contrast is None else f"{record.contrast:.4f}",
                f"{record.gradient_norm:.2e}",
            )
        return table

    def print_report_summary(self, report: OptimizationReport) -> None:
        initial_xi = report.initial_contrast.xi if report.initial_contrast else None
        final_xi = report.final_contrast.xi if report.final_contrast else None
        self.console.print(
            f"\n[bold]T = {report.duration_ns:g} ns[/bold] "
            f"({report.n_pixels} pixels of {report.dt_ns:g} ns, {report.n_variables} free)"
        )
        self.console.print(f"Φ'  {_percent(report.initial_fidelity)} → [green]{_percent(report.final_fidelity)}[/green]")
        self.console.print(f"ξ   {_percent(initial_xi)} → [green]{_percent(final_xi)}[/green]")
        self.console.print(
            f"Termination: {report.termination.value} after {report.iterations} iteration(s), "
            f"{report.function_evaluations} evaluations"
        )
        self.console.print(
            f"Max bias {_bias(max(report.final_pulse.smoothed))} (bound {_bias(report.upper_bound)})"
        )
        if report.clamped_pixels:
            self.console.print(f"[yellow]Warning: {report.clamped_pixels} pixel(s) clamped at the validity limit[/yellow]")

    def print_simulation_summary(self, result: SimulationResult) -> None:
        self.console.print(f"\nΦ' = {_percent(result.fidelity)}")
        if result.contrast:
            c = result.contrast
            self.console.print(
                f"ξ = {_percent(c.xi)}  (P_bright {_percent(c.p_bright)}, P_dark {_percent(c.p_dark)})"
            )
        if result.clamped_pixels:
            self.console.print(f"[yellow]Warning: {result.clamped_pixels} pixel(s) clamped at the validity limit[/yellow]")

    def create_sweep_table(self, sweep: SweepResult) -> Table:
        table = Table(title="Duration Sweep", show_header=True, header_style="bold magenta")
        table.add_column("T (ns)", style="cyan", justify="right")
        table.add_column("Φ' initial", justify="right")
        table.add_column("Φ' final", style="green", justify="right")
        table.add_column("ξ initial", justify="right")
        table.add_column("ξ final", style="green", justify="right")
        table.add_column("Iterations", justify="right")
        table.add_column("Max bias", style="yellow")
        for e in sweep.entries:
            table.add_row(
                f"{e.duration_ns:g}",
                _percent(e.initial_fidelity),
                _percent(e.final_fidelity),
                _percent(e.initial_xi),
                _percent(e.final_xi),
                str(e.iterations),
                _bias(e.max_bias),
            )
        return table

    def print_artifacts(self, artifacts: Mapping[str, Path]) -> None:
        for name, path in artifacts.items():
            self.console.print(f"[green]✓ {name}:[/green] {path}")
