"""CSV emission and figure rendering for the CLI commands.

All delimited output uses 12 significant digits and a newline-terminated
final row, so re-emitting the same data is byte-identical. Figures are
rendered with the Agg backend next to the CSV they illustrate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import GossipKFError
from .scheduler import ScheduleResult
from .sim import MetricSeries


@dataclass
class AnalysisReport:
    """Spectral and steady-state diagnostics of one scenario."""

    lambda2: float
    k_star: int | None
    steady_traces: list[float]
    orthogonality_deviation: float
    fixed_point_trace: float
    contraction_ratio: float
    fixed_point_iterations: int
    trace_gossip: np.ndarray
    trace_decentralized: np.ndarray


@dataclass
class SweepReport:
    """Steady-state metrics per consensus round count."""

    ks: list[int]
    steady_msee_ave: list[float]
    steady_disagreement: list[float]


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _open_writer(path: Path):
    handle = open(path, "w", newline="")
    return handle, csv.writer(handle)


def write_metrics_csv(series: MetricSeries, path) -> Path:
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["k", "node", "metric", "value"])
        for k in range(series.horizon):
            for i in range(series.n):
                writer.writerow([k, i + 1, "msee", _fmt(series.msee[k, i])])
            for i in range(series.n):
                writer.writerow([k, i + 1, "trace_p", _fmt(series.trace_p[k, i])])
            writer.writerow([k, "ave", "msee_ave", _fmt(series.msee_ave[k])])
            writer.writerow([k, "delta", "disagreement", _fmt(series.disagreement[k])])
    return path


def write_schedule_csv(result: ScheduleResult, path) -> Path:
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["node", "selection", "trace", "method"])
        for sel, trace in zip(result.selections, result.traces):
            bits = "".join(str(g) for g in sel.gamma_row)
            writer.writerow([sel.i + 1, bits, _fmt(trace), result.method])
        writer.writerow(["J", "", _fmt(result.objective), result.method])
    return path


def write_analysis_csv(report: AnalysisReport, path) -> Path:
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["metric", "k", "value"])
        writer.writerow(["lambda2", "", _fmt(report.lambda2)])
        if report.k_star is not None:
            writer.writerow(["averaging_time_eps_0.01", "", report.k_star])
        for i, trace in enumerate(report.steady_traces):
            writer.writerow([f"steady_trace_node{i + 1}", "", _fmt(trace)])
        writer.writerow(["orthogonality_deviation", "", _fmt(report.orthogonality_deviation)])
        writer.writerow(["fixed_point_trace", "", _fmt(report.fixed_point_trace)])
        writer.writerow(["contraction_ratio", "", _fmt(report.contraction_ratio)])
        writer.writerow(["fixed_point_iterations", "", report.fixed_point_iterations])
        for k, value in enumerate(report.trace_gossip):
            writer.writerow(["trace_gossip", k, _fmt(value)])
        for k, value in enumerate(report.trace_decentralized):
            writer.writerow(["trace_decentralized", k, _fmt(value)])
    return path


def write_sweep_csv(report: SweepReport, path) -> Path:
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["K", "metric", "value"])
        for k, msee_ave, delta in zip(report.ks, report.steady_msee_ave, report.steady_disagreement):
            writer.writerow([k, "steady_msee_ave", _fmt(msee_ave)])
            writer.writerow([k, "steady_disagreement", _fmt(delta)])
    return path


def emit_csv(payload, path) -> Path:
    """Write whichever report object was produced to a CSV file."""
    if isinstance(payload, MetricSeries):
        return write_metrics_csv(payload, path)
    if isinstance(payload, ScheduleResult):
        return write_schedule_csv(payload, path)
    if isinstance(payload, AnalysisReport):
        return write_analysis_csv(payload, path)
    if isinstance(payload, SweepReport):
        return write_sweep_csv(payload, path)
    raise GossipKFError(f"no CSV writer for {type(payload).__name__}")


def render_metric_figures(series: MetricSeries, outdir) -> list[Path]:
    outdir = Path(outdir)
    written = []
    steps = np.arange(series.horizon)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i in range(series.n):
        ax.plot(steps, series.msee[:, i], lw=1, label=f"node {i + 1}")
    ax.plot(steps, series.msee_ave, "k--", lw=1.6, label="average")
    ax.set_xlabel("time step k")
    ax.set_ylabel("mean-square estimation error")
    ax.set_yscale("log")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    path = outdir / "fig_msee.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i in range(series.n):
        ax.plot(steps, series.trace_p[:, i], lw=1, label=f"node {i + 1}")
    ax.set_xlabel("time step k")
    ax.set_ylabel("trace of error covariance")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    path = outdir / "fig_trace.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(steps, series.disagreement, lw=1.2)
    ax.set_xlabel("time step k")
    ax.set_ylabel("disagreement $\\|\\delta\\|$")
    fig.tight_layout()
    path = outdir / "fig_disagreement.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def render_sweep_figure(report: SweepReport, outdir) -> list[Path]:
    outdir = Path(outdir)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(report.ks, report.steady_disagreement, "o-")
    ax1.set_xlabel("consensus rounds K")
    ax1.set_ylabel("steady-state disagreement")
    ax2.plot(report.ks, report.steady_msee_ave, "s-")
    ax2.set_xlabel("consensus rounds K")
    ax2.set_ylabel("steady-state average MSEE")
    fig.tight_layout()
    path = outdir / "fig_sweep.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_analysis_figure(report: AnalysisReport, outdir) -> list[Path]:
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    steps = np.arange(len(report.trace_gossip))
    ax.plot(steps, report.trace_gossip, lw=1.4, label="gossip (expected)")
    ax.plot(steps, report.trace_decentralized, lw=1.4, ls="--", label="decentralized")
    ax.set_xlabel("time step k")
    ax.set_ylabel("trace of stacked error covariance")
    ax.legend()
    fig.tight_layout()
    path = outdir / "fig_traces.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_schedule_figure(result: ScheduleResult, outdir) -> list[Path]:
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(7, 4))
    nodes = [sel.i + 1 for sel in result.selections]
    ax.bar(nodes, result.traces, color="tab:blue")
    ax.axhline(result.objective, color="k", ls="--", lw=1, label="average")
    ax.set_xlabel("node")
    ax.set_ylabel("steady covariance trace")
    ax.set_xticks(nodes)
    ax.legend()
    fig.tight_layout()
    path = outdir / "fig_schedule.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
