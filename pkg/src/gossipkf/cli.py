"""Command-line front end.

Commands: validate, run, sweep-k, analyze, schedule, echo. Every writing
command records a manifest before emitting results and appends sha256
checksums of the artifacts afterwards, so a finished output directory is
reproducible byte-for-byte from its manifest.

Exit codes: 0 success, 2 validation failure, 3 numerical divergence, 4 I/O.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import analysis as analysis_mod
from .errors import NumericalError, ScenarioParseError, ValidationError
from .filters import fused_information_matrix, steady_state_covariances
from .gossip import averaging_time, expected_matrix, second_eigenvalue
from .model import validate_topology
from .report import (
    AnalysisReport,
    SweepReport,
    emit_csv,
    render_analysis_figure,
    render_metric_figures,
    render_schedule_figure,
    render_sweep_figure,
)
from .scenario import emit_scenario, parse_budget, parse_scenario
from .scheduler import solve_network
from .sim import monte_carlo

DEFAULT_SWEEP = tuple(range(1, 42, 5))
_STEADY_WINDOW = 20


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gossipkf",
        description="Gossip-based distributed Kalman filtering simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, extras in (
        ("validate", ()),
        ("echo", ()),
        ("run", ("out", "plots")),
        ("sweep-k", ("out", "plots")),
        ("analyze", ("out", "plots")),
        ("schedule", ("out", "plots", "method")),
    ):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="scenario file")
        cmd.add_argument("--seed", type=int, default=None, help="override [run] seed")
        cmd.add_argument("--runs", type=int, default=None, help="override [run] runs")
        cmd.add_argument("--k", default=None, help="consensus rounds, integer or 'auto'")
        cmd.add_argument("--strategy", default=None, help="override [run] strategy")
        if "out" in extras:
            cmd.add_argument("--out", default="out", help="output directory")
        if "plots" in extras:
            cmd.add_argument("--no-plots", action="store_true", help="skip figure rendering")
        if "method" in extras:
            cmd.add_argument("--method", choices=("exact", "greedy"), default="exact")
    return parser


def _parse(args):
    return parse_scenario(
        args.config,
        seed=args.seed,
        runs=args.runs,
        k=args.k,
        strategy=args.strategy,
    )


def _write_manifest(outdir: Path, command: str, args, config) -> Path:
    path = outdir / "manifest.txt"
    lines = [
        f"command = {command}",
        f"config = {Path(args.config).resolve()}",
        f"seed = {config.base_seed}",
        f"out = {outdir.resolve()}",
        f"strategy = {config.strategy}",
        f"K = {config.K}",
        f"runs = {config.runs}",
        f"horizon = {config.horizon}",
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def _append_checksums(manifest: Path, artifacts) -> None:
    with open(manifest, "a") as handle:
        for artifact in artifacts:
            digest = hashlib.sha256(Path(artifact).read_bytes()).hexdigest()
            handle.write(f"sha256 {Path(artifact).name} = {digest}\n")


def _steady_mean(values: np.ndarray) -> float:
    window = min(_STEADY_WINDOW, len(values))
    return float(np.mean(values[-window:]))


def _cmd_validate(args) -> int:
    config = _parse(args)
    for note in validate_topology(config.topology):
        print(note)
    budget = parse_budget(args.config)
    print(
        f"ok: n={config.topology.n}, m={config.model.m}, strategy={config.strategy}, "
        f"K={config.K}, horizon={config.horizon}, runs={config.runs}, "
        f"budget={'present' if budget is not None else 'absent'}"
    )
    return 0


def _cmd_echo(args) -> int:
    config = _parse(args)
    budget = parse_budget(args.config)
    sys.stdout.write(emit_scenario(config, budget))
    return 0


def _cmd_run(args) -> int:
    config = _parse(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _write_manifest(outdir, "run", args, config)
    series, _ = monte_carlo(config)
    artifacts = [emit_csv(series, outdir / "metrics.csv")]
    if not args.no_plots:
        artifacts += render_metric_figures(series, outdir)
    _append_checksums(manifest, artifacts)
    print(
        f"wrote {outdir / 'metrics.csv'}: steady msee_ave="
        f"{_steady_mean(series.msee_ave):.6g}, steady disagreement="
        f"{_steady_mean(series.disagreement):.6g}"
    )
    return 0


def _cmd_sweep_k(args) -> int:
    config = _parse(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _write_manifest(outdir, "sweep-k", args, config)
    ks = list(DEFAULT_SWEEP)
    msee_vals = []
    delta_vals = []
    for k_rounds in ks:
        series, _ = monte_carlo(dataclasses.replace(config, K=k_rounds))
        msee_vals.append(_steady_mean(series.msee_ave))
        delta_vals.append(_steady_mean(series.disagreement))
        print(f"K={k_rounds}: steady msee_ave={msee_vals[-1]:.6g}, disagreement={delta_vals[-1]:.6g}")
    report = SweepReport(ks, msee_vals, delta_vals)
    artifacts = [emit_csv(report, outdir / "sweep.csv")]
    if not args.no_plots:
        artifacts += render_sweep_figure(report, outdir)
    _append_checksums(manifest, artifacts)
    return 0


def _cmd_analyze(args) -> int:
    config = _parse(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _write_manifest(outdir, "analyze", args, config)
    lam2 = second_eigenvalue(expected_matrix(config.plan))
    k_star = averaging_time(0.01, lam2) if 0.0 < lam2 < 1.0 else None
    steady_traces = []
    for i in range(config.topology.n):
        s_i = fused_information_matrix(i, config.topology, config.sensors)
        _, p_post = steady_state_covariances(config.model, s_i)
        steady_traces.append(float(np.trace(p_post)))
    sys_blocks = analysis_mod.build_steady_error_system(
        config.model, list(config.sensors), config.topology
    )
    deviation, _ = analysis_mod.orthogonality_check(sys_blocks)
    k_rounds = max(config.K, 1)
    fp = analysis_mod.fixed_point_covariance(sys_blocks, config.plan, k_rounds)
    tr_gossip, tr_dec = analysis_mod.trace_comparison_series(
        sys_blocks, config.plan, k_rounds, config.horizon
    )
    report = AnalysisReport(
        lambda2=lam2,
        k_star=k_star,
        steady_traces=steady_traces,
        orthogonality_deviation=deviation,
        fixed_point_trace=fp.cov.trace,
        contraction_ratio=fp.contraction_ratio,
        fixed_point_iterations=fp.iterations,
        trace_gossip=tr_gossip,
        trace_decentralized=tr_dec,
    )
    artifacts = [emit_csv(report, outdir / "analysis.csv")]
    if not args.no_plots:
        artifacts += render_analysis_figure(report, outdir)
    _append_checksums(manifest, artifacts)
    print(
        f"lambda2={lam2:.6g}, K*(0.01)={k_star}, fixed-point trace={fp.cov.trace:.6g}, "
        f"contraction ratio={fp.contraction_ratio:.6g}"
    )
    return 0


def _cmd_schedule(args) -> int:
    config = _parse(args)
    budget = parse_budget(args.config)
    if budget is None:
        raise ValidationError(["scenario has no [budget] section"])
    if budget.c.shape[0] != config.topology.n:
        raise ValidationError(["budget size must match the topology"])
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _write_manifest(outdir, "schedule", args, config)
    result = solve_network(
        config.model, config.sensors, config.topology, budget, config.plan, method=args.method
    )
    artifacts = [emit_csv(result, outdir / "schedule.csv")]
    if not args.no_plots:
        artifacts += render_schedule_figure(result, outdir)
    _append_checksums(manifest, artifacts)
    print(f"J = {result.objective:.9g} ({result.method})")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "echo": _cmd_echo,
    "run": _cmd_run,
    "sweep-k": _cmd_sweep_k,
    "analyze": _cmd_analyze,
    "schedule": _cmd_schedule,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, ScenarioParseError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
