"""Scenario file parsing and emission.

Flat sectioned text: [model], [sensor.<i>], [topology], [gossip], [run],
and optionally [budget]. Matrices are semicolon-separated rows with
whitespace-separated entries. Sensor sections either give C explicitly or
give `upsilon = auto | <float>`, meaning C = 2 * upsilon * I with auto
values drawn once per campaign from (0, 1] out of a dedicated stream of
the base seed, then frozen across runs.
"""

from __future__ import annotations

import configparser
import importlib.resources
import io
from pathlib import Path

import numpy as np

from .errors import ScenarioParseError, ValidationError
from .gossip import averaging_time, expected_matrix, second_eigenvalue
from .model import (
    GossipPlan,
    SensorModel,
    StateModel,
    Topology,
    build_uniform_gossip_plan,
)
from .scheduler import PowerBudget
from .sim import ScenarioConfig

_RUN_DEFAULTS = {"K": "auto", "horizon": 100, "runs": 100, "seed": 0, "strategy": "algorithm2"}


def example1_path() -> Path:
    """Filesystem path of the bundled five-sensor scenario."""
    return Path(importlib.resources.files("gossipkf") / "scenarios" / "example1.scenario")


def _key_line(text: str, section: str, key: str) -> int:
    """Best-effort line number of `key` inside `section` for error messages."""
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
        elif current == section and stripped.split("=")[0].strip() == key:
            return lineno
    return 0


def _parse_matrix(raw: str, text: str, section: str, key: str) -> np.ndarray:
    rows = []
    for row in raw.split(";"):
        entries = row.split()
        if not entries:
            continue
        try:
            rows.append([float(e) for e in entries])
        except ValueError as exc:
            line = _key_line(text, section, key)
            raise ScenarioParseError(
                f"line {line}: bad numeric entry in {section}.{key}: {exc}"
            ) from exc
    if not rows or len({len(r) for r in rows}) != 1:
        line = _key_line(text, section, key)
        raise ScenarioParseError(f"line {line}: ragged or empty matrix in {section}.{key}")
    return np.array(rows)


def _parse_vector(raw: str, text: str, section: str, key: str) -> np.ndarray:
    mat = _parse_matrix(raw, text, section, key)
    return mat.reshape(-1)


def _read(path) -> tuple[configparser.ConfigParser, str]:
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ScenarioParseError(str(exc)) from exc
    return parser, text


def _upsilon_stream(base_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), 0x7570]))


def _resolve_sensors(parser, text, m: int, base_seed: int) -> tuple[SensorModel, ...]:
    sections = sorted(
        (s for s in parser.sections() if s.startswith("sensor.")),
        key=lambda s: int(s.split(".", 1)[1]),
    )
    if not sections:
        raise ScenarioParseError("no [sensor.<i>] sections found")
    indices = [int(s.split(".", 1)[1]) for s in sections]
    if indices != list(range(1, len(sections) + 1)):
        raise ScenarioParseError(f"sensor sections must be numbered 1..n, got {indices}")
    rng = _upsilon_stream(base_seed)
    sensors = []
    for section in sections:
        idx = int(section.split(".", 1)[1]) - 1
        sec = parser[section]
        if "C" in sec and "upsilon" in sec:
            raise ValidationError([f"{section}: give either C or upsilon, not both"])
        if "C" in sec:
            c = _parse_matrix(sec["C"], text, section, "C")
        elif "upsilon" in sec:
            raw = sec["upsilon"].strip()
            upsilon = 1.0 - rng.random() if raw == "auto" else float(raw)
            if not 0.0 < upsilon <= 1.0:
                raise ValidationError([f"{section}: upsilon must lie in (0, 1]"])
            c = 2.0 * upsilon * np.eye(m)
        else:
            raise ScenarioParseError(f"{section}: needs C or upsilon")
        if "R" not in sec:
            raise ScenarioParseError(f"{section}: needs R")
        r = _parse_matrix(sec["R"], text, section, "R")
        sensors.append(SensorModel(idx, c, r))
    return tuple(sensors)


def parse_budget(path) -> PowerBudget | None:
    """Budget section of a scenario file, or None when absent."""
    parser, text = _read(path)
    if "budget" not in parser:
        return None
    sec = parser["budget"]
    if "c" not in sec or "delta" not in sec:
        raise ScenarioParseError("[budget] needs both c and delta")
    c = _parse_matrix(sec["c"], text, "budget", "c")
    delta = _parse_vector(sec["delta"], text, "budget", "delta")
    if c.shape[0] != c.shape[1] or c.shape[0] != delta.shape[0]:
        raise ValidationError(["budget c must be n x n and delta length n"])
    return PowerBudget(c, delta)


def parse_scenario(
    path,
    *,
    seed: int | None = None,
    runs: int | None = None,
    k: str | int | None = None,
    strategy: str | None = None,
) -> ScenarioConfig:
    """Parse and fully validate a scenario file; keyword overrides replace
    the [run] section values before anything random is resolved."""
    parser, text = _read(path)
    for required in ("model", "topology"):
        if required not in parser:
            raise ScenarioParseError(f"missing [{required}] section")
    msec = parser["model"]
    for key in ("A", "Q", "Pi0"):
        if key not in msec:
            raise ScenarioParseError(f"[model] needs {key}")
    a = _parse_matrix(msec["A"], text, "model", "A")
    q = _parse_matrix(msec["Q"], text, "model", "Q")
    pi0 = _parse_matrix(msec["Pi0"], text, "model", "Pi0")
    model = StateModel(a, q, pi0)

    run = dict(_RUN_DEFAULTS)
    if "run" in parser:
        run.update(parser["run"])
    if seed is not None:
        run["seed"] = seed
    if runs is not None:
        run["runs"] = runs
    if k is not None:
        run["K"] = k
    if strategy is not None:
        run["strategy"] = strategy
    try:
        base_seed = int(run["seed"])
        horizon = int(run["horizon"])
        n_runs = int(run["runs"])
    except ValueError as exc:
        raise ScenarioParseError(f"[run]: bad integer value: {exc}") from exc

    sensors = _resolve_sensors(parser, text, model.m, base_seed)

    if "gamma" not in parser["topology"]:
        raise ScenarioParseError("[topology] needs gamma")
    gamma = _parse_matrix(parser["topology"]["gamma"], text, "topology", "gamma")
    if not np.all((gamma == 0) | (gamma == 1)):
        raise ValidationError(["adjacency matrix must be binary"])
    topology = Topology(gamma.astype(int))

    p_raw = parser["gossip"]["P"].strip() if "gossip" in parser and "P" in parser["gossip"] else "auto"
    if p_raw == "auto":
        plan = build_uniform_gossip_plan(topology)
    else:
        plan = GossipPlan(_parse_matrix(p_raw, text, "gossip", "P"))

    k_raw = str(run["K"]).strip()
    if k_raw == "auto":
        lam2 = second_eigenvalue(expected_matrix(plan))
        k_resolved = averaging_time(0.01, lam2)
    else:
        try:
            k_resolved = int(k_raw)
        except ValueError as exc:
            raise ScenarioParseError(f"[run]: K must be an integer or 'auto': {k_raw}") from exc

    config = ScenarioConfig(
        model=model,
        sensors=sensors,
        topology=topology,
        plan=plan,
        K=k_resolved,
        horizon=horizon,
        runs=n_runs,
        base_seed=base_seed,
        strategy=str(run["strategy"]).strip(),
    )
    violations = config.validate()
    if violations:
        raise ValidationError(violations)
    return config


def _fmt_matrix(mat: np.ndarray) -> str:
    mat = np.atleast_2d(mat)
    return "; ".join(" ".join(format(v, ".17g") for v in row) for row in mat)


def emit_scenario(config: ScenarioConfig, budget: PowerBudget | None = None) -> str:
    """Normalized scenario text that parses back to an equivalent config.

    Auto values (upsilon, plan, K) are emitted resolved.
    """
    out = io.StringIO()
    out.write("[model]\n")
    out.write(f"A = {_fmt_matrix(config.model.A)}\n")
    out.write(f"Q = {_fmt_matrix(config.model.Q)}\n")
    out.write(f"Pi0 = {_fmt_matrix(config.model.Pi0)}\n")
    for sensor in config.sensors:
        out.write(f"\n[sensor.{sensor.index + 1}]\n")
        out.write(f"C = {_fmt_matrix(sensor.C)}\n")
        out.write(f"R = {_fmt_matrix(sensor.R)}\n")
    out.write("\n[topology]\n")
    out.write(f"gamma = {_fmt_matrix(config.topology.Gamma)}\n")
    out.write("\n[gossip]\n")
    out.write(f"P = {_fmt_matrix(config.plan.P)}\n")
    out.write("\n[run]\n")
    out.write(f"strategy = {config.strategy}\n")
    out.write(f"K = {config.K}\n")
    out.write(f"horizon = {config.horizon}\n")
    out.write(f"runs = {config.runs}\n")
    out.write(f"seed = {config.base_seed}\n")
    if budget is not None:
        out.write("\n[budget]\n")
        out.write(f"c = {_fmt_matrix(budget.c)}\n")
        out.write(f"delta = {_fmt_matrix(budget.delta.reshape(1, -1))}\n")
    return out.getvalue()
