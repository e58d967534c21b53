"""Power-constrained sensor-connection selection.

Each node chooses which neighbors' measurements to fuse, subject to a
per-node power budget that charges both the chosen measurement links and
the expected gossip traffic. Candidate selections are scored by the trace
of the steady posterior covariance of the induced filter; the search is
exact enumeration at desk scale with a greedy heuristic for larger
candidate sets, plus a feasibility certificate check for the underlying
matrix inequality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalError, UnschedulableNodeError, ValidationError
from .linalg import block_diag, is_symmetric, sym, whiten_output
from .model import GossipPlan, SensorModel, StateModel, Topology

_DIVERGENCE_TRACE = 1e12


@dataclass(frozen=True)
class PowerBudget:
    """Link costs c[i, j] and per-node budgets delta[i]; c[i, i] = 0 since a
    sensor reads itself for free."""

    c: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        d = np.array(self.delta, dtype=float)
        if np.any(c < 0) or np.any(d < 0):
            raise ValidationError("costs and budgets must be nonnegative")
        if np.any(np.diag(c) != 0):
            raise ValidationError("self-measurement cost c[i, i] must be zero")
        c.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "delta", d)


@dataclass(frozen=True)
class Selection:
    """Binary row of chosen links for one scheduling node (self always on)."""

    i: int
    gamma_row: tuple[int, ...]

    def __post_init__(self):
        if self.gamma_row[self.i] != 1:
            raise ValidationError(f"node {self.i + 1} must always read itself")
        if any(g not in (0, 1) for g in self.gamma_row):
            raise ValidationError("selection entries must be binary")

    def chosen(self) -> tuple[int, ...]:
        return tuple(j for j, g in enumerate(self.gamma_row) if g == 1)

    def xi(self, sensors: Sequence[SensorModel]) -> np.ndarray:
        """Block-diagonal indicator diag(gamma_j * I_{p_j})."""
        return block_diag([g * np.eye(s.p) for g, s in zip(self.gamma_row, sensors)])


@dataclass(frozen=True)
class ScheduleResult:
    """Network-wide outcome: one selection and steady trace per node, the
    average-trace objective, and the method that produced it."""

    selections: list[Selection]
    traces: list[float]
    objective: float
    method: str
    feasible: list[bool]


def g_hat(
    x: np.ndarray,
    selection: Selection,
    model: StateModel,
    sensors: Sequence[SensorModel],
) -> np.ndarray:
    """One selection-aware Riccati step: ([A X A' + Q]^{-1} + sum_j gamma_j
    C_j'R_j^{-1}C_j)^{-1}."""
    h = sym(model.A @ x @ model.A.T + model.Q)
    try:
        h_inv = np.linalg.inv(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular propagated covariance h(X)") from exc
    s = np.zeros((model.m, model.m))
    for g, sensor in zip(selection.gamma_row, sensors):
        if g:
            s += sensor.information_matrix()
    return sym(np.linalg.inv(h_inv + s))


def steady_trace(
    selection: Selection,
    model: StateModel,
    sensors: Sequence[SensorModel],
    tol: float = 1e-11,
    max_iter: int = 20_000,
) -> float:
    """Trace of the fixed point of g_hat from Pi0, or +inf when the
    iteration diverges (an unobservable, unstable selection)."""
    x = np.array(model.Pi0)
    for _ in range(max_iter):
        x_next = g_hat(x, selection, model, sensors)
        if np.trace(x_next) > _DIVERGENCE_TRACE:
            return math.inf
        if np.linalg.norm(x_next - x) <= tol * (1.0 + np.linalg.norm(x_next)):
            return float(np.trace(x_next))
        x = x_next
    return math.inf


def power_feasible(
    gamma_row: Sequence[int],
    i: int,
    budget: PowerBudget,
    plan: GossipPlan,
) -> bool:
    """Budget check: sum_j (c[i,j] gamma[j] + P[i,j] c[i,j] / n) <= delta[i]."""
    n = plan.n
    cost = 0.0
    for j in range(n):
        if j == i:
            continue
        cost += budget.c[i, j] * gamma_row[j] + plan.P[i, j] * budget.c[i, j] / n
    return cost <= budget.delta[i]


def _row_from_subset(i: int, n: int, subset: Sequence[int]) -> tuple[int, ...]:
    row = [0] * n
    row[i] = 1
    for j in subset:
        row[j] = 1
    return tuple(row)


def solve_exact(
    i: int,
    model: StateModel,
    sensors: Sequence[SensorModel],
    budget: PowerBudget,
    plan: GossipPlan,
    candidate_set: Sequence[int],
    tol: float = 1e-11,
) -> tuple[Selection, float]:
    """Enumerate every candidate subset (self always on), keep the
    power-feasible minimizer of the steady trace.

    Subsets are visited by (size, index order) and only strictly better
    traces replace the incumbent, so ties resolve to fewer links and then
    lexicographically smaller link sets regardless of candidate ordering.
    """
    candidates = sorted(set(candidate_set) - {i})
    if len(candidates) > 20:
        raise ValidationError(f"enumeration bound exceeded: {len(candidates)} candidates")
    n = plan.n
    best: tuple[Selection, float] | None = None
    for size in range(len(candidates) + 1):
        for subset in itertools.combinations(candidates, size):
            row = _row_from_subset(i, n, subset)
            if not power_feasible(row, i, budget, plan):
                continue
            trace = steady_trace(Selection(i, row), model, sensors, tol=tol)
            if math.isinf(trace):
                continue
            if best is None or trace < best[1]:
                best = (Selection(i, row), trace)
    if best is None:
        raise UnschedulableNodeError(f"node {i + 1} unschedulable")
    return best


def solve_greedy(
    i: int,
    model: StateModel,
    sensors: Sequence[SensorModel],
    budget: PowerBudget,
    plan: GossipPlan,
    candidate_set: Sequence[int],
    tol: float = 1e-11,
) -> tuple[Selection, float]:
    """Start from the self-only row and repeatedly add the feasible link with
    the largest trace decrease per unit cost (free links always qualify).

    Returns a selection with trace +inf when even the self-only row is
    infeasible or divergent; the caller treats that node as unschedulable.
    """
    candidates = sorted(set(candidate_set) - {i})
    n = plan.n
    row = _row_from_subset(i, n, ())
    if not power_feasible(row, i, budget, plan):
        return Selection(i, row), math.inf
    current = steady_trace(Selection(i, row), model, sensors, tol=tol)
    remaining = list(candidates)
    while remaining and not math.isinf(current):
        best_j = None
        best_key = None
        best_trace = None
        for j in remaining:
            trial = list(row)
            trial[j] = 1
            trial = tuple(trial)
            if not power_feasible(trial, i, budget, plan):
                continue
            trace = steady_trace(Selection(i, trial), model, sensors, tol=tol)
            gain = current - trace
            cost = float(budget.c[i, j])
            if cost == 0.0:
                key = (math.inf, gain, -j)
            elif gain > 1e-12:
                key = (gain / cost, gain, -j)
            else:
                continue
            if best_key is None or key > best_key:
                best_key = key
                best_j = j
                best_trace = trace
        if best_j is None:
            break
        lst = list(row)
        lst[best_j] = 1
        row = tuple(lst)
        current = best_trace
        remaining.remove(best_j)
    if math.isinf(current):
        return Selection(i, row), math.inf
    return Selection(i, row), current


def lmi_certificate_check(
    y: np.ndarray,
    z: np.ndarray,
    selection: Selection,
    model: StateModel,
    sensors: Sequence[SensorModel],
) -> tuple[float, bool]:
    """Feasibility certificate for the steady-cost inequality of a selection.

    Stacks the whitened output maps H_j (H_j'H_j = C_j'R_j^{-1}C_j) of all
    sensors, builds the 4x4 block matrix in (Y, Z) with the selection
    indicator in the last block, and reports its minimum eigenvalue. A PSD
    value witnesses existence of a bounded steady covariance.
    """
    m = model.m
    h = np.vstack([whiten_output(s.C, s.R) for s in sensors])
    p_total = h.shape[0]
    y = np.asarray(y, dtype=float)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if y.shape != (m, m):
        raise ValidationError(f"Y must be {m}x{m}")
    if not is_symmetric(y, tol=1e-9):
        raise ValidationError("Y must be symmetric")
    if z.shape != (m, p_total):
        raise ValidationError(f"Z must be {m}x{p_total}")
    xi = block_diag([selection.gamma_row[j] * np.eye(s.p) for j, s in enumerate(sensors)])
    q_inv = np.linalg.inv(model.Q)
    yzh = y - z @ h
    a = model.A
    top = np.hstack([y, yzh @ a, yzh, z])
    second = np.hstack([a.T @ yzh.T, y, np.zeros((m, m)), np.zeros((m, p_total))])
    third = np.hstack([yzh.T, np.zeros((m, m)), q_inv, np.zeros((m, p_total))])
    bottom = np.hstack([z.T, np.zeros((p_total, m)), np.zeros((p_total, m)), xi])
    block = np.vstack([top, second, third, bottom])
    min_eig = float(np.linalg.eigvalsh(sym(block))[0])
    return min_eig, min_eig >= -1e-9


def solve_network(
    model: StateModel,
    sensors: Sequence[SensorModel],
    topology: Topology,
    budget: PowerBudget,
    plan: GossipPlan,
    method: str = "exact",
    tol: float = 1e-11,
) -> ScheduleResult:
    """Solve the per-node selection subproblems over each node's incoming
    neighbors and aggregate the average-trace objective."""
    if method not in ("exact", "greedy"):
        raise ValidationError(f"unknown scheduling method {method!r}")
    n = topology.n
    solver = solve_exact if method == "exact" else solve_greedy
    selections = []
    traces = []
    for i in range(n):
        candidates = [j for j in topology.incoming(i) if j != i]
        selection, trace = solver(i, model, sensors, budget, plan, candidates, tol=tol)
        if math.isinf(trace):
            raise UnschedulableNodeError(f"node {i + 1} unschedulable")
        selections.append(selection)
        traces.append(trace)
    objective = float(np.mean(traces))
    feasible = [
        power_feasible(sel.gamma_row, sel.i, budget, plan) for sel in selections
    ]
    return ScheduleResult(selections, traces, objective, method, feasible)
