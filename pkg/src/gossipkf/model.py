"""Plant, sensor, communication-graph, and gossip-plan definitions.

Node ids are 0-based throughout the API; scenario files and CSV output use
1-based labels. Measurement fusion follows the directed incoming-neighbor
sets exactly as the adjacency specifies, while gossip exchanges require
bidirectional links and therefore run on the symmetrized graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import is_symmetric, min_eigenvalue, psd_sqrt

_EIG_TOL = 1e-10


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateModel:
    """Linear plant x(k+1) = A x(k) + w(k), w ~ N(0, Q), x(0) ~ N(0, Pi0)."""

    A: np.ndarray
    Q: np.ndarray
    Pi0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _freeze(self.A))
        object.__setattr__(self, "Q", _freeze(self.Q))
        object.__setattr__(self, "Pi0", _freeze(self.Pi0))

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class SensorModel:
    """One sensor: y_i(k) = C x(k) + v_i(k), v_i ~ N(0, R), R > 0."""

    index: int
    C: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C", _freeze(np.atleast_2d(self.C)))
        object.__setattr__(self, "R", _freeze(np.atleast_2d(self.R)))

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def information_matrix(self) -> np.ndarray:
        """Per-sensor additive information contribution C'R^{-1}C."""
        return self.C.T @ np.linalg.solve(self.R, self.C)

    def information_vector(self, y: np.ndarray) -> np.ndarray:
        """Per-sensor information vector C'R^{-1}y."""
        return self.C.T @ np.linalg.solve(self.R, np.asarray(y, dtype=float))


@dataclass(frozen=True)
class Topology:
    """Communication graph as a binary adjacency matrix with self-loops.

    Gamma[i, j] = 1 means node j receives data from node i, so the incoming
    neighbor set of node i is read off column i.
    """

    Gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.Gamma)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValidationError("adjacency matrix must be square")
        if not np.all((g == 0) | (g == 1)):
            raise ValidationError("adjacency matrix must be binary")
        g = g.astype(int)
        g.setflags(write=False)
        object.__setattr__(self, "Gamma", g)

    @property
    def n(self) -> int:
        return self.Gamma.shape[0]

    def incoming(self, i: int) -> tuple[int, ...]:
        """N_i = { j : Gamma[j, i] = 1 }, the nodes whose data node i fuses."""
        return tuple(int(j) for j in np.flatnonzero(self.Gamma[:, i]))

    def outgoing(self, i: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.Gamma[i, :]))

    def in_degree(self, i: int) -> int:
        return int(self.Gamma[:, i].sum())


@dataclass(frozen=True)
class GossipPlan:
    """Pair-selection probabilities: an awake node i (probability 1/n each)
    contacts partner j with probability P[i, j]."""

    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", _freeze(self.P))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def support(self) -> list[tuple[int, int]]:
        """Ordered pairs (i, j) with positive selection probability."""
        idx = np.argwhere(self.P > 0)
        return [(int(i), int(j)) for i, j in idx]


def controllability_rank(a: np.ndarray, b: np.ndarray) -> int:
    """Rank of [B, AB, ..., A^{m-1}B]."""
    m = a.shape[0]
    blocks = [b]
    for _ in range(m - 1):
        blocks.append(a @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


def observability_rank(a: np.ndarray, c: np.ndarray) -> int:
    """Rank of [C; CA; ...; CA^{m-1}]."""
    m = a.shape[0]
    blocks = [c]
    for _ in range(m - 1):
        blocks.append(blocks[-1] @ a)
    return int(np.linalg.matrix_rank(np.vstack(blocks)))


def validate_state_model(model: StateModel) -> list[str]:
    """Check symmetry/PSD-ness of the covariances and (A, sqrt(Q)) controllability."""
    out = []
    m = model.m
    if model.A.shape != (m, m):
        out.append("A must be square")
        return out
    for name, mat in (("Q", model.Q), ("Pi0", model.Pi0)):
        if mat.shape != (m, m):
            out.append(f"{name} must be {m}x{m}")
        elif not is_symmetric(mat):
            out.append(f"{name} must be symmetric")
        elif min_eigenvalue(mat) < -_EIG_TOL:
            out.append(f"{name} must be positive semi-definite")
    if not out:
        if controllability_rank(model.A, psd_sqrt(model.Q)) < m:
            out.append("(A, sqrt(Q)) must be controllable")
    return out


def validate_sensor(model: StateModel, sensor: SensorModel) -> list[str]:
    """Check R_i > 0 and (A, C_i) observability for one sensor."""
    out = []
    m = model.m
    if sensor.C.shape[1] != m:
        out.append(f"sensor {sensor.index}: C must have {m} columns")
        return out
    p = sensor.p
    if sensor.R.shape != (p, p):
        out.append(f"sensor {sensor.index}: R must be {p}x{p}")
    elif not is_symmetric(sensor.R):
        out.append(f"sensor {sensor.index}: R must be symmetric")
    elif min_eigenvalue(sensor.R) <= _EIG_TOL:
        out.append(f"sensor {sensor.index}: R must be positive definite")
    if not out and observability_rank(model.A, sensor.C) < m:
        out.append(f"sensor {sensor.index}: (A, C) must be observable")
    return out


def validate_topology(topology: Topology) -> list[str]:
    """Diagnostic check of the adjacency matrix.

    Missing self-loops are violations. Asymmetric links and isolated nodes
    (no non-self neighbor in the symmetrized graph) are reported with a
    "warning:" prefix; they are legal for measurement fusion but matter for
    gossip. Returns an empty list when nothing is wrong.
    """
    g = topology.Gamma
    n = topology.n
    out = []
    for i in range(n):
        if g[i, i] != 1:
            out.append(f"missing self-loop at node {i + 1}")
    for i in range(n):
        for j in range(i + 1, n):
            if g[i, j] != g[j, i]:
                out.append(f"warning: asymmetric link between nodes {i + 1} and {j + 1}")
    gsym = g | g.T
    for i in range(n):
        if not np.any(np.delete(gsym[i], i)):
            out.append(f"warning: node {i + 1} is isolated")
    return out


def violations_only(diagnostics: list[str]) -> list[str]:
    """Filter out the warning-level entries of validate_topology output."""
    return [d for d in diagnostics if not d.startswith("warning:")]


def symmetrize(topology: Topology) -> Topology:
    """Elementwise OR of the adjacency with its transpose; idempotent and
    never removes an edge."""
    return Topology(topology.Gamma | topology.Gamma.T)


def build_uniform_gossip_plan(topology: Topology) -> GossipPlan:
    """Uniform pair-selection over each node's symmetrized non-self neighbors.

    Raises ValidationError when some node has no partner to gossip with.
    """
    gsym = symmetrize(topology).Gamma
    n = topology.n
    p = np.zeros((n, n))
    for i in range(n):
        neighbors = [j for j in range(n) if j != i and gsym[i, j] == 1]
        if not neighbors:
            raise ValidationError(f"gossip plan undefined for isolated node {i + 1}")
        p[i, neighbors] = 1.0 / len(neighbors)
    return GossipPlan(p)


def validate_gossip_plan(plan: GossipPlan, topology: Topology) -> list[str]:
    """Row-stochasticity, zero diagonal, and support inside the symmetrized
    edge set. A single-node plan is the empty plan."""
    out = []
    p = plan.P
    n = plan.n
    if n != topology.n:
        return [f"gossip plan is {n}x{n} but the topology has {topology.n} nodes"]
    if np.any(p < 0):
        out.append("gossip plan entries must be nonnegative")
    if n > 1 and np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
        out.append("gossip plan rows must sum to 1")
    if np.any(np.diag(p) != 0):
        out.append("gossip plan diagonal must be zero")
    gsym = symmetrize(topology).Gamma
    for i, j in np.argwhere(p > 0):
        if i != j and gsym[i, j] == 0:
            out.append(
                f"gossip plan assigns probability to non-edge ({int(i) + 1}, {int(j) + 1})"
            )
    return out
