"""Estimator family: information-form Kalman updates, the noncooperative
decentralized filter with neighborhood fusion, the consensus-on-information
variant, and the gossip-on-estimates variant.

These are the readable reference implementations; the Monte-Carlo engine in
``sim`` vectorizes the same recursions and is tested against them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DivergenceError, NumericalError, ValidationError
from .gossip import apply_round, sample_event
from .linalg import sym
from .model import GossipPlan, SensorModel, StateModel, Topology, symmetrize

_DIVERGENCE_TRACE = 1e12


@dataclass(frozen=True)
class FilterState:
    """Per-node prior/posterior estimate and covariance."""

    node: int
    x_prior: np.ndarray
    P_prior: np.ndarray
    x_post: np.ndarray
    P_post: np.ndarray


@dataclass(frozen=True)
class InformationPair:
    """Additive measurement contribution: u = C'R^{-1}y, U = C'R^{-1}C."""

    u: np.ndarray
    U: np.ndarray


@dataclass(frozen=True)
class FusedData:
    """Neighborhood-summed information matrix and vector (S_i, q_i)."""

    S: np.ndarray
    q: np.ndarray


def initial_state(model: StateModel, node: int = 0, prior_scale: float = 1.0) -> FilterState:
    """Zero estimate with prior covariance prior_scale * Pi0."""
    m = model.m
    x0 = np.zeros(m)
    p0 = prior_scale * np.array(model.Pi0)
    return FilterState(node, x0, p0, x0.copy(), p0.copy())


def initial_bank(model: StateModel, n: int, prior_scale: float = 1.0) -> list[FilterState]:
    return [initial_state(model, i, prior_scale) for i in range(n)]


def info_measurement_update(state: FilterState, S: np.ndarray, q: np.ndarray) -> FilterState:
    """Information-form measurement update:
    P_post = (P_prior^{-1} + S)^{-1}, x_post = x_prior + P_post (q - S x_prior).
    """
    try:
        info_prior = np.linalg.inv(state.P_prior)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"degenerate prior at node {state.node + 1}") from exc
    p_post = sym(np.linalg.inv(info_prior + S))
    x_post = state.x_prior + p_post @ (q - S @ state.x_prior)
    return replace(state, x_post=x_post, P_post=p_post)


def time_update(state: FilterState, model: StateModel, process_noise: np.ndarray | None = None) -> FilterState:
    """Propagate the posterior through the dynamics:
    x_prior = A x_post, P_prior = A P_post A' + Q."""
    q = model.Q if process_noise is None else process_noise
    x_prior = model.A @ state.x_post
    p_prior = sym(model.A @ state.P_post @ model.A.T + q)
    return replace(state, x_prior=x_prior, P_prior=p_prior)


def neighborhood_fusion(
    i: int,
    topology: Topology,
    sensors: Sequence[SensorModel],
    measurements: Mapping[int, np.ndarray],
) -> FusedData:
    """Sum information contributions over the incoming neighbors of node i
    (self included)."""
    m = sensors[0].C.shape[1]
    s = np.zeros((m, m))
    q = np.zeros(m)
    for l in topology.incoming(i):
        if l not in measurements:
            raise ValidationError(f"missing measurement for node {l + 1}")
        s += sensors[l].information_matrix()
        q += sensors[l].information_vector(measurements[l])
    return FusedData(sym(s), q)


def fused_information_matrix(i: int, topology: Topology, sensors: Sequence[SensorModel]) -> np.ndarray:
    """S_i alone, for covariance-only recursions."""
    m = sensors[0].C.shape[1]
    s = np.zeros((m, m))
    for l in topology.incoming(i):
        s += sensors[l].information_matrix()
    return sym(s)


def decentralized_step(
    bank: Sequence[FilterState],
    model: StateModel,
    topology: Topology,
    sensors: Sequence[SensorModel],
    measurements: Mapping[int, np.ndarray],
) -> list[FilterState]:
    """One noncooperative step: every node fuses its neighborhood's
    measurements, updates, and propagates. No estimate exchange."""
    out = []
    for state in bank:
        fused = neighborhood_fusion(state.node, topology, sensors, measurements)
        updated = info_measurement_update(state, fused.S, fused.q)
        out.append(time_update(updated, model))
    return out


def algorithm2_step(
    bank: Sequence[FilterState],
    model: StateModel,
    topology: Topology,
    sensors: Sequence[SensorModel],
    plan: GossipPlan,
    K: int,
    measurements: Mapping[int, np.ndarray],
    rng: np.random.Generator,
) -> list[FilterState]:
    """Decentralized step with K randomized pairwise-averaging rounds applied
    to the intermediate estimates. Covariances are not exchanged."""
    if K < 0:
        raise ValidationError("K must be >= 0")
    updated = []
    for state in bank:
        fused = neighborhood_fusion(state.node, topology, sensors, measurements)
        updated.append(info_measurement_update(state, fused.S, fused.q))
    phi = np.stack([s.x_post for s in updated])
    for t in range(K if len(bank) > 1 else 0):
        phi = apply_round(phi, sample_event(plan, rng, t))
    out = []
    for idx, state in enumerate(updated):
        out.append(time_update(replace(state, x_post=phi[idx]), model))
    return out


def centralized_reference_step(
    state: FilterState,
    model: StateModel,
    sensors: Sequence[SensorModel],
    measurements: Mapping[int, np.ndarray],
) -> FilterState:
    """All-sensor information filter; the baseline every consensus scheme is
    compared against."""
    m = model.m
    s = np.zeros((m, m))
    q = np.zeros(m)
    for sensor in sensors:
        if sensor.index not in measurements:
            raise ValidationError(f"missing measurement for node {sensor.index + 1}")
        s += sensor.information_matrix()
        q += sensor.information_vector(measurements[sensor.index])
    updated = info_measurement_update(state, sym(s), q)
    return time_update(updated, model)


def algorithm1_run(
    model: StateModel,
    sensors: Sequence[SensorModel],
    topology: Topology,
    plan: GossipPlan,
    K: int,
    measurements: Sequence[Mapping[int, np.ndarray]],
    rng: np.random.Generator | None = None,
    averaging: str = "gossip",
) -> np.ndarray:
    """Consensus-on-information filter.

    Per step, every node forms its information pair, the stacked pairs are
    averaged by K shared gossip rounds (or replaced by the exact mean when
    averaging="exact"), and a micro filter consumes the averages. Priors
    start at n * Pi0 and the propagation noise is n * Q, which makes exact
    averaging reproduce the all-sensor centralized filter at every node.

    Returns the per-node posterior estimates, shape (steps, n, m).
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    if averaging not in ("gossip", "exact"):
        raise ValidationError(f"unknown averaging mode {averaging!r}")
    if averaging == "gossip" and rng is None:
        raise ValidationError("gossip averaging requires an rng")
    n = len(sensors)
    m = model.m
    if n > 1:
        gsym = symmetrize(topology).Gamma
        reach = np.linalg.matrix_power(gsym, n - 1)
        if np.any(reach == 0):
            raise ValidationError("symmetrized topology must be connected")
    bank = initial_bank(model, n, prior_scale=float(n))
    q_scaled = float(n) * np.array(model.Q)
    estimates = np.zeros((len(measurements), n, m))
    for k, step_meas in enumerate(measurements):
        u = np.stack([sensors[i].information_vector(step_meas[i]) for i in range(n)])
        big_u = np.stack([sensors[i].information_matrix().reshape(m * m) for i in range(n)])
        if averaging == "exact":
            u = np.tile(u.mean(axis=0), (n, 1))
            big_u = np.tile(big_u.mean(axis=0), (n, 1))
        else:
            for t in range(K if n > 1 else 0):
                event = sample_event(plan, rng, t)
                u = apply_round(u, event)
                big_u = apply_round(big_u, event)
        new_bank = []
        for i, state in enumerate(bank):
            updated = info_measurement_update(state, sym(big_u[i].reshape(m, m)), u[i])
            estimates[k, i] = updated.x_post
            new_bank.append(time_update(updated, model, process_noise=q_scaled))
        bank = new_bank
    return estimates


def steady_state_covariances(
    model: StateModel,
    S: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed point of the prior-covariance map X -> A (X^{-1} + S)^{-1} A' + Q
    started at Pi0; returns (prior limit, posterior limit)."""
    x = np.array(model.Pi0)
    for _ in range(max_iter):
        post = sym(np.linalg.inv(np.linalg.inv(x) + S))
        x_next = sym(model.A @ post @ model.A.T + model.Q)
        if np.trace(x_next) > _DIVERGENCE_TRACE:
            raise DivergenceError("Riccati diverged")
        if np.linalg.norm(x_next - x) <= tol * (1.0 + np.linalg.norm(x_next)):
            post = sym(np.linalg.inv(np.linalg.inv(x_next) + S))
            return x_next, post
        x = x_next
    raise DivergenceError(f"Riccati iteration did not converge in {max_iter} iterations")
