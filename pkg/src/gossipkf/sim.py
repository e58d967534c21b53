"""Monte-Carlo experiment engine.

Generates ground-truth trajectories and noisy measurements, executes a
filtering strategy over a horizon, and records the tracking metrics. Each
run draws from three private sub-streams (truth, measurement noise, gossip
events) of a per-run seed, so changing the consensus round count never
perturbs the simulated data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import psd_sqrt
from .model import (
    GossipPlan,
    SensorModel,
    StateModel,
    Topology,
    validate_gossip_plan,
    validate_sensor,
    validate_state_model,
    validate_topology,
    violations_only,
)

STRATEGIES = ("centralized", "decentralized", "algorithm1", "algorithm2", "no-consensus")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one experiment campaign needs, fully materialized."""

    model: StateModel
    sensors: tuple[SensorModel, ...]
    topology: Topology
    plan: GossipPlan
    K: int
    horizon: int
    runs: int
    base_seed: int
    strategy: str

    def validate(self) -> list[str]:
        out = []
        out += validate_state_model(self.model)
        for sensor in self.sensors:
            out += validate_sensor(self.model, sensor)
        out += violations_only(validate_topology(self.topology))
        out += validate_gossip_plan(self.plan, self.topology)
        if len(self.sensors) != self.topology.n:
            out.append("sensor count must match the topology size")
        if self.strategy not in STRATEGIES:
            out.append(f"unknown strategy {self.strategy!r}")
        if self.runs < 1:
            out.append("runs must be >= 1")
        if self.horizon < 1:
            out.append("horizon must be >= 1")
        if self.K < 0:
            out.append("K must be >= 0")
        if self.strategy == "algorithm1" and self.K < 1:
            out.append("K must be >= 1 for algorithm1")
        return out


@dataclass
class MetricSeries:
    """Per-step tracking metrics: per-node squared error, its node average,
    the disagreement norm, and the per-node covariance traces."""

    msee: np.ndarray
    msee_ave: np.ndarray
    disagreement: np.ndarray
    trace_p: np.ndarray

    @property
    def horizon(self) -> int:
        return self.msee.shape[0]

    @property
    def n(self) -> int:
        return self.msee.shape[1]


def msee(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Squared Euclidean error of one node's estimate at one step."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValidationError(f"dimension mismatch: {x.shape} vs {x_hat.shape}")
    d = x - x_hat
    return float(d @ d)


def disagreement(estimates: np.ndarray) -> float:
    """Root-sum-square distance of the node estimates from their mean."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    center = est.mean(axis=0)
    return float(np.sqrt(((est - center) ** 2).sum()))


def simulate_truth(model: StateModel, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """States x(0..horizon-1) with x(0) ~ N(0, Pi0) and Gaussian process
    noise drawn through the symmetric PSD square root (singular Q allowed)."""
    m = model.m
    sqrt_pi0 = psd_sqrt(model.Pi0)
    sqrt_q = psd_sqrt(model.Q)
    z = rng.standard_normal((horizon, m))
    x = np.zeros((horizon, m))
    x[0] = sqrt_pi0 @ z[0]
    for k in range(horizon - 1):
        x[k + 1] = model.A @ x[k] + sqrt_q @ z[k + 1]
    return x


def simulate_measurements(
    trajectory: np.ndarray,
    sensors: Sequence[SensorModel],
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Per-sensor streams y_i(k) = C_i x(k) + v_i(k), noise independent
    across sensors and time."""
    out = []
    horizon = trajectory.shape[0]
    for sensor in sensors:
        sqrt_r = psd_sqrt(sensor.R)
        noise = rng.standard_normal((horizon, sensor.p)) @ sqrt_r.T
        out.append(trajectory @ sensor.C.T + noise)
    return out


def _run_streams(base_seed: int, run_index: int):
    ss = np.random.SeedSequence(base_seed + run_index)
    truth_ss, meas_ss, gossip_ss = ss.spawn(3)
    return (
        np.random.default_rng(truth_ss),
        np.random.default_rng(meas_ss),
        np.random.default_rng(gossip_ss),
    )


def _sample_pair(cdf: np.ndarray, row: np.ndarray, rng: np.random.Generator) -> tuple[int, int]:
    # Same draw order as gossip.sample_event: awake node, then inverse CDF.
    i = int(rng.integers(cdf.shape[0]))
    u = rng.random() * cdf[i, -1]
    j = int(np.searchsorted(cdf[i], u, side="right"))
    while j >= cdf.shape[0] or row[i, j] == 0.0:
        j -= 1
    return i, j


def _covariance_track(model: StateModel, s_all: np.ndarray, horizon: int):
    """Deterministic posterior-covariance recursion, vectorized over nodes."""
    n = s_all.shape[0]
    p_prior = np.tile(model.Pi0, (n, 1, 1))
    p_post = np.zeros((horizon, n, model.m, model.m))
    for k in range(horizon):
        p_post[k] = np.linalg.inv(np.linalg.inv(p_prior) + s_all)
        p_post[k] = 0.5 * (p_post[k] + p_post[k].transpose(0, 2, 1))
        p_prior = np.einsum("ij,njk,lk->nil", model.A, p_post[k], model.A) + model.Q
    return p_post


def _info_streams(sensors: Sequence[SensorModel], ys: list[np.ndarray]) -> np.ndarray:
    """Stacked per-sensor information vectors, shape (n, horizon, m)."""
    return np.stack(
        [ys[l] @ np.linalg.solve(sensors[l].R, sensors[l].C) for l in range(len(sensors))]
    )


def _run_bank(
    config: ScenarioConfig,
    mask: np.ndarray,
    k_rounds: int,
    ys: list[np.ndarray],
    rng_gossip: np.random.Generator,
):
    """Fusion-update-gossip-propagate loop shared by the centralized,
    decentralized, and gossip-on-estimates strategies."""
    model = config.model
    sensors = config.sensors
    n = len(sensors)
    m = model.m
    horizon = config.horizon
    omega = np.stack([s.information_matrix() for s in sensors])
    s_all = np.einsum("li,ljk->ijk", mask, omega)
    p_post = _covariance_track(model, s_all, horizon)
    traces = np.trace(p_post, axis1=2, axis2=3)
    z = _info_streams(sensors, ys)
    cdf = np.cumsum(config.plan.P, axis=1)
    estimates = np.zeros((horizon, n, m))
    x_prior = np.zeros((n, m))
    for k in range(horizon):
        q = mask.T @ z[:, k, :]
        innov = q - np.einsum("nij,nj->ni", s_all, x_prior)
        x_post = x_prior + np.einsum("nij,nj->ni", p_post[k], innov)
        for _ in range(k_rounds):
            i, j = _sample_pair(cdf, config.plan.P, rng_gossip)
            pair_mean = 0.5 * (x_post[i] + x_post[j])
            x_post[i] = pair_mean
            x_post[j] = pair_mean
        estimates[k] = x_post
        x_prior = x_post @ model.A.T
    return estimates, traces


def _run_algorithm1(
    config: ScenarioConfig,
    ys: list[np.ndarray],
    rng_gossip: np.random.Generator,
):
    """Consensus-on-information loop; covariances are event-dependent here."""
    model = config.model
    sensors = config.sensors
    n = len(sensors)
    m = model.m
    horizon = config.horizon
    u_base = np.stack([s.information_matrix().reshape(m * m) for s in sensors])
    z = _info_streams(sensors, ys)
    q_scaled = n * np.asarray(model.Q)
    cdf = np.cumsum(config.plan.P, axis=1)
    estimates = np.zeros((horizon, n, m))
    traces = np.zeros((horizon, n))
    x_prior = np.zeros((n, m))
    p_prior = np.tile(n * np.asarray(model.Pi0), (n, 1, 1))
    k_rounds = config.K if n > 1 else 0
    for k in range(horizon):
        u = z[:, k, :].copy()
        u_mat = u_base.copy()
        for t in range(k_rounds):
            i, j = _sample_pair(cdf, config.plan.P, rng_gossip)
            mean_u = 0.5 * (u[i] + u[j])
            u[i] = mean_u
            u[j] = mean_u
            mean_mat = 0.5 * (u_mat[i] + u_mat[j])
            u_mat[i] = mean_mat
            u_mat[j] = mean_mat
        big_u = u_mat.reshape(n, m, m)
        big_u = 0.5 * (big_u + big_u.transpose(0, 2, 1))
        p_post = np.linalg.inv(np.linalg.inv(p_prior) + big_u)
        p_post = 0.5 * (p_post + p_post.transpose(0, 2, 1))
        innov = u - np.einsum("nij,nj->ni", big_u, x_prior)
        x_post = x_prior + np.einsum("nij,nj->ni", p_post, innov)
        estimates[k] = x_post
        traces[k] = np.trace(p_post, axis1=1, axis2=2)
        x_prior = x_post @ model.A.T
        p_prior = np.einsum("ij,njk,lk->nil", model.A, p_post, model.A) + q_scaled
    return estimates, traces


def simulate_strategy(config: ScenarioConfig, run_index: int = 0):
    """One full run; returns (truth, per-node estimates, MetricSeries)."""
    violations = config.validate()
    if violations:
        raise ValidationError(violations)
    rng_truth, rng_meas, rng_gossip = _run_streams(config.base_seed, run_index)
    truth = simulate_truth(config.model, config.horizon, rng_truth)
    ys = simulate_measurements(truth, config.sensors, rng_meas)
    n = len(config.sensors)
    if config.strategy == "algorithm1":
        estimates, traces = _run_algorithm1(config, ys, rng_gossip)
    else:
        if config.strategy == "centralized":
            mask = np.ones((n, n))
            k_rounds = 0
        elif config.strategy in ("decentralized", "no-consensus"):
            mask = config.topology.Gamma.astype(float)
            k_rounds = 0
        else:
            mask = config.topology.Gamma.astype(float)
            k_rounds = config.K if n > 1 else 0
        estimates, traces = _run_bank(config, mask, k_rounds, ys, rng_gossip)
    err = truth[:, None, :] - estimates
    msee_values = np.einsum("kni,kni->kn", err, err)
    centered = estimates - estimates.mean(axis=1, keepdims=True)
    delta = np.sqrt(np.einsum("kni,kni->k", centered, centered))
    series = MetricSeries(
        msee=msee_values,
        msee_ave=msee_values.mean(axis=1),
        disagreement=delta,
        trace_p=traces,
    )
    return truth, estimates, series


def run_experiment(config: ScenarioConfig, run_index: int = 0) -> MetricSeries:
    """Execute the configured strategy for one run and record all metrics."""
    _, _, series = simulate_strategy(config, run_index)
    return series


def monte_carlo(config: ScenarioConfig) -> tuple[MetricSeries, list[int]]:
    """Average the metric series pointwise over runs; run r uses seed
    base_seed + r. Returns the averaged series and the per-run seeds.
    A failing run aborts the campaign with its index attached."""
    sums = None
    seeds = []
    for r in range(config.runs):
        try:
            series = run_experiment(config, r)
        except Exception as exc:
            if hasattr(exc, "add_note"):
                exc.add_note(f"monte_carlo aborted at run {r}")
            raise
        seeds.append(config.base_seed + r)
        if sums is None:
            sums = series
        else:
            sums = MetricSeries(
                msee=sums.msee + series.msee,
                msee_ave=sums.msee_ave + series.msee_ave,
                disagreement=sums.disagreement + series.disagreement,
                trace_p=sums.trace_p + series.trace_p,
            )
    scale = 1.0 / config.runs
    return (
        MetricSeries(
            msee=sums.msee * scale,
            msee_ave=sums.msee_ave * scale,
            disagreement=sums.disagreement * scale,
            trace_p=sums.trace_p * scale,
        ),
        seeds,
    )
