"""Steady-state error analysis of the gossip-on-estimates filter.

Builds the stacked error system from the per-node Riccati limits, applies
the expected one-step covariance map under the gossip event distribution,
finds its fixed point, and runs trace comparisons against the decentralized
recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError
from .filters import fused_information_matrix, steady_state_covariances
from .gossip import pairwise_matrix
from .linalg import block_diag, is_symmetric, min_eigenvalue, sym
from .model import GossipPlan, SensorModel, StateModel, Topology


@dataclass(frozen=True)
class SteadyErrorSystem:
    """Steady matrices of the stacked (n*m)-dimensional error recursion.

    A_blk = P (P^-)^{-1} (I_n x A) propagates the stacked error, B_blk =
    P (P^-)^{-1} injects the shared process noise Q, and D_blk maps stacked
    measurement noise through the neighborhood fusion. R_blk is the
    block-diagonal measurement noise covariance.
    """

    n: int
    m: int
    P_block: np.ndarray
    Pminus_block: np.ndarray
    A_blk: np.ndarray
    B_blk: np.ndarray
    D_blk: np.ndarray
    R_blk: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True)
class CovarianceState:
    """Symmetric PSD candidate for the stacked error covariance."""

    Sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.Sigma, dtype=float)
        if not is_symmetric(s, tol=1e-12 * max(1.0, float(np.abs(s).max(initial=0.0)))):
            raise ValidationError("covariance must be symmetric")
        if min_eigenvalue(s) < -1e-10 * max(1.0, float(np.abs(s).max(initial=0.0))):
            raise ValidationError("covariance must be positive semi-definite")
        object.__setattr__(self, "Sigma", s)

    @property
    def trace(self) -> float:
        return float(np.trace(self.Sigma))


@dataclass(frozen=True)
class FixedPointResult:
    cov: CovarianceState
    iterations: int
    residual: float
    contraction_ratio: float


def build_steady_error_system(
    model: StateModel,
    sensors: list[SensorModel],
    topology: Topology,
) -> SteadyErrorSystem:
    """Assemble the steady error system from the per-node Riccati limits."""
    n = topology.n
    m = model.m
    p_blocks = []
    pm_blocks = []
    for i in range(n):
        s_i = fused_information_matrix(i, topology, sensors)
        p_minus, p_post = steady_state_covariances(model, s_i)
        pm_blocks.append(p_minus)
        p_blocks.append(p_post)
    p_block = block_diag(p_blocks)
    pm_block = block_diag(pm_blocks)
    b_blk = block_diag([p_blocks[i] @ np.linalg.inv(pm_blocks[i]) for i in range(n)])
    a_blk = b_blk @ np.kron(np.eye(n), model.A)
    link = np.kron(topology.Gamma, np.eye(m))
    c_block = block_diag([s.C for s in sensors])
    rinv_block = block_diag([np.linalg.inv(s.R) for s in sensors])
    d_blk = p_block @ link.T @ c_block.T @ rinv_block
    r_blk = block_diag([s.R for s in sensors])
    return SteadyErrorSystem(
        n, m, p_block, pm_block, a_blk, b_blk, d_blk, r_blk, np.array(model.Q)
    )


def validate_steady_error_system(sys: SteadyErrorSystem, tol: float = 1e-8) -> list[str]:
    """Check the structural identities of the assembled blocks.

    Posterior-below-prior is checked through the spectral radius of
    P (P^-)^{-1}; its eigenvalues lie in (0, 1] even though the operator
    norm can exceed one when P^- and the fused information do not commute.
    """
    out = []
    gain = sys.P_block @ np.linalg.inv(sys.Pminus_block)
    if np.linalg.norm(gain - sys.B_blk) > tol * max(1.0, np.linalg.norm(gain)):
        out.append("B block must equal P (P^-)^{-1}")
    radius = float(np.max(np.abs(np.linalg.eigvals(gain))))
    if radius > 1.0 + 1e-8:
        out.append(f"spectral radius of P (P^-)^{{-1}} must be <= 1, got {radius}")
    return out


def _expectation_terms(plan: GossipPlan, m: int) -> list[tuple[float, np.ndarray]]:
    """(probability, W_ij x I_m) for every supported ordered pair."""
    eye_m = np.eye(m)
    terms = []
    for i, j in plan.support():
        w = np.kron(pairwise_matrix(i, j, plan.n).W, eye_m)
        terms.append((float(plan.P[i, j]) / plan.n, w))
    return terms


def _single_round_expectation(x: np.ndarray, terms) -> np.ndarray:
    out = np.zeros_like(x)
    for prob, w in terms:
        out += prob * (w @ x @ w)
    return out


def _noise_forcing(sys: SteadyErrorSystem) -> np.ndarray:
    """B (11' x Q) B' + D R D', the constant forcing of the covariance map."""
    q_stack = np.kron(np.ones((sys.n, sys.n)), sys.Q)
    return sym(sys.B_blk @ q_stack @ sys.B_blk.T + sys.D_blk @ sys.R_blk @ sys.D_blk.T)


def covariance_map_T(
    cov: CovarianceState,
    sys: SteadyErrorSystem,
    plan: GossipPlan,
    K: int,
) -> CovarianceState:
    """Exact expected one-step map: propagate and force the covariance, then
    apply the single-round gossip expectation K times."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    terms = _expectation_terms(plan, sys.m)
    x = sym(sys.A_blk @ cov.Sigma @ sys.A_blk.T) + _noise_forcing(sys)
    for _ in range(K):
        x = _single_round_expectation(x, terms)
    return CovarianceState(sym(x))


def fixed_point_covariance(
    sys: SteadyErrorSystem,
    plan: GossipPlan,
    K: int,
    tol: float = 1e-10,
    max_iter: int = 20_000,
    sigma0: np.ndarray | None = None,
) -> FixedPointResult:
    """Iterate the expected covariance map to its fixed point.

    Also reports the largest step-to-step contraction ratio observed, an
    empirical certificate that the map is contractive on this instance.
    """
    nm = sys.n * sys.m
    terms = _expectation_terms(plan, sys.m)
    forcing = _noise_forcing(sys)
    x = np.zeros((nm, nm)) if sigma0 is None else sym(np.asarray(sigma0, dtype=float))
    prev_step = None
    ratio = 0.0
    for it in range(1, max_iter + 1):
        y = sym(sys.A_blk @ x @ sys.A_blk.T) + forcing
        for _ in range(K):
            y = _single_round_expectation(y, terms)
        y = sym(y)
        step = float(np.linalg.norm(y - x))
        if prev_step is not None and prev_step > 1e-14:
            ratio = max(ratio, step / prev_step)
        if step <= tol * (1.0 + np.linalg.norm(y)):
            return FixedPointResult(CovarianceState(y), it, step, ratio)
        if np.trace(y) > 1e12:
            raise DivergenceError("covariance map diverged")
        prev_step = step
        x = y
    raise DivergenceError(
        f"covariance map did not converge in {max_iter} iterations (last ratio {ratio:.6f})"
    )


def trace_contraction_check(w: np.ndarray, p: np.ndarray) -> tuple[float, float, bool]:
    """Trace comparison Tr(W P W') <= Tr(P) for symmetric stochastic W and
    symmetric PD P; returns (Tr(P), Tr(W P W'), holds)."""
    if not is_symmetric(w):
        raise ValidationError("W must be symmetric")
    if np.any(w < -1e-12) or np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-9):
        raise ValidationError("W must be stochastic")
    if not is_symmetric(p):
        raise ValidationError("P must be symmetric")
    if min_eigenvalue(p) <= 0:
        raise ValidationError("P must be positive definite")
    tr_p = float(np.trace(p))
    tr_wpw = float(np.trace(w @ p @ w.T))
    return tr_p, tr_wpw, tr_wpw <= tr_p + 1e-10


def orthogonality_check(sys: SteadyErrorSystem) -> tuple[float, bool]:
    """Frobenius deviation of A_blk' A_blk from the identity; the sufficient
    condition for the gossip filter to dominate the decentralized one."""
    nm = sys.n * sys.m
    deviation = float(np.linalg.norm(sys.A_blk.T @ sys.A_blk - np.eye(nm)))
    return deviation, deviation <= 1e-8


def trace_comparison_series(
    sys: SteadyErrorSystem,
    plan: GossipPlan,
    K: int,
    horizon: int,
    sigma0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Trace series of the expected gossip covariance versus the
    decentralized recursion, from a shared initial covariance.

    Returns (gossip traces, decentralized traces), both length horizon + 1
    with index 0 the shared start.
    """
    terms = _expectation_terms(plan, sys.m)
    forcing = _noise_forcing(sys)
    start = sys.P_block if sigma0 is None else sym(np.asarray(sigma0, dtype=float))
    sigma = start.copy()
    pdec = start.copy()
    tr_gossip = [float(np.trace(sigma))]
    tr_dec = [float(np.trace(pdec))]
    for _ in range(horizon):
        sigma = sym(sys.A_blk @ sigma @ sys.A_blk.T) + forcing
        for _ in range(K):
            sigma = _single_round_expectation(sigma, terms)
        sigma = sym(sigma)
        pdec = sym(sys.A_blk @ pdec @ sys.A_blk.T) + forcing
        tr_gossip.append(float(np.trace(sigma)))
        tr_dec.append(float(np.trace(pdec)))
    return np.array(tr_gossip), np.array(tr_dec)
