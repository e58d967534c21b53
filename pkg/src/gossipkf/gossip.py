"""Randomized pairwise-averaging protocol.

One round: a node wakes up uniformly at random, draws a partner from its
row of the pair-selection matrix, and the two replace their values by the
pair average. Convergence is governed by the second largest eigenvalue of
the expected round matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import is_symmetric
from .model import GossipPlan


@dataclass(frozen=True)
class PairwiseMatrix:
    """Averaging matrix for one pair: W = I - (e_i - e_j)(e_i - e_j)'/2.

    Symmetric, doubly stochastic, and idempotent.
    """

    i: int
    j: int
    W: np.ndarray


@dataclass(frozen=True)
class GossipEvent:
    """One sampled round: node i woke up and contacted partner j."""

    t: int
    i: int
    j: int


def pairwise_matrix(i: int, j: int, n: int) -> PairwiseMatrix:
    if i == j:
        raise ValidationError(f"degenerate pair ({i}, {j})")
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"pair ({i}, {j}) out of range for n={n}")
    d = np.zeros(n)
    d[i] = 1.0
    d[j] = -1.0
    w = np.eye(n) - 0.5 * np.outer(d, d)
    return PairwiseMatrix(i, j, w)


def sample_event(plan: GossipPlan, rng: np.random.Generator, t: int = 0) -> GossipEvent:
    """Draw one round: awake node uniform over n, partner by inverse CDF over
    the awake node's row with ascending-index ordering."""
    n = plan.n
    i = int(rng.integers(n))
    row = plan.P[i]
    cdf = np.cumsum(row)
    if cdf[-1] <= 0.0:
        raise ValidationError(f"node {i + 1} has no gossip partner")
    u = rng.random() * cdf[-1]
    j = int(np.searchsorted(cdf, u, side="right"))
    while j >= n or row[j] == 0.0:
        j -= 1
    return GossipEvent(t, i, j)


def apply_round(values: np.ndarray, event: GossipEvent) -> np.ndarray:
    """Replace rows i and j of the value matrix by their average."""
    out = np.array(values, dtype=float)
    mean = 0.5 * (out[event.i] + out[event.j])
    out[event.i] = mean
    out[event.j] = mean
    return out


def expected_matrix(plan: GossipPlan) -> np.ndarray:
    """Expected round matrix (1/n) sum_ij P_ij W_ij."""
    n = plan.n
    w = np.zeros((n, n))
    for i, j in plan.support():
        w += plan.P[i, j] * pairwise_matrix(i, j, n).W
    return w / n


def second_eigenvalue(w: np.ndarray) -> float:
    """Second largest eigenvalue (by value) of a symmetric stochastic matrix."""
    if not is_symmetric(w):
        raise ValidationError("expected a symmetric matrix")
    vals = np.sort(np.linalg.eigvalsh(w))[::-1]
    return float(vals[1])


def averaging_time(epsilon: float, lambda2: float) -> int:
    """Rounds after which the relative averaging error exceeds epsilon with
    probability at most epsilon: ceil(3 ln(1/eps) / ln(1/lambda2))."""
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon}")
    if lambda2 >= 1.0:
        raise ValidationError("gossip plan does not converge (lambda2 >= 1)")
    if lambda2 <= 0.0:
        raise ValidationError(f"lambda2 must be in (0, 1), got {lambda2}")
    return math.ceil(3.0 * math.log(1.0 / epsilon) / math.log(1.0 / lambda2))
