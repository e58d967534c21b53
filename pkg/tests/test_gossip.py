import numpy as np
import pytest

from gossipkf.errors import ValidationError
from gossipkf.gossip import (
    GossipEvent,
    apply_round,
    averaging_time,
    expected_matrix,
    pairwise_matrix,
    sample_event,
    second_eigenvalue,
)
from gossipkf.model import GossipPlan, Topology, build_uniform_gossip_plan


def complete_plan(n):
    return build_uniform_gossip_plan(Topology(np.ones((n, n), dtype=int)))


def test_pairwise_matrix_two_nodes():
    assert np.allclose(pairwise_matrix(0, 1, 2).W, [[0.5, 0.5], [0.5, 0.5]])


def test_pairwise_matrix_skips_middle_node():
    w = pairwise_matrix(0, 2, 3).W
    assert np.allclose(w, [[0.5, 0, 0.5], [0, 1, 0], [0.5, 0, 0.5]])


def test_pairwise_matrix_degenerate_pair():
    with pytest.raises(ValidationError, match="degenerate"):
        pairwise_matrix(1, 1, 3)


def test_pairwise_matrices_symmetric_doubly_stochastic_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 11))
        i, j = rng.choice(n, size=2, replace=False)
        w = pairwise_matrix(int(i), int(j), n).W
        assert np.allclose(w, w.T, atol=1e-12)
        assert np.allclose(w.sum(axis=0), 1.0, atol=1e-12)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
        assert np.allclose(w @ w, w, atol=1e-12)


def test_sample_event_two_nodes_always_the_single_edge():
    plan = GossipPlan(np.array([[0.0, 1.0], [1.0, 0.0]]))
    rng = np.random.default_rng(1)
    for _ in range(100):
        ev = sample_event(plan, rng)
        assert {ev.i, ev.j} == {0, 1}


def test_sample_event_matches_exact_distribution():
    plan = complete_plan(3)
    rng = np.random.default_rng(7)
    counts = np.zeros((3, 3))
    trials = 60_000
    for _ in range(trials):
        ev = sample_event(plan, rng)
        counts[ev.i, ev.j] += 1
    freq = counts / trials
    for i in range(3):
        for j in range(3):
            expected = 0.0 if i == j else 1.0 / 6.0
            assert abs(freq[i, j] - expected) <= 0.01


def test_sample_event_never_emits_zero_support_pair():
    p = np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])
    plan = GossipPlan(p)
    rng = np.random.default_rng(5)
    for _ in range(2000):
        ev = sample_event(plan, rng)
        assert (ev.i, ev.j) != (0, 2) and (ev.i, ev.j) != (2, 0)


def test_apply_round_averages_selected_rows_only():
    out = apply_round(np.array([[2.0], [0.0]]), GossipEvent(0, 0, 1))
    assert np.allclose(out, [[1.0], [1.0]])
    values = np.array([[1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    out = apply_round(values, GossipEvent(0, 0, 1))
    assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5], [5.0, 5.0]])
    # untouched input
    assert np.allclose(values[0], [1.0, 0.0])


def test_apply_round_idempotent_per_event():
    rng = np.random.default_rng(2)
    values = rng.standard_normal((5, 3))
    ev = GossipEvent(0, 1, 4)
    once = apply_round(values, ev)
    twice = apply_round(once, ev)
    assert np.array_equal(once, twice)


def test_rounds_preserve_column_means():
    rng = np.random.default_rng(3)
    plan = complete_plan(6)
    values = rng.standard_normal((6, 4))
    means = values.mean(axis=0)
    for t in range(500):
        values = apply_round(values, sample_event(plan, rng, t))
        assert np.all(np.abs(values.mean(axis=0) - means) <= 1e-12)


def test_expected_matrix_single_edge():
    plan = GossipPlan(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(expected_matrix(plan), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_expected_matrix_complete_three_nodes_closed_form():
    # (1/2) I + (1/6) ones, from summing the three pair matrices
    plan = complete_plan(3)
    expected = 0.5 * np.eye(3) + np.ones((3, 3)) / 6.0
    assert np.allclose(expected_matrix(plan), expected, atol=1e-15)


def test_expected_matrix_block_diagonal_for_disconnected_components():
    gamma = np.array(
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], dtype=int
    )
    plan = build_uniform_gossip_plan(Topology(gamma))
    w = expected_matrix(plan)
    assert np.all(w[:2, 2:] == 0) and np.all(w[2:, :2] == 0)


def test_second_eigenvalue_values():
    assert second_eigenvalue(expected_matrix(complete_plan(3))) == pytest.approx(0.5, abs=1e-12)
    single = GossipPlan(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert second_eigenvalue(expected_matrix(single)) == pytest.approx(0.0, abs=1e-12)
    gamma = np.array(
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], dtype=int
    )
    disconnected = build_uniform_gossip_plan(Topology(gamma))
    assert second_eigenvalue(expected_matrix(disconnected)) == pytest.approx(1.0, abs=1e-12)


def test_second_eigenvalue_rejects_asymmetric_input():
    with pytest.raises(ValidationError):
        second_eigenvalue(np.array([[0.9, 0.1], [0.4, 0.6]]))


def test_expected_square_equals_expected_matrix_spectrum():
    # every round matrix is a symmetric projection, so E[W'W] = E[W]
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        gamma = np.ones((n, n), dtype=int)
        plan = build_uniform_gossip_plan(Topology(gamma))
        w_bar = expected_matrix(plan)
        w_sq = np.zeros((n, n))
        for i, j in plan.support():
            wij = pairwise_matrix(i, j, n).W
            w_sq += plan.P[i, j] / n * (wij.T @ wij)
        assert np.allclose(w_sq, w_bar, atol=1e-12)
        assert abs(second_eigenvalue(w_sq) - second_eigenvalue(w_bar)) <= 1e-12


def test_averaging_time_values():
    assert averaging_time(0.01, 0.5) == 20
    assert averaging_time(0.1, 0.5) == 10


def test_averaging_time_rejects_nonconvergent_plan():
    with pytest.raises(ValidationError, match="does not converge"):
        averaging_time(0.01, 1.0)
    with pytest.raises(ValidationError):
        averaging_time(1.5, 0.5)
