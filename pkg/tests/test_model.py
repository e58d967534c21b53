import numpy as np
import pytest

from gossipkf.errors import ValidationError
from gossipkf.model import (
    GossipPlan,
    SensorModel,
    StateModel,
    Topology,
    build_uniform_gossip_plan,
    controllability_rank,
    observability_rank,
    symmetrize,
    validate_gossip_plan,
    validate_sensor,
    validate_state_model,
    validate_topology,
    violations_only,
)

EXAMPLE_GAMMA = np.array(
    [
        [1, 1, 0, 0, 0],
        [1, 1, 0, 1, 0],
        [1, 0, 1, 0, 0],
        [0, 0, 1, 1, 0],
        [0, 1, 0, 0, 1],
    ]
)


def test_identity_adjacency_warns_isolated_but_no_violation():
    diags = validate_topology(Topology(np.eye(3, dtype=int)))
    assert violations_only(diags) == []
    assert sum("isolated" in d for d in diags) == 3


def test_five_node_example_adjacency_reports_every_asymmetric_pair():
    diags = validate_topology(Topology(EXAMPLE_GAMMA))
    asym = [d for d in diags if "asymmetric" in d]
    assert violations_only(diags) == []
    # elementwise comparison with the transpose is the oracle here
    expected_pairs = {
        (i + 1, j + 1)
        for i in range(5)
        for j in range(i + 1, 5)
        if EXAMPLE_GAMMA[i, j] != EXAMPLE_GAMMA[j, i]
    }
    assert expected_pairs == {(1, 3), (2, 4), (2, 5), (3, 4)}
    reported = {tuple(int(x) for x in d.split("nodes")[1].replace("and", " ").split()) for d in asym}
    assert reported == expected_pairs


def test_missing_self_loop_is_a_violation():
    gamma = np.eye(3, dtype=int)
    gamma[0, 0] = 0
    diags = validate_topology(Topology(gamma))
    assert any("self-loop at node 1" in d for d in violations_only(diags))


def test_symmetrize_is_elementwise_or_with_transpose():
    top = Topology(EXAMPLE_GAMMA)
    expected = np.logical_or(EXAMPLE_GAMMA, EXAMPLE_GAMMA.T).astype(int)
    assert np.array_equal(symmetrize(top).Gamma, expected)
    for i, j in [(0, 2), (1, 3), (1, 4), (2, 3)]:
        assert symmetrize(top).Gamma[i, j] == 1
        assert symmetrize(top).Gamma[j, i] == 1


def test_symmetrize_idempotent_and_monotone():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        gamma = (rng.random((n, n)) < 0.4).astype(int)
        np.fill_diagonal(gamma, 1)
        top = Topology(gamma)
        once = symmetrize(top)
        twice = symmetrize(once)
        assert np.array_equal(once.Gamma, twice.Gamma)
        assert np.all(once.Gamma >= gamma)
    assert np.array_equal(symmetrize(Topology(np.eye(4, dtype=int))).Gamma, np.eye(4, dtype=int))


def test_incoming_neighbors_read_off_columns():
    top = Topology(EXAMPLE_GAMMA)
    assert top.incoming(0) == (0, 1, 2)
    assert top.incoming(1) == (0, 1, 4)
    assert top.incoming(2) == (2, 3)
    assert top.incoming(3) == (1, 3)
    assert top.incoming(4) == (4,)
    assert top.in_degree(4) == 1


def test_uniform_plan_complete_graph():
    plan = build_uniform_gossip_plan(Topology(np.ones((3, 3), dtype=int)))
    expected = 0.5 * (np.ones((3, 3)) - np.eye(3))
    assert np.allclose(plan.P, expected)


def test_uniform_plan_path_graph():
    gamma = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    plan = build_uniform_gossip_plan(Topology(gamma))
    assert np.allclose(plan.P, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])


def test_uniform_plan_isolated_node_errors():
    with pytest.raises(ValidationError, match="isolated"):
        build_uniform_gossip_plan(Topology(np.eye(3, dtype=int)))


def test_random_plans_row_stochastic_with_edge_support():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        gamma = (rng.random((n, n)) < 0.5).astype(int)
        np.fill_diagonal(gamma, 1)
        gamma |= gamma.T
        for i in range(n):
            if gamma[i].sum() == 1:
                j = (i + 1) % n
                gamma[i, j] = gamma[j, i] = 1
        top = Topology(gamma)
        plan = build_uniform_gossip_plan(top)
        assert np.all(np.abs(plan.P.sum(axis=1) - 1.0) <= 1e-12)
        assert validate_gossip_plan(plan, top) == []
        gsym = symmetrize(top).Gamma
        for i, j in plan.support():
            assert i != j and gsym[i, j] == 1


def test_gossip_plan_validation_catches_bad_support():
    gamma = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    plan = GossipPlan(np.array([[0, 0.5, 0.5], [1, 0, 0], [0, 1, 0]]))
    problems = validate_gossip_plan(plan, Topology(gamma))
    assert any("non-edge" in p for p in problems)


def test_state_model_validation():
    good = StateModel(np.eye(2), 0.1 * np.eye(2), np.eye(2))
    assert validate_state_model(good) == []
    asym = StateModel(np.eye(2), np.array([[0.1, 0.2], [0.0, 0.1]]), np.eye(2))
    assert any("symmetric" in v for v in validate_state_model(asym))
    # Q = 0 gives an uncontrollable noise channel
    degenerate = StateModel(np.eye(2), np.zeros((2, 2)), np.eye(2))
    assert any("controllable" in v for v in validate_state_model(degenerate))


def test_sensor_validation():
    model = StateModel(np.eye(2), 0.1 * np.eye(2), np.eye(2))
    good = SensorModel(0, np.eye(2), 0.5 * np.eye(2))
    assert validate_sensor(model, good) == []
    singular_r = SensorModel(0, np.eye(2), np.zeros((2, 2)))
    assert any("positive definite" in v for v in validate_sensor(model, singular_r))
    # C observes only the first coordinate of a decoupled A: not observable
    partial = SensorModel(1, np.array([[1.0, 0.0]]), np.eye(1))
    diag_model = StateModel(np.diag([1.0, 2.0]), 0.1 * np.eye(2), np.eye(2))
    assert any("observable" in v for v in validate_sensor(diag_model, partial))


def test_rank_checks_agree_with_bruteforce_stacked_ranks():
    rng = np.random.default_rng(17)
    for m in (2, 3):
        for _ in range(40):
            a = rng.standard_normal((m, m))
            c = rng.standard_normal((int(rng.integers(1, 3)), m))
            b = rng.standard_normal((m, m))
            obs_stack = np.vstack([c @ np.linalg.matrix_power(a, k) for k in range(m)])
            ctr_stack = np.hstack([np.linalg.matrix_power(a, k) @ b for k in range(m)])
            assert observability_rank(a, c) == np.linalg.matrix_rank(obs_stack)
            assert controllability_rank(a, b) == np.linalg.matrix_rank(ctr_stack)
