import numpy as np
import pytest

from conftest import random_instance, two_cliques
from granblock.blocking import BlockingAssignment, BlockModel, EMConfig, fit
from granblock.coupling import block_rules, compute_couplings, node_rules, rules_to_csv
from oracles import naive_couplings


def _fitted(a, K, seed=0, block_of=None):
    b = BlockingAssignment(block_of) if block_of else BlockingAssignment.singletons(len(a))
    return b, fit(a, b, K, EMConfig(seed=seed, restarts=4))


@pytest.mark.parametrize("seed", range(10))
def test_couplings_match_naive(seed):
    rng = np.random.default_rng(seed)
    a, block_of = random_instance(rng, 6, 3, L=4)
    b, m = _fitted(a, 3, seed, block_of)
    c = compute_couplings(a, b, m)
    y = c.clusters.tolist()
    P, Q, Phi, Psi = naive_couplings(m.theta.tolist(), m.delta.tolist(), y, m.K)
    assert np.allclose(c.P, P, atol=1e-12) and np.allclose(c.Q, Q, atol=1e-12)
    assert np.allclose(c.Phi, Phi, atol=1e-12) and np.allclose(c.Psi, Psi, atol=1e-12)


def test_single_cluster_phi_is_density():
    rng = np.random.default_rng(2)
    a, _ = random_instance(rng, 10, 1, density=0.3)
    b, m = _fitted(a, 1)
    c = compute_couplings(a, b, m)
    assert c.Phi[0, 0] == pytest.approx(a.sum() / 100, abs=1e-5)
    rules = block_rules(c, 0)
    assert len(rules) == 1 and rules[0].strength == pytest.approx(a.sum() / 100, abs=1e-5)


def test_two_cliques_phi():
    a = two_cliques(4)
    b, m = _fitted(a, 2)
    c = compute_couplings(a, b, m)
    # each clique member is hit by 3 of the 4 members: within mean 3/4, across 0
    assert np.allclose(np.diag(c.Phi), 0.75, atol=1e-5)
    assert np.allclose(c.Phi[~np.eye(2, dtype=bool)], 0.0, atol=1e-5)
    for p in range(2):
        rules = block_rules(c, p)
        assert rules[0].consequent == p and rules[0].strength > rules[1].strength


def test_symmetric_network_p_equals_q():
    rng = np.random.default_rng(9)
    a, _ = random_instance(rng, 12, 3, symmetric=True)
    b, m = _fitted(a, 3)
    c = compute_couplings(a, b, m)
    assert np.allclose(c.P, c.Q, atol=1e-9)


def test_node_rules_order_and_self_exclusion():
    a = np.array([[0, 1, 1, 0], [1, 0, 0, 0], [1, 0, 0, 1], [0, 0, 1, 0]])
    b = BlockingAssignment.singletons(4)
    gamma = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    theta = np.array([[0.2, 0.5, 0.5, 0.1], [0.5, 0.0, 0.3, 0.5]])
    m = BlockModel(2, gamma, theta, theta.copy(), np.array([0.5, 0.5]))
    c = compute_couplings(a, b, m)
    rules = node_rules(c, 0)
    # hand-sorted row P[0] = theta[0] without node 0: (1, .5), (2, .5), (3, .1)
    assert [r.consequent for r in rules] == [1, 2, 3]
    assert [r.strength for r in rules] == [0.5, 0.5, 0.1]
    assert node_rules(c, 0, top=0) == []
    assert len(node_rules(c, 0, top=2)) == 2


def test_zero_row_rules_order_by_id():
    a = np.zeros((4, 4))
    b = BlockingAssignment.singletons(4)
    m = BlockModel(1, np.ones((4, 1)), np.zeros((1, 4)), np.zeros((1, 4)), np.ones(1))
    rules = node_rules(compute_couplings(a, b, m), 2)
    assert [r.consequent for r in rules] == [0, 1, 3]
    assert all(r.strength == 0.0 for r in rules)


def test_rules_csv_header():
    a = two_cliques(3)
    b, m = _fitted(a, 2)
    text = rules_to_csv(block_rules(compute_couplings(a, b, m), 0))
    assert text.splitlines()[0] == "kind,antecedent,consequent,strength,antecedent_label,consequent_label"
    assert len(text.splitlines()) == 3


def test_soft_couplings_close_to_hard_when_confident():
    a = two_cliques(4)
    b, m = _fitted(a, 2)
    hard = compute_couplings(a, b, m)
    soft = compute_couplings(a, b, m, soft=True)
    assert np.allclose(hard.Phi, soft.Phi, atol=1e-4)
