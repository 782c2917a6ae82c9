import math

import numpy as np
import pytest

from conftest import random_instance, two_cliques
from granblock.blocking import (BlockingAssignment, BlockModel, EMConfig, e_step, fit,
                                log_likelihood, m_step)
from oracles import (best_two_partition, naive_e_step, naive_log_likelihood, naive_m_step)


def _model(theta, delta, omega):
    theta, delta, omega = (np.asarray(x, dtype=float) for x in (theta, delta, omega))
    K = len(omega)
    return BlockModel(K, np.full((1, K), 1.0 / K), theta, delta, omega)


def _random_model(rng, n, K):
    theta = rng.uniform(0.05, 0.95, (K, n))
    delta = rng.uniform(0.05, 0.95, (K, n))
    omega = rng.dirichlet(np.ones(K))
    return theta, delta, omega


# --- blocking assignment -------------------------------------------------------


def test_blocking_granularity_and_members():
    b = BlockingAssignment((0, 0, 1, 2, 2, 2))
    assert b.n == 6 and b.L == 3
    assert b.g == 2
    assert list(b.sizes) == [2, 1, 3]
    assert b.members(2) == [3, 4, 5]
    assert b.indicator().sum(axis=1).tolist() == [1] * 6


def test_blocking_rejects_gaps():
    with pytest.raises(ValueError):
        BlockingAssignment((0, 2))


# --- log-likelihood --------------------------------------------------------------


def test_loglik_zero_matrix_is_zero():
    a = np.zeros((2, 2))
    m = _model([[0.0, 0.0]], [[0.0, 0.0]], [1.0])
    assert log_likelihood(a, BlockingAssignment.singletons(2), m) == 0.0


def test_loglik_closed_form_pair():
    a = np.array([[0, 1], [1, 0]])
    m = _model([[0.5, 0.5]], [[0.5, 0.5]], [1.0])
    ll = log_likelihood(a, BlockingAssignment.singletons(2), m)
    assert ll == pytest.approx(2 * 4 * math.log(0.5), abs=1e-12)
    assert round(ll, 4) == -5.5452


@pytest.mark.parametrize("seed", range(10))
def test_loglik_matches_naive(seed):
    rng = np.random.default_rng(seed)
    n, K = 5, 3
    a, block_of = random_instance(rng, n, K)
    theta, delta, omega = _random_model(rng, n, K)
    got = log_likelihood(a, BlockingAssignment(block_of), _model(theta, delta, omega))
    want = naive_log_likelihood(a.tolist(), block_of, theta.tolist(), delta.tolist(), omega.tolist())
    assert got == pytest.approx(want, abs=1e-9)


# --- E-step ---------------------------------------------------------------------


def test_e_step_single_cluster_is_all_ones():
    rng = np.random.default_rng(1)
    a, block_of = random_instance(rng, 6, 1, L=3)
    theta, delta, omega = _random_model(rng, 6, 1)
    g = e_step(a, BlockingAssignment(block_of), _model(theta, delta, [1.0]))
    assert np.allclose(g, np.ones((3, 1)))


def test_e_step_symmetric_tie():
    # node 0 is isolated; the two clusters differ only on nodes 1 and 2 where it has no arcs
    a = np.zeros((3, 3))
    theta = np.array([[0.5, 0.2, 0.8], [0.5, 0.8, 0.2]])
    # mirror the profile so that ln f sums agree for node 0
    delta = theta.copy()
    m = _model(theta, delta, [0.5, 0.5])
    g = e_step(a, BlockingAssignment.singletons(3), m)
    assert g[0] == pytest.approx([0.5, 0.5], abs=1e-9)


def test_e_step_four_node_two_block():
    a = np.array([[0, 1, 0, 0], [1, 0, 1, 0], [0, 0, 0, 1], [1, 0, 1, 0]])
    block_of = (0, 0, 1, 1)
    theta = np.array([[0.3, 0.7, 0.2, 0.4], [0.6, 0.1, 0.5, 0.9]])
    delta = np.array([[0.2, 0.6, 0.3, 0.5], [0.4, 0.3, 0.8, 0.1]])
    omega = np.array([0.35, 0.65])
    got = e_step(a, BlockingAssignment(block_of), _model(theta, delta, omega))
    want = naive_e_step(a.tolist(), block_of, theta.tolist(), delta.tolist(), omega.tolist())
    assert np.allclose(got, want, atol=1e-12)


def test_e_step_sampled_uses_representatives():
    rng = np.random.default_rng(3)
    a, block_of = random_instance(rng, 6, 2, L=3)
    theta, delta, omega = _random_model(rng, 6, 2)
    b = BlockingAssignment(block_of)
    reps = [b.members(k)[-1] for k in range(3)]
    got = e_step(a, b, _model(theta, delta, omega), mode="sampled", representatives=reps)
    single = naive_e_step(a.tolist(), list(range(6)), theta.tolist(), delta.tolist(), omega.tolist())
    assert np.allclose(got, [single[r] for r in reps], atol=1e-12)


# --- M-step ---------------------------------------------------------------------


def test_m_step_single_cluster_degrees():
    rng = np.random.default_rng(4)
    a, _ = random_instance(rng, 7, 1, density=0.4)
    b = BlockingAssignment.singletons(7)
    theta, delta, omega, empty = m_step(a, b, np.ones((7, 1)), epsilon=0.0)
    assert np.allclose(theta[0], a.sum(axis=0) / 7)
    assert np.allclose(delta[0], a.sum(axis=1) / 7)
    assert omega.tolist() == [1.0] and empty == ()


def test_m_step_symmetric_gives_equal_profiles():
    rng = np.random.default_rng(5)
    a, block_of = random_instance(rng, 8, 3, L=4, symmetric=True)
    gamma = rng.dirichlet(np.ones(3), size=4)
    theta, delta, _, _ = m_step(a, BlockingAssignment(block_of), gamma)
    assert np.allclose(theta, delta, atol=1e-12)


def test_m_step_hard_gamma_column_means():
    a = two_cliques(3)
    b = BlockingAssignment((0, 0, 0, 1, 1, 1))
    theta, _, omega, _ = m_step(a, b, np.array([[1.0, 0.0], [0.0, 1.0]]), epsilon=0.0)
    # column means of the member rows, by hand: each member of a 3-clique is hit by 2 of 3
    assert np.allclose(theta[0], [2 / 3] * 3 + [0] * 3)
    assert np.allclose(theta[1], [0] * 3 + [2 / 3] * 3)
    assert omega.tolist() == [0.5, 0.5]


def test_m_step_empty_cluster():
    a = two_cliques(2)
    theta, delta, omega, empty = m_step(a, BlockingAssignment.singletons(4),
                                        np.array([[1.0, 0.0]] * 4))
    assert empty == (1,)
    assert omega[1] == 0.0 and np.allclose(theta[1], 0.5) and np.allclose(delta[1], 0.5)


@pytest.mark.parametrize("seed", range(10))
def test_m_step_matches_naive(seed):
    rng = np.random.default_rng(100 + seed)
    a, block_of = random_instance(rng, 6, 3, L=4)
    gamma = rng.dirichlet(np.ones(3), size=4)
    got = m_step(a, BlockingAssignment(block_of), gamma, 1e-6)
    want = naive_m_step(a.tolist(), block_of, gamma.tolist(), 1e-6)
    for x, y in zip(got[:3], want):
        assert np.allclose(x, y, atol=1e-12)


# --- fit ------------------------------------------------------------------------


def test_fit_single_cluster_closed_form():
    rng = np.random.default_rng(6)
    a, _ = random_instance(rng, 9, 1)
    m = fit(a, BlockingAssignment.singletons(9), 1, EMConfig(restarts=2))
    assert m.em_iterations <= 2
    theta = np.clip(a.sum(axis=0) / 9, 1e-6, 1 - 1e-6)
    delta = np.clip(a.sum(axis=1) / 9, 1e-6, 1 - 1e-6)
    want = naive_log_likelihood(a.tolist(), list(range(9)), [theta.tolist()], [delta.tolist()], [1.0])
    assert m.log_likelihood == pytest.approx(want, abs=1e-9)


def test_two_cliques_is_optimal_partition():
    a = two_cliques(4)
    ll, labels = best_two_partition(a.tolist())
    assert labels in ([0] * 4 + [1] * 4, [1] * 4 + [0] * 4)


@pytest.mark.parametrize("seed", range(10))
def test_fit_recovers_two_cliques(seed):
    a = two_cliques(4)
    m = fit(a, BlockingAssignment.singletons(8), 2, EMConfig(seed=seed))
    h = m.hard_assignment
    assert len(set(h[:4])) == 1 and len(set(h[4:])) == 1 and h[0] != h[4]


def test_em_trace_non_decreasing():
    # one node per block: the E-step is exact Bayes and EM cannot go downhill
    for seed in range(30):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 20))
        a, _ = random_instance(rng, n, 3)
        m = fit(a, BlockingAssignment.singletons(n), 3,
                EMConfig(seed=seed, restarts=1, tolerance=1e-10))
        assert np.all(np.diff(m.trace) >= -1e-9)


def test_fit_is_prefix_stable():
    rng = np.random.default_rng(7)
    a, _ = random_instance(rng, 10, 2)
    b = BlockingAssignment.singletons(10)
    one = fit(a, b, 3, EMConfig(restarts=1, seed=2))
    many = fit(a, b, 3, EMConfig(restarts=4, seed=2))
    assert many.log_likelihood >= one.log_likelihood - 1e-12


def test_em_config_validation():
    with pytest.raises(ValueError):
        EMConfig(restarts=0)
    with pytest.raises(ValueError):
        EMConfig(e_step_mode="fast")
    with pytest.raises(ValueError):
        EMConfig(tolerance=-1.0)
