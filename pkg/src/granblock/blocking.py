"""Granular blockmodel and its EM fit.

Nodes are grouped into inseparable blocks (a :class:`BlockingAssignment`);
blocks are clustered into ``K`` clusters whose members share a feedforward
profile ``theta[k, j]`` (probability of an arc to node ``j``), a feedback
profile ``delta[k, j]`` (probability of an arc from ``j``) and a prior
weight ``omega[k]``.  Responsibilities ``gamma[l, k]`` are kept per block.

The node score used throughout is::

    s[i, k] = sum_j ln f(theta[k, j], a[i, j]) + ln f(delta[k, j], a[j, i]) + ln omega[k]

with ``f(x, y) = x**y * (1 - x)**(1 - y)``; ``j == i`` is included.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import logsumexp, xlogy

logger = logging.getLogger(__name__)

__all__ = [
    "BlockingAssignment",
    "BlockModel",
    "EMConfig",
    "node_scores",
    "log_likelihood",
    "e_step",
    "m_step",
    "fit",
]


@dataclass(frozen=True)
class BlockingAssignment:
    """Map from nodes to blocks; block ids are dense in ``[0, L)``."""

    block_of: tuple

    def __post_init__(self):
        block_of = tuple(int(b) for b in self.block_of)
        if not block_of:
            raise ValueError("empty blocking")
        L = max(block_of) + 1
        if min(block_of) < 0 or len(set(block_of)) != L:
            raise ValueError("block ids must cover [0, L) with no empty block")
        object.__setattr__(self, "block_of", block_of)

    @classmethod
    def singletons(cls, n: int) -> "BlockingAssignment":
        return cls(tuple(range(n)))

    @classmethod
    def from_labels(cls, labels) -> "BlockingAssignment":
        """Dense relabeling of arbitrary labels, in order of first appearance."""
        index: dict = {}
        return cls(tuple(index.setdefault(lab, len(index)) for lab in labels))

    @property
    def n(self) -> int:
        return len(self.block_of)

    @property
    def L(self) -> int:
        return max(self.block_of) + 1

    @property
    def g(self) -> Fraction:
        return Fraction(self.n, self.L)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.block_of, minlength=self.L)

    def indicator(self) -> np.ndarray:
        """The n x L 0/1 matrix ``B``."""
        b = np.zeros((self.n, self.L))
        b[np.arange(self.n), self.block_of] = 1.0
        return b

    def members(self, block: int) -> list:
        return [i for i, b in enumerate(self.block_of) if b == block]


@dataclass(frozen=True)
class EMConfig:
    max_iterations: int = 500
    tolerance: float = 1e-6
    restarts: int = 8
    seed: int = 0
    epsilon: float = 1e-6
    e_step_mode: str = "exact"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if self.e_step_mode not in ("exact", "sampled"):
            raise ValueError(f"unknown e_step_mode {self.e_step_mode!r}")


@dataclass
class BlockModel:
    K: int
    responsibilities: np.ndarray
    theta: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    log_likelihood: float = 0.0
    em_iterations: int = 0
    trace: list = field(default_factory=list)
    empty_clusters: tuple = ()

    @property
    def hard_assignment(self) -> np.ndarray:
        """Per-block argmax of the responsibilities; ties go to the lower id."""
        return np.argmax(self.responsibilities, axis=1)

    def node_clusters(self, blocking: BlockingAssignment) -> np.ndarray:
        return self.hard_assignment[np.asarray(blocking.block_of)]


def _check_dims(a, blocking, theta, delta=None):
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"adjacency must be square, got {a.shape}")
    if blocking.n != n:
        raise ValueError(f"blocking covers {blocking.n} nodes, adjacency has {n}")
    if theta.ndim != 2 or theta.shape[1] != n:
        raise ValueError(f"theta must be K x {n}, got {theta.shape}")
    if delta is not None and delta.shape != theta.shape:
        raise ValueError("theta and delta shapes differ")


def node_scores(a, theta, delta, omega) -> np.ndarray:
    """Log joint ``ln P(v = i, y = k)`` for every node and cluster, shape n x K."""
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    with np.errstate(divide="ignore"):
        log_omega = np.log(np.asarray(omega, dtype=float))
    inside = (theta > 0) & (theta < 1) & (delta > 0) & (delta < 1)
    if inside.all():
        # sum_j a_ij ln x + (1 - a_ij) ln(1 - x) = a @ logit(x) + sum_j ln(1 - x)
        base = np.log1p(-theta).sum(axis=1) + np.log1p(-delta).sum(axis=1)
        s = a @ (np.log(theta) - np.log1p(-theta)).T
        s += a.T @ (np.log(delta) - np.log1p(-delta)).T
        s += base
    else:
        # boundary probabilities: 0 ln 0 = 0 must hold exactly
        out = xlogy(a[:, None, :], theta[None]) + xlogy(1 - a[:, None, :], 1 - theta[None])
        inc = xlogy(a.T[:, None, :], delta[None]) + xlogy(1 - a.T[:, None, :], 1 - delta[None])
        s = out.sum(axis=2) + inc.sum(axis=2)
    return s + log_omega


def _lse_rows(s):
    with np.errstate(invalid="ignore"):
        return logsumexp(s, axis=1)


def log_likelihood(a, blocking: BlockingAssignment, model: BlockModel) -> float:
    """``L(N | X, B_g)``: sum over nodes of the log mixture density."""
    a = np.asarray(a)
    _check_dims(a, blocking, model.theta, model.delta)
    return float(_lse_rows(node_scores(a, model.theta, model.delta, model.omega)).sum())


def _posterior(s):
    lse = _lse_rows(s)
    post = np.exp(s - lse[:, None])
    # rows where every cluster has zero mass cannot be normalized
    bad = ~np.isfinite(lse)
    if bad.any():
        post[bad] = 1.0 / s.shape[1]
    return post


def _block_average(post, blocking):
    b = blocking.indicator()
    return (b.T @ post) / blocking.sizes[:, None]


def _representatives(blocking, rng):
    members = [[] for _ in range(blocking.L)]
    for i, blk in enumerate(blocking.block_of):
        members[blk].append(i)
    return np.array([m[rng.integers(len(m))] for m in members])


def e_step(a, blocking: BlockingAssignment, model: BlockModel,
           mode: str = "exact", rng=None, representatives=None) -> np.ndarray:
    """Block responsibilities (L x K).

    ``exact`` averages the node posteriors within each block.  ``sampled``
    takes the posterior of one representative node per block, drawn
    uniformly with ``rng`` unless ``representatives`` is given.
    """
    a = np.asarray(a)
    _check_dims(a, blocking, model.theta, model.delta)
    s = node_scores(a, model.theta, model.delta, model.omega)
    return _responsibilities(s, blocking, mode, rng, representatives)


def _responsibilities(s, blocking, mode, rng=None, representatives=None):
    if mode == "exact":
        return _block_average(_posterior(s), blocking)
    if mode != "sampled":
        raise ValueError(f"unknown e_step mode {mode!r}")
    if representatives is None:
        representatives = _representatives(blocking, rng if rng is not None else np.random.default_rng())
    return _posterior(s[representatives])


def m_step(a, blocking: BlockingAssignment, gamma, epsilon: float = 1e-6):
    """Closed-form maximizer of the expected complete log-likelihood.

    Returns ``(theta, delta, omega, empty)`` where ``empty`` lists the
    clusters that received no responsibility mass; their profiles are set to
    0.5 and their weight to 0.
    """
    a = np.asarray(a, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = a.shape[0]
    if blocking.n != n or gamma.shape[0] != blocking.L:
        raise ValueError("responsibilities do not match the blocking")
    w = gamma[np.asarray(blocking.block_of)]  # n x K, node-level weights
    mass = w.sum(axis=0)
    empty = np.flatnonzero(mass <= 0)
    safe = np.where(mass > 0, mass, 1.0)
    theta = (w.T @ a) / safe[:, None]
    delta = (w.T @ a.T) / safe[:, None]
    omega = mass / n
    if empty.size:
        theta[empty] = 0.5
        delta[empty] = 0.5
        omega[empty] = 0.0
    np.clip(theta, epsilon, 1 - epsilon, out=theta)
    np.clip(delta, epsilon, 1 - epsilon, out=delta)
    return theta, delta, omega, tuple(int(k) for k in empty)


def _random_gamma(L, K, rng):
    # uniform on the simplex, row by row
    return rng.dirichlet(np.ones(K), size=L)


def _run_em(a, blocking, K, config, rng):
    gamma = _random_gamma(blocking.L, K, rng)
    sizes = blocking.sizes
    reps = None
    if config.e_step_mode == "sampled":
        reps = _representatives(blocking, rng)
    trace = []
    prev = None
    empty = ()
    for _ in range(config.max_iterations):
        theta, delta, omega, empty = m_step(a, blocking, gamma, config.epsilon)
        s = node_scores(a, theta, delta, omega)
        if reps is None:
            ll = float(_lse_rows(s).sum())
        else:
            ll = float((sizes * _lse_rows(s[reps])).sum())
        gamma = _responsibilities(s, blocking, config.e_step_mode, representatives=reps)
        trace.append(ll)
        if prev is not None and abs(ll - prev) < config.tolerance:
            break
        prev = ll
    model = BlockModel(K, gamma, theta, delta, omega, em_iterations=len(trace),
                       trace=trace, empty_clusters=empty)
    model.log_likelihood = log_likelihood(a, blocking, model)
    return model


def fit(a, blocking: BlockingAssignment, K: int, config: Optional[EMConfig] = None) -> BlockModel:
    """Best-of-``restarts`` EM fit with ``K`` clusters.

    Restart seeds are spawned from ``(config.seed, K)`` so that the first
    ``r`` restarts are identical whatever the total restart count.
    """
    config = config or EMConfig()
    a = np.asarray(a, dtype=float)
    if not 1 <= K <= blocking.L:
        raise ValueError(f"K must lie in [1, {blocking.L}], got {K}")
    if blocking.n != a.shape[0]:
        raise ValueError("blocking does not cover the adjacency")
    best = None
    seeds = np.random.SeedSequence([config.seed, K]).spawn(config.restarts)
    for r, ss in enumerate(seeds):
        model = _run_em(a, blocking, K, config, np.random.default_rng(ss))
        logger.debug("K=%d restart %d: ll=%.6f after %d iterations",
                     K, r, model.log_likelihood, model.em_iterations)
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    if best.empty_clusters:
        logger.info("K=%d: clusters %s ended empty", K, list(best.empty_clusters))
    return best
