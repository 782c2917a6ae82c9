"""Seeded networks with planted block structure."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .blocking import BlockingAssignment
from .graphio import NetworkSpec

__all__ = ["PlantedSpec", "generate", "nested_plan", "ground_truth_json"]


@dataclass(frozen=True)
class PlantedSpec:
    block_sizes: tuple
    coupling_plan: tuple
    directed: bool = True
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("block sizes must be positive")
        plan = np.asarray(self.coupling_plan, dtype=float)
        if plan.shape != (len(sizes), len(sizes)):
            raise ValueError(f"coupling plan must be {len(sizes)} x {len(sizes)}")
        if not np.all((plan >= 0) & (plan <= 1)):
            raise ValueError("coupling probabilities must lie in [0, 1]")
        if not self.directed and not np.array_equal(plan, plan.T):
            raise ValueError("an undirected plan must be symmetric")
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "coupling_plan", tuple(tuple(float(x) for x in row) for row in plan))


def generate(spec: PlantedSpec):
    """Draw a network from ``spec``; returns ``(NetworkSpec, BlockingAssignment)``.

    Arc ``i -> j`` appears with probability ``plan[block(i)][block(j)]``.  In
    undirected mode each unordered pair is drawn once.
    """
    block = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    n = block.size
    plan = np.asarray(spec.coupling_plan)
    prob = plan[block[:, None], block[None, :]]
    u = np.random.default_rng(spec.seed).random((n, n))
    hit = u < prob
    np.fill_diagonal(hit, False)
    if not spec.directed:
        hit = np.triu(hit, 1)
        hit = hit | hit.T
    arcs = tuple(zip(*(idx.tolist() for idx in np.nonzero(hit))))
    net = NetworkSpec(n, spec.directed, arcs)
    return net, BlockingAssignment(tuple(int(b) for b in block))


def nested_plan(branching, densities):
    """Coupling plan for leaf blocks nested under a tree of groups.

    ``branching`` lists the fan-out from the root down to the leaves, so
    ``(2, 2, 3)`` gives 12 leaves in 4 groups in 2 super-groups.
    ``densities[d]`` is the arc probability between two leaves whose lowest
    common ancestor lies ``d`` levels above them: ``densities[0]`` inside a
    leaf, ``densities[-1]`` between different root children.
    """
    branching = tuple(int(b) for b in branching)
    if len(densities) != len(branching) + 1:
        raise ValueError("need one density per tree level plus one for inside a leaf")
    K = int(np.prod(branching))
    leaf = np.arange(K)
    level = np.full((K, K), len(branching))
    for d in range(len(branching) - 1, -1, -1):
        span = int(np.prod(branching[len(branching) - d:]))
        level[(leaf[:, None] // span) == (leaf[None, :] // span)] = d
    return np.asarray(densities, dtype=float)[level]


def ground_truth_json(net: NetworkSpec, truth: BlockingAssignment, spec: PlantedSpec) -> str:
    return json.dumps({
        "node_count": net.node_count,
        "directed": spec.directed,
        "seed": spec.seed,
        "block_sizes": list(spec.block_sizes),
        "coupling_plan": [list(r) for r in spec.coupling_plan],
        "block_of": list(truth.block_of),
    }, sort_keys=True)
