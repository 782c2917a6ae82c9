"""Nested layers: clusters of one layer become the blocks of the next."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .blocking import BlockingAssignment, BlockModel, EMConfig
from .coupling import CouplingMatrices, compute_couplings
from .selection import SelectionTrace, select_model

logger = logging.getLogger(__name__)

__all__ = ["HierarchyLayer", "Hierarchy", "build_hierarchy", "capsule"]


@dataclass
class HierarchyLayer:
    layer_index: int
    blocking: BlockingAssignment
    model: BlockModel
    trace: SelectionTrace
    couplings: CouplingMatrices
    clusters: np.ndarray  # dense node -> cluster map of this layer

    @property
    def K(self) -> int:
        """Number of non-empty clusters."""
        return int(self.clusters.max()) + 1

    @property
    def g(self):
        return self.blocking.g


@dataclass
class Hierarchy:
    layers: list = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, i) -> HierarchyLayer:
        return self.layers[i]


def capsule(blocking: BlockingAssignment, model: BlockModel):
    """Dense node -> cluster map of a fitted layer.

    Clusters that received no block are dropped and the remaining ids are
    renumbered in increasing order of the fitted cluster id.
    """
    raw = model.node_clusters(blocking)
    used = np.unique(raw)
    remap = np.full(model.K, -1)
    remap[used] = np.arange(used.size)
    return remap[raw]


def _compact(model: BlockModel, clusters_used) -> BlockModel:
    if clusters_used.size == model.K:
        return model
    keep = clusters_used
    gamma = model.responsibilities[:, keep]
    gamma = gamma / gamma.sum(axis=1, keepdims=True)
    omega = model.omega[keep] / model.omega[keep].sum()
    return dataclasses.replace(model, K=int(keep.size), responsibilities=gamma,
                               theta=model.theta[keep], delta=model.delta[keep], omega=omega,
                               empty_clusters=())


def build_hierarchy(a, config: EMConfig = None, patience: int = 3, max_layers: int = 10,
                    upper_e_step_mode: str = "sampled") -> Hierarchy:
    """Stack layers until the selected cluster count stops changing.

    Layer 1 puts every node in its own block.  Layer ``i + 1`` takes the
    clusters of layer ``i`` as its blocks and selects a new model with
    granularity ``n / K_i``.  The first repeated cluster count is not stored;
    ``converged`` records it.  A layer with a single cluster ends the stack.
    """
    if max_layers < 1:
        raise ValueError("max_layers must be >= 1")
    config = config or EMConfig()
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    hierarchy = Hierarchy()
    blocking = BlockingAssignment.singletons(n)
    while True:
        index = len(hierarchy.layers) + 1
        cfg = config if index == 1 else dataclasses.replace(config, e_step_mode=upper_e_step_mode)
        model, trace = select_model(a, blocking, cfg, patience)
        clusters = capsule(blocking, model)
        model = _compact(model, np.unique(model.hard_assignment))
        K = int(clusters.max()) + 1
        logger.info("layer %d: g=%s, K=%d", index, blocking.g, K)
        if hierarchy.layers and K == hierarchy.layers[-1].K:
            hierarchy.converged = True
            break
        layer = HierarchyLayer(index, blocking, model, trace,
                               compute_couplings(a, blocking, model), clusters)
        hierarchy.layers.append(layer)
        if K == 1:
            hierarchy.converged = True
            break
        if len(hierarchy.layers) >= max_layers:
            break
        blocking = BlockingAssignment(tuple(int(c) for c in clusters))
    return hierarchy
