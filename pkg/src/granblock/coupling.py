"""Node and block couplings of a fitted layer, and the rules read off them.

Node couplings copy the profile of a node's cluster (``P[i] = theta[y(i)]``).
Block couplings average those profiles over the members of the target
cluster: ``Phi[p, q]`` is the chance that a node of cluster ``p`` couples with
a uniformly drawn node of cluster ``q``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .blocking import BlockingAssignment, BlockModel

__all__ = ["CouplingMatrices", "AssociationRule", "compute_couplings", "node_rules", "block_rules",
           "rules_to_csv"]


@dataclass
class CouplingMatrices:
    P: np.ndarray
    Q: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    D: np.ndarray
    clusters: np.ndarray
    empty_clusters: tuple = ()

    @property
    def K(self) -> int:
        return self.Phi.shape[0]


@dataclass(frozen=True)
class AssociationRule:
    kind: str
    antecedent: int
    consequent: int
    strength: float
    antecedent_label: Optional[str] = None
    consequent_label: Optional[str] = None


def compute_couplings(a, blocking: BlockingAssignment, model: BlockModel,
                      soft: bool = False) -> CouplingMatrices:
    """Couplings implied by ``model``.

    With ``soft=False`` (the default) the cluster map is the hard assignment
    and ``D = diag(cluster sizes)``, so ``Phi = Theta (B Z) D^-1`` is an exact
    per-cluster column mean.  ``soft=True`` weights nodes by their block
    responsibilities instead; it is meant for diagnostics.
    """
    n = np.asarray(a).shape[0]
    if blocking.n != n:
        raise ValueError("blocking does not cover the adjacency")
    theta, delta = model.theta, model.delta
    K = model.K
    clusters = model.node_clusters(blocking)
    if soft:
        membership = np.asarray(model.responsibilities)[np.asarray(blocking.block_of)]
    else:
        membership = np.zeros((n, K))
        membership[np.arange(n), clusters] = 1.0
    d = membership.sum(axis=0)
    empty = tuple(int(k) for k in np.flatnonzero(d <= 0))
    inv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 0.0)
    Phi = (theta @ membership) * inv
    Psi = (delta @ membership) * inv
    return CouplingMatrices(
        P=theta[clusters],
        Q=delta[clusters],
        Phi=Phi,
        Psi=Psi,
        D=d,
        clusters=clusters,
        empty_clusters=empty,
    )


def _ranked(strengths, exclude=None):
    order = sorted((j for j in range(len(strengths)) if j != exclude),
                   key=lambda j: (-strengths[j], j))
    return order


def node_rules(c: CouplingMatrices, i: int, top: Optional[int] = None, labels=None) -> list:
    """Rules ``i -> j <p_ij>`` for every other node, strongest first."""
    n = c.P.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"node {i} outside [0, {n})")
    row = c.P[i]
    order = _ranked(row, exclude=i)
    if top is not None:
        order = order[:max(top, 0)]
    lab = (lambda k: labels[k]) if labels is not None else (lambda k: None)
    return [AssociationRule("node", i, j, float(row[j]), lab(i), lab(j)) for j in order]


def block_rules(c: CouplingMatrices, p: int) -> list:
    """Rules ``B_p -> B_q <phi_pq>`` for every block including ``p``."""
    if not 0 <= p < c.K:
        raise IndexError(f"block {p} outside [0, {c.K})")
    row = c.Phi[p]
    return [AssociationRule("block", p, q, float(row[q]), f"B{p + 1}", f"B{q + 1}")
            for q in _ranked(row)]


def rules_to_csv(rules) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "antecedent", "consequent", "strength", "antecedent_label", "consequent_label"])
    for r in rules:
        w.writerow([r.kind, r.antecedent, r.consequent, repr(r.strength),
                    r.antecedent_label or "", r.consequent_label or ""])
    return buf.getvalue()
