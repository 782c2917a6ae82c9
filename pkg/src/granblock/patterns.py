"""Pattern recognition on reduced block graphs.

A reduced block graph keeps the block couplings ``Phi[p, q]`` that stand out
from the background; the background level is found by splitting the sorted
couplings at unusually large gaps.  Patterns are then matched on the reduced
graph:

* community: a self-coupled block
* hub / authority: a community coupling with / coupled by at least
  ``hub_min`` other blocks
* outlier: a block without self-coupling that a hub couples with, or that
  couples with an authority
* bow tie: a core ``b`` coupled by the left wing and coupling with the right
  wing, with no coupling between the wings
* multipartite: blocks without self-coupling, every pair coupled in at least
  one direction; two-block instances are reported as bipartite

Each kind keeps only maximal instances: an instance whose block set is
contained in a stored one of the same kind is discarded.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import chain

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "ReducedBlockGraph",
    "PatternInstance",
    "PatternReservoirs",
    "gap_groups",
    "compute_threshold",
    "reduce",
    "match_patterns",
    "is_valid",
    "to_dot",
]

KINDS = ("community", "authority", "hub", "outlier", "bow_tie", "bipartite", "multipartite")


def gap_groups(values) -> list:
    """Split values, sorted non-increasingly, at remarkable gaps.

    A gap is remarkable when it exceeds the mean gap by more than one
    standard deviation.  With four or more values and no remarkable gap the
    largest gap is used, so that at least one split is made whenever the
    values are not all equal.
    """
    s = np.sort(np.asarray(values, dtype=float).ravel())[::-1]
    if s.size < 2:
        return [s]
    gaps = s[:-1] - s[1:]
    cut = gaps.mean() + gaps.std()
    splits = np.flatnonzero(gaps > cut)
    if splits.size == 0 and s.size >= 4 and gaps.max() > 0:
        splits = np.array([int(np.argmax(gaps))])
    return np.split(s, splits + 1)


def compute_threshold(Phi) -> float:
    """Largest coupling in the gap group with the smallest mean.

    Couplings strictly above the returned value survive reduction.  When all
    couplings are equal there is no background to cut: the threshold is put
    one ulp below the common value (so positive couplings survive), and at
    zero for an all-zero matrix.
    """
    groups = gap_groups(Phi)
    if len(groups) == 1:
        v = float(groups[0][0])
        logger.info("degenerate coupling spectrum: no remarkable gap")
        return float(np.nextafter(v, -np.inf)) if v > 0 else 0.0
    lowest = min(groups, key=lambda grp: grp.mean())
    return float(lowest.max())


@dataclass(frozen=True)
class ReducedBlockGraph:
    K: int
    arcs: frozenset
    threshold: float

    @property
    def self_coupled(self) -> tuple:
        return tuple((p, p) in self.arcs for p in range(self.K))

    def out_neighbors(self, p: int) -> set:
        return {q for (x, q) in self.arcs if x == p and q != p}

    def in_neighbors(self, p: int) -> set:
        return {x for (x, q) in self.arcs if q == p and x != p}

    def coupled(self, p: int, q: int) -> bool:
        return (p, q) in self.arcs or (q, p) in self.arcs


def reduce(couplings, threshold: float = None) -> ReducedBlockGraph:
    """Keep block couplings strictly above ``threshold`` (gap-derived by default).

    ``couplings`` may be a :class:`~granblock.coupling.CouplingMatrices` or a
    square ``Phi`` array.
    """
    Phi = np.asarray(getattr(couplings, "Phi", couplings), dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != Phi.shape[1]:
        raise ValueError("Phi must be square")
    if threshold is None:
        threshold = compute_threshold(Phi)
    K = Phi.shape[0]
    arcs = frozenset((p, q) for p in range(K) for q in range(K) if Phi[p, q] > threshold)
    return ReducedBlockGraph(K, arcs, float(threshold))


@dataclass(frozen=True)
class PatternInstance:
    """A matched pattern; ``blocks`` maps role names to sorted block tuples."""

    kind: str
    blocks: tuple
    layer_index: int = 1

    @property
    def roles(self) -> dict:
        return dict(self.blocks)

    @property
    def block_set(self) -> frozenset:
        r = self.roles
        if self.kind == "bow_tie":
            return frozenset(chain(r["core"], r["left"], r["right"]))
        if self.kind in ("bipartite", "multipartite"):
            return frozenset(r["members"])
        return frozenset(r["block"])

    def key(self) -> tuple:
        return tuple(b for _, b in self.blocks)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "layer": self.layer_index,
                "blocks": {role: list(ids) for role, ids in self.blocks}}


def _instance(kind, layer, **roles):
    return PatternInstance(kind, tuple((k, tuple(sorted(v))) for k, v in roles.items()), layer)


# bipartite and multipartite instances are maximal within one family
_FAMILY = {"bipartite": "partite", "multipartite": "partite"}


@dataclass
class PatternReservoirs:
    layer_index: int = 1
    reservoirs: dict = field(default_factory=lambda: {k: [] for k in KINDS})

    def add(self, inst: PatternInstance) -> bool:
        """Insert unless subsumed; drop stored instances the new one subsumes."""
        family = _FAMILY.get(inst.kind, inst.kind)
        peers = [(k, x) for k in KINDS if _FAMILY.get(k, k) == family for x in self.reservoirs[k]]
        new = inst.block_set
        if any(new <= x.block_set for _, x in peers):
            return False
        for k, x in peers:
            if x.block_set < new:
                self.reservoirs[k].remove(x)
        self.reservoirs[inst.kind].append(inst)
        return True

    def __getitem__(self, kind: str) -> list:
        return self.reservoirs[kind]

    def counts(self) -> dict:
        return {k: len(v) for k, v in self.reservoirs.items()}

    def all(self) -> list:
        return [x for k in KINDS for x in self.reservoirs[k]]

    def to_dict(self) -> dict:
        return {k: [x.to_dict() for x in v] for k, v in self.reservoirs.items()}


def _hubs(G, hub_min):
    sc = G.self_coupled
    return [p for p in range(G.K) if sc[p] and len(G.out_neighbors(p)) >= hub_min]


def _authorities(G, hub_min):
    sc = G.self_coupled
    return [p for p in range(G.K) if sc[p] and len(G.in_neighbors(p)) >= hub_min]


def _bow_ties(G, b):
    """Bow ties around core ``b`` whose wings cannot be extended."""
    left_ok = G.in_neighbors(b)
    right_ok = G.out_neighbors(b)
    cand = sorted(left_ok | right_ok)
    found = []
    left, right, skipped = [], [], []

    def conflict(x, side):
        return any(x == y or G.coupled(x, y) for y in side)

    def rec(t):
        if t == len(cand):
            if not left or not right:
                return
            for u in skipped:
                if (u in left_ok and not conflict(u, right)) or (u in right_ok and not conflict(u, left)):
                    return
            found.append((tuple(left), tuple(right)))
            return
        u = cand[t]
        if u in left_ok and not conflict(u, right):
            left.append(u)
            rec(t + 1)
            left.pop()
        if u in right_ok and not conflict(u, left):
            right.append(u)
            rec(t + 1)
            right.pop()
        skipped.append(u)
        rec(t + 1)
        skipped.pop()

    rec(0)
    return found


def _maximal_cliques(vertices, adjacent):
    """Bron-Kerbosch with pivoting over an undirected relation."""
    out = []

    def bk(r, p, x):
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: len(p & adjacent[u]))
        for v in sorted(p - adjacent[pivot]):
            bk(r | {v}, p & adjacent[v], x & adjacent[v])
            p = p - {v}
            x = x | {v}

    bk(set(), set(vertices), set())
    return out


def match_patterns(G: ReducedBlockGraph, layer_index: int = 1, hub_min: int = 2) -> PatternReservoirs:
    res = PatternReservoirs(layer_index)
    sc = G.self_coupled
    hubs = _hubs(G, hub_min)
    auths = _authorities(G, hub_min)
    cands = []
    for p in range(G.K):
        if sc[p]:
            cands.append(_instance("community", layer_index, block=[p]))
    cands += [_instance("authority", layer_index, block=[p], sources=sorted(G.in_neighbors(p)))
              for p in auths]
    cands += [_instance("hub", layer_index, block=[p], targets=sorted(G.out_neighbors(p)))
              for p in hubs]
    for p in range(G.K):
        if sc[p]:
            continue
        by_hub = [h for h in hubs if (h, p) in G.arcs]
        to_auth = [a for a in auths if (p, a) in G.arcs]
        if by_hub or to_auth:
            cands.append(_instance("outlier", layer_index, block=[p], hubs=by_hub, authorities=to_auth))

    ties = []
    for b in range(G.K):
        for left, right in _bow_ties(G, b):
            ties.append(_instance("bow_tie", layer_index, core=[b], left=left, right=right))
    cands += sorted(ties, key=PatternInstance.key)

    plain = [p for p in range(G.K) if not sc[p]]
    adjacent = {p: {q for q in plain if q != p and G.coupled(p, q)} for p in plain}
    for clique in _maximal_cliques(plain, adjacent) if plain else []:
        if len(clique) >= 2:
            kind = "bipartite" if len(clique) == 2 else "multipartite"
            cands.append(_instance(kind, layer_index, members=clique))

    for inst in cands:
        res.add(inst)
    for k in KINDS:
        res.reservoirs[k].sort(key=PatternInstance.key)
    return res


def is_valid(inst: PatternInstance, G: ReducedBlockGraph, hub_min: int = 2) -> bool:
    """Check an instance against its defining predicate on ``G``."""
    r = inst.roles
    sc = G.self_coupled
    if inst.kind in ("community", "hub", "authority", "outlier"):
        (p,) = r["block"]
        if inst.kind == "community":
            return sc[p]
        if inst.kind == "hub":
            return sc[p] and len(G.out_neighbors(p)) >= hub_min
        if inst.kind == "authority":
            return sc[p] and len(G.in_neighbors(p)) >= hub_min
        return not sc[p] and (
            any((h, p) in G.arcs for h in _hubs(G, hub_min))
            or any((p, a) in G.arcs for a in _authorities(G, hub_min)))
    if inst.kind == "bow_tie":
        (b,) = r["core"]
        left, right = set(r["left"]), set(r["right"])
        if not left or not right or b in left or b in right or left & right:
            return False
        if any((s, b) not in G.arcs for s in left) or any((b, s) not in G.arcs for s in right):
            return False
        return not any(G.coupled(x, y) for x in left for y in right)
    members = r["members"]
    if len(members) < 2 or (inst.kind == "bipartite") != (len(members) == 2):
        return False
    if any(sc[p] for p in members):
        return False
    return all(G.coupled(p, q) for i, p in enumerate(members) for q in members[i + 1:])


def to_dot(G: ReducedBlockGraph, Phi=None, sizes=None, name: str = "blocks") -> str:
    """Graphviz rendering of a reduced block graph (blocks numbered from 1)."""
    lines = [f"digraph {name} {{"]
    lines.append(f'  graph [threshold="{G.threshold!r}"];')
    for p in range(G.K):
        attrs = [f'label="B{p + 1}"']
        if sizes is not None:
            attrs.append(f"size={int(sizes[p])}")
        if G.self_coupled[p]:
            attrs.append("peripheries=2")
        lines.append(f"  b{p} [{', '.join(attrs)}];")
    for p, q in sorted(G.arcs):
        w = f' [weight="{float(Phi[p, q]):.6g}", label="{float(Phi[p, q]):.2f}"]' if Phi is not None else ""
        lines.append(f"  b{p} -> b{q}{w};")
    lines.append("}")
    return "\n".join(lines) + "\n"
