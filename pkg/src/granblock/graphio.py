"""Reading networks from edge lists, GML and Pajek files.

Every reader returns a :class:`NetworkSpec`: a binary directed arc set over
dense 0-based node ids.  Undirected input is stored with both orientations,
so the adjacency matrix of an undirected network is symmetric.
"""
from __future__ import annotations

import json
import re
import shlex
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "NetworkSpec",
    "ParseError",
    "parse_edge_list",
    "parse_gml",
    "parse_pajek",
    "read_network",
    "to_adjacency",
    "to_edge_list",
    "spec_to_dict",
    "spec_to_json",
]


class ParseError(ValueError):
    """Raised when a network file cannot be read."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class NetworkSpec:
    node_count: int
    directed: bool
    arcs: tuple = ()
    node_labels: Optional[tuple] = None
    node_tags: Optional[tuple] = None
    source: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise ValueError("node_count must be positive")
        arcs = set()
        for i, j in self.arcs:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"arc ({i}, {j}) outside [0, {n})")
            if i == j:
                raise ValueError(f"self-arc ({i}, {i})")
            arcs.add((i, j))
            if not self.directed:
                arcs.add((j, i))
        object.__setattr__(self, "arcs", tuple(sorted(arcs)))
        for name in ("node_labels", "node_tags"):
            values = getattr(self, name)
            if values is not None:
                values = tuple(str(v) for v in values)
                if len(values) != n:
                    raise ValueError(f"{name} must have length {n}")
                object.__setattr__(self, name, values)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def label(self, i: int) -> str:
        if self.node_labels is None:
            return str(i)
        return self.node_labels[i]


def to_adjacency(spec: NetworkSpec) -> np.ndarray:
    """Binary n x n adjacency matrix, ``a[i, j] = 1`` iff ``(i, j)`` is an arc."""
    a = np.zeros((spec.node_count, spec.node_count), dtype=np.uint8)
    if spec.arcs:
        idx = np.asarray(spec.arcs, dtype=np.intp)
        a[idx[:, 0], idx[:, 1]] = 1
    return a


# ---------------------------------------------------------------------------
# edge lists


_ORDER_PRAGMA = "#%nodes"


def parse_edge_list(text: str, directed: bool = True) -> NetworkSpec:
    """Parse whitespace-separated arc pairs, one per line.

    Tokens are mapped to node ids in order of first appearance.  Lines
    starting with ``#`` are comments, except the ``#%nodes`` pragma written
    by :func:`to_edge_list`, which fixes the node order up front (and so
    carries isolated nodes through a round trip).
    """
    index: dict = {}
    arcs = []

    def node(tok):
        if tok not in index:
            index[tok] = len(index)
        return index[tok]

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(_ORDER_PRAGMA):
            for tok in line[len(_ORDER_PRAGMA):].split():
                node(tok)
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected two tokens, got {len(parts)}: {line!r}", lineno)
        if parts[0] == parts[1]:
            raise ParseError(f"self-loop on {parts[0]!r}", lineno)
        arcs.append((node(parts[0]), node(parts[1])))

    if not index:
        raise ParseError("no nodes found")
    labels = [None] * len(index)
    for tok, i in index.items():
        labels[i] = tok
    return NetworkSpec(len(index), directed, tuple(arcs), node_labels=tuple(labels))


def to_edge_list(spec: NetworkSpec) -> str:
    """Native edge-list text for ``spec``; arcs are always written directed."""
    labels = spec.node_labels
    usable = (
        labels is not None
        and len(set(labels)) == len(labels)
        and all(lab and not any(c.isspace() for c in lab) and not lab.startswith("#") for lab in labels)
    )
    tokens = list(labels) if usable else [str(i) for i in range(spec.node_count)]
    lines = [_ORDER_PRAGMA + " " + " ".join(tokens)]
    lines.extend(f"{tokens[i]} {tokens[j]}" for i, j in spec.arcs)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# GML


_GML_TOKEN = re.compile(r'\s*(?:(\[)|(\])|"([^"]*)"|([^\s\[\]"]+))', re.S)


def _gml_tokens(text):
    pos = 0
    line = 1
    while pos < len(text):
        m = _GML_TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                return
            raise ParseError("unreadable GML token", line)
        line += text.count("\n", pos, m.end())
        pos = m.end()
        if m.group(1):
            yield "[", None, line
        elif m.group(2):
            yield "]", None, line
        elif m.group(3) is not None:
            yield "str", m.group(3), line
        elif m.group(4) is not None:
            yield "atom", m.group(4), line


def _gml_atom(tok):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _gml_tree(text):
    """Nested list of (key, value) pairs; list values are sub-blocks."""
    stack = [[]]
    key = None
    key_line = 0
    for kind, value, line in _gml_tokens(text):
        if kind == "[":
            if key is None:
                raise ParseError("'[' without a key", line)
            block = []
            stack[-1].append((key, block))
            stack.append(block)
            key = None
        elif kind == "]":
            if key is not None:
                raise ParseError(f"key {key!r} has no value", line)
            if len(stack) == 1:
                raise ParseError("unbalanced ']'", line)
            stack.pop()
        elif key is None:
            if kind == "str":
                raise ParseError("string where a key was expected", line)
            key, key_line = value, line
        else:
            stack[-1].append((key, value if kind == "str" else _gml_atom(value)))
            key = None
    if key is not None:
        raise ParseError(f"key {key!r} has no value", key_line)
    if len(stack) != 1:
        raise ParseError("unbalanced '[': missing ']'")
    return stack[0]


def parse_gml(text: str) -> NetworkSpec:
    """Parse the node/edge subset of GML.

    ``label`` fills node_labels and ``value`` fills node_tags.  Self-loops are
    dropped with a warning since public corpora occasionally contain them.
    """
    tree = _gml_tree(text)
    graphs = [v for k, v in tree if k == "graph" and isinstance(v, list)]
    if not graphs:
        raise ParseError("no graph block")
    graph = graphs[0]
    directed = False
    ids, labels, tags = [], [], []
    edges = []
    for key, value in graph:
        if key == "directed":
            directed = bool(int(value))
        elif key == "node" and isinstance(value, list):
            attrs = dict(value)
            if "id" not in attrs:
                raise ParseError("node without id")
            ids.append(attrs["id"])
            labels.append(attrs.get("label"))
            tags.append(attrs.get("value"))
        elif key == "edge" and isinstance(value, list):
            attrs = dict(value)
            if "source" not in attrs or "target" not in attrs:
                raise ParseError("edge without source/target")
            edges.append((attrs["source"], attrs["target"]))

    if not ids:
        raise ParseError("graph has no nodes")
    index = {}
    for node_id in ids:
        if node_id in index:
            raise ParseError(f"duplicate node id {node_id!r}")
        index[node_id] = len(index)
    arcs = []
    loops = 0
    for s, t in edges:
        if s not in index or t not in index:
            missing = s if s not in index else t
            raise ParseError(f"edge references unknown node id {missing!r}")
        if s == t:
            loops += 1
            continue
        arcs.append((index[s], index[t]))
    if loops:
        warnings.warn(f"dropped {loops} self-loop(s) from GML input", stacklevel=2)

    node_labels = None
    if any(lab is not None for lab in labels):
        node_labels = tuple(str(lab) if lab is not None else str(i) for i, lab in zip(ids, labels))
    node_tags = None
    if any(tag is not None for tag in tags):
        node_tags = tuple("" if tag is None else str(tag) for tag in tags)
    return NetworkSpec(len(ids), directed, tuple(arcs), node_labels, node_tags)


# ---------------------------------------------------------------------------
# Pajek


def parse_pajek(text: str) -> NetworkSpec:
    """Parse ``*Vertices`` with ``*Arcs``/``*Edges`` sections (1-based ids).

    Weights and coordinates are ignored.  The network is directed if any
    ``*Arcs`` section is present; ``*Edges`` rows contribute both orientations.
    """
    n = None
    labels = None
    section = None
    arcs = set()
    has_arcs = False
    loops = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("*"):
            head = line.split()
            name = head[0].lower()
            if name == "*vertices":
                if len(head) < 2:
                    raise ParseError("*Vertices without a count", lineno)
                try:
                    n = int(head[1])
                except ValueError:
                    raise ParseError(f"bad vertex count {head[1]!r}", lineno) from None
                labels = [str(i + 1) for i in range(n)]
                section = "vertices"
            elif name in ("*arcs", "*edges"):
                if n is None:
                    raise ParseError(f"{head[0]} before *Vertices", lineno)
                section = name[1:]
                has_arcs = has_arcs or section == "arcs"
            else:
                raise ParseError(f"unsupported section {head[0]}", lineno)
            continue
        if section is None:
            raise ParseError("data before *Vertices", lineno)
        try:
            parts = shlex.split(line)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if section == "vertices":
            v = _pajek_index(parts[0], n, lineno)
            if len(parts) > 1:
                labels[v] = parts[1]
            continue
        if len(parts) < 2:
            raise ParseError("expected a vertex pair", lineno)
        i = _pajek_index(parts[0], n, lineno)
        j = _pajek_index(parts[1], n, lineno)
        if i == j:
            loops += 1
            continue
        arcs.add((i, j))
        if section == "edges":
            arcs.add((j, i))
    if n is None:
        raise ParseError("missing *Vertices header")
    if loops:
        warnings.warn(f"dropped {loops} self-loop(s) from Pajek input", stacklevel=2)
    return NetworkSpec(n, has_arcs, tuple(sorted(arcs)), node_labels=tuple(labels))


def _pajek_index(token, n, lineno):
    try:
        v = int(token)
    except ValueError:
        raise ParseError(f"bad vertex index {token!r}", lineno) from None
    if not 1 <= v <= n:
        raise ParseError(f"vertex {v} outside 1..{n}", lineno)
    return v - 1


# ---------------------------------------------------------------------------


FORMATS = ("edgelist", "gml", "pajek")


def read_network(path, fmt: str, directed: bool = False) -> NetworkSpec:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "edgelist":
        spec = parse_edge_list(text, directed)
    elif fmt == "gml":
        spec = parse_gml(text)
    elif fmt == "pajek":
        spec = parse_pajek(text)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return NetworkSpec(spec.node_count, spec.directed, spec.arcs, spec.node_labels,
                       spec.node_tags, source=str(path))


def spec_to_dict(spec: NetworkSpec) -> dict:
    return {
        "node_count": spec.node_count,
        "directed": spec.directed,
        "arcs": [list(a) for a in spec.arcs],
        "node_labels": list(spec.node_labels) if spec.node_labels is not None else None,
        "node_tags": list(spec.node_tags) if spec.node_tags is not None else None,
    }


def spec_to_json(spec: NetworkSpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True)
