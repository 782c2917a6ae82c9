"""Analysis pipeline and its serialized outputs."""
from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .blocking import EMConfig
from .coupling import block_rules, node_rules, rules_to_csv
from .graphio import NetworkSpec, read_network, to_adjacency
from .hierarchy import Hierarchy, build_hierarchy
from .patterns import match_patterns, reduce, to_dot
from .selection import node_map_coding_length, penalty

__all__ = ["SCHEMA_VERSION", "RunConfig", "InvariantError", "analyze", "build_report",
           "dump_report", "write_atomic", "pgm_bytes", "run_analyze"]

SCHEMA_VERSION = 1
EMIT_CHOICES = ("report_json", "trace_csv", "dot", "rules_csv", "matrix_pgm")


class InvariantError(RuntimeError):
    """An internal consistency check on the fitted hierarchy failed."""


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    input_format: str = "edgelist"
    directed: bool = False
    seed: int = 0
    restarts: int = 8
    tolerance: float = 1e-6
    max_iterations: int = 500
    patience: int = 3
    hub_min: int = 2
    max_layers: int = 10
    e_step_mode: str = "sampled"
    output_dir: str = "granblock-out"
    emit: tuple = ("report_json",)
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.input_format not in ("edgelist", "gml", "pajek"):
            raise ValueError(f"unknown input format {self.input_format!r}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.hub_min < 1:
            raise ValueError("hub_min must be >= 1")
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        unknown = set(self.emit) - set(EMIT_CHOICES)
        if unknown:
            raise ValueError(f"unknown outputs: {sorted(unknown)}")
        object.__setattr__(self, "emit", tuple(sorted(set(self.emit))))
        self.em_config()  # validates the EM fields

    def em_config(self) -> EMConfig:
        return EMConfig(max_iterations=self.max_iterations, tolerance=self.tolerance,
                        restarts=self.restarts, seed=self.seed, epsilon=self.epsilon,
                        e_step_mode="exact")


def analyze(spec: NetworkSpec, config: RunConfig) -> Hierarchy:
    a = to_adjacency(spec)
    h = build_hierarchy(a, config.em_config(), config.patience, config.max_layers,
                        upper_e_step_mode=config.e_step_mode)
    _check(h, spec.node_count)
    return h


def _check(h: Hierarchy, n: int):
    prev = None
    for layer in h.layers:
        gamma = layer.model.responsibilities
        if not np.allclose(gamma.sum(axis=1), 1.0, atol=1e-9):
            raise InvariantError(f"layer {layer.layer_index}: responsibilities are not stochastic")
        if layer.g * layer.blocking.L != n:
            raise InvariantError(f"layer {layer.layer_index}: g * L != n")
        if prev is not None:
            if tuple(prev.clusters) != layer.blocking.block_of:
                raise InvariantError(f"layer {layer.layer_index}: blocks do not capsule clusters")
            if layer.K > prev.K:
                raise InvariantError(f"layer {layer.layer_index}: cluster count grew")
        prev = layer


def _floats(x):
    return [[float(v) for v in row] for row in np.asarray(x)]


def build_report(spec: NetworkSpec, h: Hierarchy, config: RunConfig, rule_samples: int = 5) -> dict:
    n = spec.node_count
    layers = []
    for layer in h.layers:
        c = layer.couplings
        G = reduce(c)
        patterns = match_patterns(G, layer.layer_index, config.hub_min)
        blocks = []
        for k in range(layer.K):
            members = [int(i) for i in np.flatnonzero(layer.clusters == k)]
            blocks.append({"id": k, "size": len(members), "members": members,
                           "labels": [spec.label(i) for i in members]})
        samples = []
        if layer.layer_index == 1:
            for blk in blocks:
                i = blk["members"][0]
                samples.extend(dataclasses.asdict(r) for r in
                               node_rules(c, i, rule_samples, spec.node_labels))
        g = layer.g
        layers.append({
            "layer": layer.layer_index,
            "K": layer.K,
            "g": {"numerator": g.numerator, "denominator": g.denominator, "value": float(g)},
            "log_likelihood": float(layer.model.log_likelihood),
            "penalty": penalty(layer.K, g),
            "em_iterations": layer.model.em_iterations,
            "selection": {
                "chosen_K": layer.trace.chosen_K,
                "stopped_early": layer.trace.stopped_early,
                "entries": layer.trace.to_rows(layer.layer_index),
            },
            "blocks": blocks,
            "Phi": _floats(c.Phi),
            "Psi": _floats(c.Psi),
            "threshold": G.threshold,
            "reduced_arcs": [list(a) for a in sorted(G.arcs)],
            "patterns": patterns.to_dict(),
            "block_rules": [[dataclasses.asdict(r) for r in block_rules(c, p)] for p in range(layer.K)],
            "node_rule_samples": samples,
        })
    # where files live is not part of the analysis, so reports compare across directories
    cfg = dataclasses.asdict(config)
    cfg["emit"] = list(cfg["emit"])
    cfg["input_path"] = os.path.basename(config.input_path)
    del cfg["output_dir"]
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": {
            "source": os.path.basename(config.input_path),
            "format": config.input_format,
            "node_count": n,
            "arc_count": spec.arc_count,
            "directed": spec.directed,
            "node_map_coding_length": node_map_coding_length(n),
        },
        "config": cfg,
        "seed": config.seed,
        "hierarchy": {"converged": h.converged, "layers": layers},
    }


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def write_atomic(path, data):
    """Write to a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def pgm_bytes(a, clusters) -> bytes:
    """Binary PGM of the adjacency with nodes grouped by cluster.

    Arcs are black; the first row and column of each cluster are drawn grey.
    """
    a = np.asarray(a)
    order = np.argsort(clusters, kind="stable")
    m = a[np.ix_(order, order)]
    img = np.full(m.shape, 255, dtype=np.uint8)
    starts = np.flatnonzero(np.diff(np.asarray(clusters)[order]) != 0) + 1
    img[starts, :] = 200
    img[:, starts] = 200
    img[m > 0] = 0
    n = a.shape[0]
    return f"P5\n{n} {n}\n255\n".encode() + img.tobytes()


def run_analyze(config: RunConfig):
    """Read, analyze and write every requested artifact; returns the report."""
    spec = read_network(config.input_path, config.input_format, config.directed)
    h = analyze(spec, config)
    report = build_report(spec, h, config)
    out = config.output_dir
    if "report_json" in config.emit:
        write_atomic(os.path.join(out, "report.json"), dump_report(report))
    if "trace_csv" in config.emit:
        text = "layer,K,neg_ll,penalty,total_cost\n" + "".join(
            layer.trace.to_csv(layer.layer_index).split("\n", 1)[1] for layer in h.layers)
        write_atomic(os.path.join(out, "trace.csv"), text)
    if "dot" in config.emit:
        for layer in h.layers:
            G = reduce(layer.couplings)
            sizes = np.bincount(layer.clusters, minlength=layer.K)
            write_atomic(os.path.join(out, f"layer{layer.layer_index}.dot"),
                         to_dot(G, layer.couplings.Phi, sizes, name=f"layer{layer.layer_index}"))
    if "rules_csv" in config.emit:
        rules = []
        for layer in h.layers:
            for p in range(layer.K):
                rules.extend(block_rules(layer.couplings, p))
        first = h.layers[0].couplings
        for i in range(spec.node_count):
            rules.extend(node_rules(first, i, None, spec.node_labels))
        write_atomic(os.path.join(out, "rules.csv"), rules_to_csv(rules))
    if "matrix_pgm" in config.emit:
        a = to_adjacency(spec)
        for layer in h.layers:
            write_atomic(os.path.join(out, f"layer{layer.layer_index}.pgm"),
                         pgm_bytes(a, layer.clusters))
    return report
