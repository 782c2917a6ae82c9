"""Command-line front end: ``granblock analyze | generate | rules``."""
from __future__ import annotations

import argparse
import difflib
import logging
import os
import sys

from .blocking import BlockingAssignment
from .coupling import block_rules, compute_couplings, node_rules
from .graphio import ParseError, read_network, to_adjacency, to_edge_list
from .report import EMIT_CHOICES, InvariantError, RunConfig, run_analyze, write_atomic
from .selection import select_model
from .synth import PlantedSpec, generate, ground_truth_json

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 64
EXIT_LABEL = 65
EXIT_INVARIANT = 70


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are configuration errors, not parse failures of the input
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_args(p):
    p.add_argument("--input", required=True, help="network file")
    p.add_argument("--format", default="edgelist", choices=("edgelist", "gml", "pajek"))
    p.add_argument("--directed", action="store_true", help="treat an edge list as directed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--hub-min", type=int, default=2)
    p.add_argument("--max-layers", type=int, default=10)
    p.add_argument("--e-step-mode", default="sampled", choices=("exact", "sampled"),
                   help="E-step used on layers above the first")


def build_parser():
    parser = _Parser(prog="granblock", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="fit the layer hierarchy and write reports")
    _add_run_args(p)
    p.add_argument("--output-dir", default="granblock-out")
    p.add_argument("--emit", default="report_json",
                   help="comma-separated subset of " + ",".join(EMIT_CHOICES) + ", or 'all'")

    p = sub.add_parser("generate", help="draw a network with planted blocks")
    p.add_argument("--sizes", required=True, help="comma-separated block sizes")
    p.add_argument("--plan", required=True,
                   help="coupling plan rows separated by ';', entries by ',' (or 'identity')")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--output", required=True, help="edge-list path; ground truth goes next to it")

    p = sub.add_parser("rules", help="association rules for one node")
    _add_run_args(p)
    p.add_argument("--item", required=True, help="node label")
    p.add_argument("--top", type=int, default=10)
    return parser


def _run_config(args, **extra) -> RunConfig:
    try:
        return RunConfig(
            input_path=args.input, input_format=args.format, directed=args.directed,
            seed=args.seed, restarts=args.restarts, tolerance=args.tolerance,
            max_iterations=args.max_iterations, patience=args.patience, hub_min=args.hub_min,
            max_layers=args.max_layers, e_step_mode=args.e_step_mode, **extra)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_analyze(args, out):
    emit = EMIT_CHOICES if args.emit == "all" else tuple(e for e in args.emit.split(",") if e)
    config = _run_config(args, output_dir=args.output_dir, emit=emit)
    if not os.access(os.path.dirname(os.path.abspath(config.output_dir)) or ".", os.W_OK):
        raise ConfigError(f"output directory {config.output_dir!r} is not writable")
    report = run_analyze(config)
    ks = [layer["K"] for layer in report["hierarchy"]["layers"]]
    print(f"layers: {len(ks)}  K per layer: {ks}  converged: {report['hierarchy']['converged']}", file=out)
    print(f"outputs in {config.output_dir}", file=out)
    return EXIT_OK


def _parse_plan(text, k):
    if text.strip() == "identity":
        return [[1.0 if i == j else 0.0 for j in range(k)] for i in range(k)]
    try:
        return [[float(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError as exc:
        raise ConfigError(f"bad plan: {exc}") from exc


def cmd_generate(args, out):
    try:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad sizes: {exc}") from exc
    plan = _parse_plan(args.plan, len(sizes))
    try:
        spec = PlantedSpec(sizes, plan, directed=not args.undirected, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    net, truth = generate(spec)
    write_atomic(args.output, to_edge_list(net))
    truth_path = os.path.splitext(args.output)[0] + ".truth.json"
    write_atomic(truth_path, ground_truth_json(net, truth, spec) + "\n")
    print(f"wrote {net.node_count} nodes, {net.arc_count} arcs to {args.output}", file=out)
    return EXIT_OK


def cmd_rules(args, out):
    config = _run_config(args)
    if args.top < 0:
        raise ConfigError("--top must be >= 0")
    spec = read_network(config.input_path, config.input_format, config.directed)
    labels = [spec.label(i) for i in range(spec.node_count)]
    if args.item not in labels:
        near = difflib.get_close_matches(args.item, labels, n=5, cutoff=0.5)
        print(f"unknown item {args.item!r}", file=sys.stderr)
        if near:
            print("did you mean: " + "; ".join(near), file=sys.stderr)
        return EXIT_LABEL
    i = labels.index(args.item)
    if args.top == 0:
        return EXIT_OK
    a = to_adjacency(spec)
    blocking = BlockingAssignment.singletons(spec.node_count)
    model, _ = select_model(a, blocking, config.em_config(), config.patience)
    c = compute_couplings(a, blocking, model)
    print("kind\tantecedent\tconsequent\tstrength", file=out)
    for r in node_rules(c, i, args.top, labels):
        print(f"node\t{r.antecedent_label}\t{r.consequent_label}\t{r.strength:.6f}", file=out)
    for r in block_rules(c, int(c.clusters[i]))[:args.top]:
        print(f"block\t{r.antecedent_label}\t{r.consequent_label}\t{r.strength:.6f}", file=out)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "generate": cmd_generate, "rules": cmd_rules}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
