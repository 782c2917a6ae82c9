"""Granular blockmodels: hierarchical block structure and pattern mining for networks."""
from .blocking import BlockingAssignment, BlockModel, EMConfig, e_step, fit, log_likelihood, m_step
from .coupling import AssociationRule, CouplingMatrices, block_rules, compute_couplings, node_rules
from .graphio import NetworkSpec, ParseError, parse_edge_list, parse_gml, parse_pajek, read_network, to_adjacency
from .hierarchy import Hierarchy, HierarchyLayer, build_hierarchy
from .patterns import PatternInstance, PatternReservoirs, ReducedBlockGraph, compute_threshold, match_patterns, reduce
from .report import RunConfig, run_analyze
from .selection import SelectionTrace, penalty, select_model
from .synth import PlantedSpec, generate, nested_plan

__version__ = "0.1.0"
