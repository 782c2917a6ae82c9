"""Choosing the cluster count by penalized likelihood.

The cost of a fitted model is ``-L(N | X, B_g) + 2 g K^2 ln K^2``.  The
coding length of a model also carries a ``2 n ln 2n`` term for the node map,
but it does not depend on ``K`` and is left out of the cost.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

from .blocking import BlockingAssignment, BlockModel, EMConfig, fit

logger = logging.getLogger(__name__)

__all__ = ["penalty", "node_map_coding_length", "SelectionEntry", "SelectionTrace", "select_model"]


def penalty(K: int, g) -> float:
    """Model coding length ``2 g K^2 ln(K^2)`` (zero for a single cluster)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if g <= 0:
        raise ValueError("granularity must be positive")
    return 2.0 * float(g) * K * K * math.log(K * K)


def node_map_coding_length(n: int) -> float:
    """The constant ``2 n ln 2n`` dropped from the cost; reported only."""
    return 2.0 * n * math.log(2 * n)


@dataclass(frozen=True)
class SelectionEntry:
    K: int
    neg_log_likelihood: float
    penalty: float

    @property
    def total_cost(self) -> float:
        return self.neg_log_likelihood + self.penalty


@dataclass
class SelectionTrace:
    entries: list = field(default_factory=list)
    chosen_K: int = 1
    stopped_early: bool = False

    def cost(self, K: int) -> float:
        for e in self.entries:
            if e.K == K:
                return e.total_cost
        raise KeyError(K)

    def to_rows(self, layer: int = 1) -> list:
        return [
            {"layer": layer, "K": e.K, "neg_ll": e.neg_log_likelihood,
             "penalty": e.penalty, "total_cost": e.total_cost}
            for e in self.entries
        ]

    def to_csv(self, layer: int = 1) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["layer", "K", "neg_ll", "penalty", "total_cost"],
                                lineterminator="\n")
        writer.writeheader()
        for row in self.to_rows(layer):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()


def select_model(a, blocking: BlockingAssignment, config: EMConfig = None, patience: int = 3,
                 max_K: int = None):
    """Scan ``K = 1, 2, ...`` and keep the cheapest model.

    The scan stops once ``patience`` consecutive values of ``K`` have cost
    strictly above the incumbent minimum, or when ``K`` reaches the number of
    blocks (or ``max_K``).  Returns ``(model, trace)``.
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    config = config or EMConfig()
    g = blocking.g
    top = blocking.L if max_K is None else min(max_K, blocking.L)
    trace = SelectionTrace()
    best_model: BlockModel = None
    best_cost = math.inf
    rising = 0
    for K in range(1, top + 1):
        model = fit(a, blocking, K, config)
        entry = SelectionEntry(K, -model.log_likelihood, penalty(K, g))
        trace.entries.append(entry)
        logger.debug("K=%d cost=%.4f (neg_ll=%.4f, penalty=%.4f)",
                     K, entry.total_cost, entry.neg_log_likelihood, entry.penalty)
        if entry.total_cost < best_cost:
            best_cost, best_model, trace.chosen_K = entry.total_cost, model, K
            rising = 0
        elif entry.total_cost > best_cost:
            rising += 1
        else:
            rising = 0
        if rising >= patience:
            trace.stopped_early = K < top
            break
    return best_model, trace
