"""EMD between invariants of periodic sets and the Local Novelty Distance."""

import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from src.concurrency import map_concurrently
from src.config import InvariantConfig
from src.errors import EmptyCorpus
from src.geometry.periodic_set import PeriodicSet
from src.invariants.asymptotic import pda_h
from src.invariants.distribution import WeightedRowDistribution
from src.invariants.higher_order import check_order, pdd_h
from src.metrics.emd import emd
from src.metrics.ground import GroundMetric

logger = logging.getLogger(__name__)

InvariantKind = Literal["pdd", "pda"]


def order_distribution(ps: PeriodicSet, h: int, k: int, invariant: InvariantKind) -> WeightedRowDistribution:
    """PDD^{h}(S; k) or PDA^{h}(S; k)."""
    if invariant == "pda":
        return pda_h(ps, h, k)
    return pdd_h(ps, h, k)


def order_distributions(ps: PeriodicSet, h: int, k: int, invariant: InvariantKind) -> List[WeightedRowDistribution]:
    """Distributions of orders 1..h, index i holding order i + 1."""
    check_order(h, k)
    return [order_distribution(ps, order, k, invariant) for order in range(1, h + 1)]


def emd_h(a: PeriodicSet, b: PeriodicSet, h: int, k: int, g: GroundMetric,
          invariant: InvariantKind = "pdd") -> float:
    """EMD between the order-h distributions of two sets."""
    check_order(h, k)
    value, _ = emd(order_distribution(a, h, k, invariant), order_distribution(b, h, k, invariant), g)
    return value


def emd_per_order(dists_a: Sequence[WeightedRowDistribution],
                  dists_b: Sequence[WeightedRowDistribution], g: GroundMetric) -> List[float]:
    """EMD for each order of two precomputed distribution lists."""
    return [emd(da, db, g)[0] for da, db in zip(dists_a, dists_b)]


def emd_max(a: PeriodicSet, b: PeriodicSet, h: int, k: int, g: GroundMetric,
            invariant: InvariantKind = "pdd") -> float:
    """Maximum of emd_h over orders 1..h."""
    values = emd_per_order(
        order_distributions(a, h, k, invariant),
        order_distributions(b, h, k, invariant),
        g,
    )
    return max(values)


def lnd(query: PeriodicSet, corpus: Sequence[PeriodicSet],
        config: InvariantConfig) -> Tuple[float, Optional[str]]:
    """
    Local Novelty Distance: the smallest configured distance from ``query`` to the corpus.

    The configured distance is the max over orders 1..h of the EMD on
    ``config.invariant``. Ties keep the first corpus entry.

    Returns:
        (distance, id of the nearest corpus entry)

    Raises:
        EmptyCorpus: If the corpus is empty
    """
    ranked = nearest_neighbors(query, corpus, config, top=1)
    return ranked[0]


def corpus_distributions(corpus: Sequence[PeriodicSet], config: InvariantConfig,
                         max_concurrency: Optional[int] = None) -> List[List[WeightedRowDistribution]]:
    """Order 1..h distributions of every corpus entry, computed once for repeated queries."""
    return map_concurrently(
        lambda ps: order_distributions(ps, config.h, config.k, config.invariant), corpus, max_concurrency
    )


def nearest_neighbors(query: PeriodicSet, corpus: Sequence[PeriodicSet],
                      config: InvariantConfig, top: int = 5,
                      corpus_dists: Optional[List[List[WeightedRowDistribution]]] = None,
                      ) -> List[Tuple[float, Optional[str]]]:
    """
    The ``top`` corpus entries closest to ``query``, ordered by distance then corpus index.

    Args:
        query: Set to rank the corpus against
        corpus: Reference sets
        config: Invariant, orders, k and ground metric
        top: Number of neighbors returned
        corpus_dists: Output of corpus_distributions for the same config

    Raises:
        EmptyCorpus: If the corpus is empty
    """
    if len(corpus) == 0:
        raise EmptyCorpus("Novelty distance needs a non-empty corpus")
    if corpus_dists is None:
        corpus_dists = corpus_distributions(corpus, config, max_concurrency=1)

    query_dists = order_distributions(query, config.h, config.k, config.invariant)
    distances = np.array([
        max(emd_per_order(query_dists, entry_dists, config.ground))
        for entry_dists in corpus_dists
    ])
    order = np.argsort(distances, kind="stable")[:max(1, top)]
    logger.debug(f"LND of {query.label()}: {distances[order[0]]:.6g} to entry {order[0]}")
    return [(float(distances[i]), corpus[i].id) for i in order]


def perturbation_lower_bound(novelty_distance: float) -> float:
    """Minimum displacement some point must undergo to reach the nearest corpus entry (0.5 LND)."""
    return 0.5 * novelty_distance
