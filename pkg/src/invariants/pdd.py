"""Pointwise Distance Distributions and Average Minimum Distances."""

import itertools
import logging
from typing import List, Sequence

import numpy as np

from src.config import settings
from src.errors import InvalidOrder
from src.geometry.lattice import neighbor_pool_for
from src.geometry.periodic_set import PeriodicSet, make_periodic_set
from src.invariants.distribution import WeightedRowDistribution, from_rows

logger = logging.getLogger(__name__)


def fill_missing(rows: np.ndarray, k: int) -> np.ndarray:
    """Pad short rows to k columns with their largest existing value."""
    if rows.shape[1] >= k:
        return rows[:, :k]
    if rows.shape[1] == 0:
        raise InvalidOrder(f"No neighbors exist to fill {k} columns")
    pad = np.repeat(rows[:, -1:], k - rows.shape[1], axis=1)
    return np.hstack([rows, pad])


def knn_rows(ps: PeriodicSet, k: int) -> np.ndarray:
    """
    Distances from each motif point to its k nearest neighbors in S.

    Args:
        ps: Periodic or finite set
        k: Number of neighbors

    Returns:
        m x k array, row i sorted ascending, self excluded. Finite sets with
        fewer than k other points repeat their largest distance.
    """
    if k < 1:
        raise InvalidOrder(f"k must be >= 1, got {k}")
    dists, _ = neighbor_pool_for(ps, k).nearest(k)
    return fill_missing(dists, k)


def pdd(ps: PeriodicSet, k: int, collapse: bool = False,
        collapse_tol: float = None) -> WeightedRowDistribution:
    """
    Pointwise Distance Distribution PDD(S; k).

    Rows are the k nearest-neighbor distances of each motif point with weight
    1/m. With ``collapse`` equal rows merge into one row of weight c/m.
    """
    tol = settings.collapse_tol if collapse_tol is None else collapse_tol
    return from_rows(knn_rows(ps, k), order=1, collapse=collapse, collapse_tol=tol)


def amd(ps: PeriodicSet, k: int) -> np.ndarray:
    """Average Minimum Distance vector: weighted column means of PDD(S; k)."""
    return pdd(ps, k).column_means()


def pair_distribution(ps: PeriodicSet, cutoff: float) -> np.ndarray:
    """
    Sorted distances from every motif point to all other points of S within ``cutoff``.

    Homometric sets share this multiset (the pair distribution function) for
    every cutoff, while their PDDs can differ.
    """
    pool = neighbor_pool_for(ps, 1)
    found = [pool.within(i, cutoff)[1] for i in range(ps.m)]
    return np.sort(np.concatenate(found)) if found else np.zeros(0)


def homometric_partner_search(
    ps: PeriodicSet,
    candidates: Sequence[float],
    tol: float = 1e-9,
) -> List[PeriodicSet]:
    """
    Brute-force search for 1D motifs with the same pair distribution as ``ps``.

    Every m-point subset of ``candidates`` (absolute positions, reduced mod
    the period) containing the origin is tried. Subsets are compared on the
    pair distribution over one period (self-translates excluded).

    Args:
        ps: One-dimensional periodic set of period L
        candidates: Positions to draw motif points from
        tol: Entrywise tolerance on the sorted distance multiset

    Returns:
        Matching sets in lexicographic order of their motifs
    """
    period = float(ps.basis[0, 0])
    window = abs(period) * (1 - 1e-9)
    target = pair_distribution(ps, window)

    positions = sorted({round(float(c) % period, 12) for c in candidates})
    positions = [p for p in positions if p != 0.0]
    matches = []
    for rest in itertools.combinations(positions, ps.m - 1):
        motif = np.array((0.0,) + rest).reshape(-1, 1) / period
        candidate = make_periodic_set(1, 1, ps.basis, motif)
        found = pair_distribution(candidate, window)
        if found.shape == target.shape and np.allclose(found, target, rtol=0, atol=tol):
            matches.append(candidate)
    logger.info(f"Homometric search: {len(matches)} motifs match {ps.label()}")
    return matches
