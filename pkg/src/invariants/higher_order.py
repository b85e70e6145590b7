"""Higher-order distributions PDD^{h} and their concatenation PDD^{(h)}.

For a motif point p and h other points p_1..p_h of S, the averaged
perimeter of the tuple is 2/(h(h+1)) times the sum of all pairwise
distances among p, p_1, ..., p_h. Row p of PDD^{h}(S; k) lists the k
smallest averaged perimeters over all h-subsets of S minus p.
"""

import itertools
import logging
import math

import numpy as np
from scipy.optimize import bisect
from scipy.spatial.distance import pdist, squareform
from scipy.special import binom

from src.config import settings
from src.errors import InvalidOrder, NeighborSearchError, TooFewPoints
from src.geometry.lattice import NeighborPool, neighbor_pool_for
from src.geometry.periodic_set import PeriodicSet
from src.invariants.distribution import WeightedRowDistribution, concat_columns, from_rows
from src.invariants.pdd import fill_missing, pdd

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9  # relative slack for the distance-bounds assertion


def check_order(h: int, k: int):
    if h < 1:
        raise InvalidOrder(f"Order h must be >= 1, got {h}")
    if k < 1:
        raise InvalidOrder(f"k must be >= 1, got {k}")


def b_coefficient(h: int, k: int) -> float:
    """
    b(h, k) = b + 1 where b >= h is real with binom(b, h) in (k-1, k].

    Rules:
        h = 1: k + 1
        h = 2: 1.5 + sqrt(2k)
        h >= 3: bisection on the increasing generalized binomial, binom(b, h) = k
    """
    check_order(h, k)
    if h == 1:
        return float(k + 1)
    if h == 2:
        return 1.5 + math.sqrt(2 * k)
    if k == 1:
        return float(h + 1)
    root = bisect(lambda b: binom(b, h) - k, h, h + k, xtol=1e-12)
    return root + 1.0


def candidate_count(h: int, k: int) -> int:
    """Number c = ceil(b(h,k) - 1) of nearest neighbors whose h-subsets number at least k."""
    return max(h, math.ceil(b_coefficient(h, k) - 1 - 1e-9))


def _keep_smallest(values: np.ndarray, k: int) -> np.ndarray:
    if len(values) > k:
        values = np.partition(values, k - 1)[:k]
    return np.sort(values)


def _smallest_averages(candidates: np.ndarray, rho: np.ndarray, h: int, k: int) -> np.ndarray:
    """
    k smallest averaged perimeters of tuples drawn from ``candidates``.

    Candidates are sorted by their distance ``rho`` to the center p. Tuples
    are grouped by their farthest member; a tuple whose farthest member is at
    distance rho has average >= 2 rho / (h+1), so groups stop once this lower
    bound exceeds the current k-th smallest average.
    """
    n_cand = len(rho)
    if n_cand < h:
        return np.empty(0)

    pair = squareform(pdist(candidates)) if n_cand > 1 else np.zeros((1, 1))
    scale = 2.0 / (h * (h + 1))
    best = np.empty(0)

    for last in range(h - 1, n_cand):
        if len(best) >= k and 2.0 * rho[last] / (h + 1) > best[k - 1]:
            break
        heads = np.array(list(itertools.combinations(range(last), h - 1)), dtype=int)
        heads = heads.reshape(-1, h - 1)
        tuples = np.column_stack([heads, np.full(len(heads), last)])

        total = rho[tuples].sum(axis=1)
        for a, b in itertools.combinations(range(h), 2):
            total += pair[tuples[:, a], tuples[:, b]]
        averages = scale * total

        slack = BOUND_SLACK * (1.0 + rho[last])
        assert np.all(averages >= 2 * rho[last] / (h + 1) - slack), "average below 2R/(h+1)"
        assert np.all(averages <= 2 * h * rho[last] / (h + 1) + slack), "average above 2hR/(h+1)"

        best = _keep_smallest(np.concatenate([best, averages]), k)
    return best


def _point_row(pool: NeighborPool, i: int, h: int, k: int, radius: float) -> np.ndarray:
    """
    Row of PDD^{h} for motif point i.

    Tuples are first enumerated among neighbors within ``radius`` (the
    distance of the c-th nearest neighbor). If the k-th smallest average U
    exceeds 2R/(h+1), every tuple with a member beyond (h+1)U/2 <= hR has a
    larger average, so one re-enumeration within that radius is exact.
    """
    idx, rho = pool.within(i, radius * (1 + 1e-12))
    best = _smallest_averages(pool.points[idx], rho, h, k)
    if len(best) >= k and best[k - 1] > 2 * radius / (h + 1):
        wider = min(h * radius, 0.5 * (h + 1) * best[k - 1]) * (1 + 1e-12)
        logger.debug(f"Point {i}: re-enumerating tuples within r={wider:.6g} (was {radius:.6g})")
        idx, rho = pool.within(i, wider)
        best = _smallest_averages(pool.points[idx], rho, h, k)
        if best[k - 1] > 2 * wider / (h + 1) * (1 + 1e-9):
            raise NeighborSearchError(
                f"Radius {wider} insufficient for order {h}, k={k} at motif point {i}"
            )
    if len(best) == 0:
        raise TooFewPoints(f"Fewer than {h} other points exist around motif point {i}")
    return fill_missing(best.reshape(1, -1), k)[0]


def higher_order_rows(ps: PeriodicSet, h: int, k: int) -> np.ndarray:
    """m x k array of the k smallest averaged perimeters for each motif point (h >= 2)."""
    c = candidate_count(h, k)
    pool = neighbor_pool_for(ps, c)
    near, _ = pool.nearest(c)
    if near.shape[1] == 0:
        raise TooFewPoints(f"{ps.label()} has no neighbors to form tuples of order {h}")

    rows = np.empty((ps.m, k))
    for i in range(ps.m):
        rows[i] = _point_row(pool, i, h, k, float(near[i, -1]))
    logger.debug(f"PDD^{{{h}}} of {ps.label()}: c={c}, pool size {pool.size}")
    return rows


def pdd_h(ps: PeriodicSet, h: int, k: int, collapse: bool = False,
          collapse_tol: float = None) -> WeightedRowDistribution:
    """
    Order-h Pointwise Distance Distribution PDD^{h}(S; k).

    Args:
        ps: Periodic or finite set
        h: Order (number of other points per tuple)
        k: Number of smallest averages per motif point
        collapse: Merge equal rows
        collapse_tol: Entrywise merge tolerance (defaults to settings)

    Returns:
        WeightedRowDistribution with k columns; h = 1 reproduces PDD(S; k)

    Raises:
        InvalidOrder: If h < 1 or k < 1
    """
    check_order(h, k)
    if h == 1:
        return pdd(ps, k, collapse=collapse, collapse_tol=collapse_tol)
    tol = settings.collapse_tol if collapse_tol is None else collapse_tol
    return from_rows(higher_order_rows(ps, h, k), order=h, collapse=collapse, collapse_tol=tol)


def pdd_concat(ps: PeriodicSet, h: int, k: int) -> WeightedRowDistribution:
    """PDD^{(h)}(S; k): per-point concatenation of PDD^{1..h}, k*h columns, weights 1/m."""
    check_order(h, k)
    return concat_columns([pdd_h(ps, order, k) for order in range(1, h + 1)], order=h)
