"""Pointwise Shift Distributions of sequences on a line.

PSD(S; k) lists, for every motif point p, the distances to its k nearest
neighbors to the right. For a periodic sequence with m motif points the
m-th entry of every row is the period L, and any single row of PSD(S; m)
determines S up to translation.
"""

import logging

import numpy as np

from src.errors import (
    DuplicateMotifPoint,
    InvalidOrder,
    MalformedRow,
    NotOneDimensional,
    TooFewPoints,
    UnrealizablePSD,
)
from src.geometry.periodic_set import PeriodicSet, make_periodic_set
from src.invariants.distribution import WeightedRowDistribution, collapse_rows, from_rows

logger = logging.getLogger(__name__)

MATCH_TOL = 1e-9  # Angstrom, row and weight agreement for round-trip checks


def _positions(ps: PeriodicSet) -> np.ndarray:
    if ps.dim != 1:
        raise NotOneDimensional(f"Shift distributions need dim 1, {ps.label()} has dim {ps.dim}")
    if ps.rank == 1:
        return np.sort(ps.motif_frac[:, 0] * abs(float(ps.basis[0, 0])))
    return np.sort(ps.motif[:, 0])


def psd(ps: PeriodicSet, k: int) -> WeightedRowDistribution:
    """
    Pointwise Shift Distribution PSD(S; k).

    Periodic sequences use the closed form: with sorted motif p_0 < ... < p_{m-1}
    and period L, the j-th right neighbor of p_i is at distance
    p_{i+j-mN} + N L - p_i where N = floor((i+j)/m).

    Finite sequences keep one row per point that has at least k points to its
    right, so the leftmost m - k points contribute rows.

    Raises:
        NotOneDimensional: dim != 1
        TooFewPoints: finite set with fewer than k + 1 points
    """
    if k < 1:
        raise InvalidOrder(f"k must be >= 1, got {k}")
    p = _positions(ps)
    m = len(p)

    if ps.rank == 1:
        period = abs(float(ps.basis[0, 0]))
        target = np.arange(m)[:, None] + np.arange(1, k + 1)[None, :]
        wraps = target // m
        rows = p[target - wraps * m] + wraps * period - p[:, None]
        return from_rows(rows, order=1)

    if m < k + 1:
        raise TooFewPoints(f"Finite sequence of {m} points has no row with {k} right neighbors")
    starts = np.arange(m - k)
    rows = p[starts[:, None] + np.arange(1, k + 1)[None, :]] - p[starts, None]
    return from_rows(rows, order=1)


def _check_row(row: np.ndarray, period: float = None):
    if row.ndim != 1 or row.size == 0:
        raise MalformedRow(f"Shift row must be a non-empty vector, got shape {row.shape}")
    if row[0] <= 0 or np.any(np.diff(row) <= 0):
        raise MalformedRow(f"Shift row must be positive and strictly increasing: {row.tolist()}")
    if period is not None and abs(row[-1] - period) > MATCH_TOL * max(1.0, period):
        raise MalformedRow(f"Last entry {row[-1]} of shift row differs from period {period}")


def psd_mirror(row, period: float) -> np.ndarray:
    """
    Row of PSD(mirror of S; m) obtained from an m-column row of PSD(S; m).

    Formula:
        (a_1 < ... < a_{m-1} < L)  ->  (L - a_{m-1} < ... < L - a_1 < L)

    Raises:
        MalformedRow: Row not strictly increasing or last entry != L
    """
    row = np.asarray(row, dtype=float)
    _check_row(row, period)
    return np.append(period - row[-2::-1], period)


def psd_mirror_distribution(dist: WeightedRowDistribution) -> WeightedRowDistribution:
    """Mirror every row of an m-column PSD; the period is read from the last column."""
    mirrored = np.array([psd_mirror(row, float(row[-1])) for row in dist.values])
    return WeightedRowDistribution(
        weights=dist.weights.copy(),
        values=mirrored,
        n_points=dist.n_points,
        collapsed=dist.collapsed,
        order=dist.order,
    )


def same_distribution(a: WeightedRowDistribution, b: WeightedRowDistribution,
                      tol: float = MATCH_TOL) -> bool:
    """Equality as weighted distributions: rows merged, sorted, compared within ``tol``."""
    if a.k != b.k:
        return False
    a = collapse_rows(a, tol).sorted_rows()
    b = collapse_rows(b, tol).sorted_rows()
    return (
        a.n_rows == b.n_rows
        and np.allclose(a.weights, b.weights, rtol=0, atol=tol)
        and np.allclose(a.values, b.values, rtol=0, atol=tol * max(1.0, float(np.abs(a.values).max())))
    )


def psd_reconstruct(dist: WeightedRowDistribution, id: str = None) -> PeriodicSet:
    """
    Periodic sequence whose PSD(.; m) is ``dist`` (m = number of columns).

    From the first row a_1 < ... < a_m the motif is p_j = a_{j+1} - a_1 for
    j = 0..m-1 and the period is a_m. The result is verified by recomputing
    its PSD.

    Raises:
        UnrealizablePSD: If the input is not the PSD of any sequence
    """
    row = dist.sorted_rows().values[0]
    try:
        _check_row(row)
    except MalformedRow as e:
        raise UnrealizablePSD(str(e)) from e

    m = dist.k
    period = float(row[-1])
    motif = (row - row[0]) / period
    try:
        result = make_periodic_set(1, 1, [[period]], motif.reshape(m, 1), id=id)
    except DuplicateMotifPoint as e:
        raise UnrealizablePSD(f"Row {row.tolist()} yields coinciding points") from e

    if not same_distribution(psd(result, m), dist):
        raise UnrealizablePSD(f"Distribution with {dist.n_rows} rows is not the PSD of a sequence")
    logger.debug(f"Reconstructed sequence of {m} points with period {period}")
    return result


def sequences_isometric(s: PeriodicSet, q: PeriodicSet) -> bool:
    """
    Whether two periodic sequences are isometric (translation or reflection).

    Compares PSD(.; m) directly and after mirroring one side.
    """
    if s.m != q.m or s.rank != 1 or q.rank != 1:
        return False
    if abs(abs(float(s.basis[0, 0])) - abs(float(q.basis[0, 0]))) > MATCH_TOL:
        return False
    a, b = psd(s, s.m), psd(q, q.m)
    return same_distribution(a, b) or same_distribution(psd_mirror_distribution(a), b)
