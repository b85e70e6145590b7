"""Weighted row distributions: the common container of PDD, PDD^{h}, PDA^{h} and PSD."""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from src.errors import ColumnMismatch, InputError

logger = logging.getLogger(__name__)

WEIGHT_SUM_TOL = 1e-12       # total weight must be 1 within this
DEFAULT_COLLAPSE_TOL = 1e-10  # Angstrom, entrywise


@dataclass(frozen=True, eq=False)
class WeightedRowDistribution:
    """
    Unordered rows of k ordered reals, each with a positive weight.

    Attributes:
        weights: Positive weights summing to 1
        values: rows x k array, each row non-decreasing
        n_points: Number of uncollapsed rows (motif size m)
        collapsed: Whether equal rows have been merged
        order: Order h the rows were computed for (0 when not applicable)
    """

    weights: np.ndarray
    values: np.ndarray
    n_points: int
    collapsed: bool = False
    order: int = 1

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.weights.shape[0]:
            raise InputError(
                f"Need one weight per row, got {self.weights.shape[0]} weights "
                f"for values of shape {self.values.shape}"
            )
        if np.any(self.weights <= 0) or abs(float(self.weights.sum()) - 1.0) > WEIGHT_SUM_TOL * max(1, len(self.weights)):
            raise InputError(f"Weights must be positive and sum to 1, got sum {self.weights.sum()!r}")

    @property
    def k(self) -> int:
        """Number of columns."""
        return self.values.shape[1]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column_means(self) -> np.ndarray:
        """Weighted column averages (the first moment row)."""
        return self.weights @ self.values

    def truncate(self, k: int) -> "WeightedRowDistribution":
        """Keep the first k columns."""
        if not 1 <= k <= self.k:
            raise ColumnMismatch(f"Cannot truncate {self.k} columns to {k}")
        return replace(self, values=self.values[:, :k])

    def expanded(self) -> "WeightedRowDistribution":
        """Undo collapsing: every row repeated according to weight * n_points."""
        if not self.collapsed:
            return self
        counts = np.rint(self.weights * self.n_points).astype(int)
        values = np.repeat(self.values, counts, axis=0)
        weights = np.full(values.shape[0], 1.0 / values.shape[0])
        return replace(self, weights=weights, values=values, collapsed=False)

    def sorted_rows(self) -> "WeightedRowDistribution":
        """Rows in lexicographic order, for deterministic output and comparisons."""
        order = np.lexsort(np.rot90(self.values)) if self.n_rows > 1 else np.arange(self.n_rows)
        return replace(self, weights=self.weights[order], values=self.values[order])


def from_rows(values: np.ndarray, order: int = 1, collapse: bool = False,
              collapse_tol: float = DEFAULT_COLLAPSE_TOL) -> WeightedRowDistribution:
    """
    Equal-weight distribution from an m x k array of per-point rows.

    Args:
        values: One row per motif point
        order: Order h of the rows
        collapse: Merge rows equal within ``collapse_tol``
        collapse_tol: Entrywise absolute tolerance for merging

    Returns:
        WeightedRowDistribution with weights 1/m (or merged weights c/m)
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    dist = WeightedRowDistribution(
        weights=np.full(m, 1.0 / m),
        values=values,
        n_points=m,
        order=order,
    )
    return collapse_rows(dist, collapse_tol) if collapse else dist


def collapse_rows(dist: WeightedRowDistribution,
                  tol: float = DEFAULT_COLLAPSE_TOL) -> WeightedRowDistribution:
    """
    Merge rows whose entries all agree within ``tol`` into one row.

    Groups are connected components of the "Chebyshev distance <= tol"
    relation, walked in row order so the first row of a group is kept.
    """
    if dist.n_rows < 2:
        return replace(dist, collapsed=True)

    close = squareform(pdist(dist.values, metric="chebyshev") <= tol)
    group = np.full(dist.n_rows, -1)
    n_groups = 0
    for start in range(dist.n_rows):
        if group[start] >= 0:
            continue
        stack = [start]
        group[start] = n_groups
        while stack:
            row = stack.pop()
            for other in np.flatnonzero(close[row] & (group < 0)):
                group[other] = n_groups
                stack.append(other)
        n_groups += 1

    firsts = np.array([np.flatnonzero(group == g)[0] for g in range(n_groups)])
    weights = np.bincount(group, weights=dist.weights, minlength=n_groups)
    logger.debug(f"Collapsed {dist.n_rows} rows into {n_groups}")
    return replace(dist, weights=weights, values=dist.values[firsts], collapsed=True)


def concat_columns(parts, order: Optional[int] = None) -> WeightedRowDistribution:
    """Per-row concatenation of uncollapsed distributions sharing weights."""
    parts = list(parts)
    first = parts[0]
    if any(p.collapsed or p.n_rows != first.n_rows for p in parts):
        raise InputError("Concatenation needs uncollapsed distributions with equal row counts")
    values = np.hstack([p.values for p in parts])
    return replace(first, values=values, order=order if order is not None else len(parts))
