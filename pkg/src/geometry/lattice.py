"""Lattice translate enumeration and neighbor search in periodic sets."""

import itertools
import logging
import math
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.errors import NotFullRank
from src.geometry.periodic_set import Ball, PeriodicSet, cell_diagonal, ppc, unit_ball_volume

logger = logging.getLogger(__name__)


class BallPoint(NamedTuple):
    """A point p + v of S found inside a ball."""

    point: np.ndarray
    motif_index: int
    lattice_shift: Tuple[int, ...]


def shift_half_widths(ps: PeriodicSet, radius: float) -> np.ndarray:
    """
    Per-axis integer extent ceil((r + d) * |b_i*|) of the shift box.

    b_i* are the dual basis vectors (columns of the pseudo-inverse of the basis)
    and d is the longest cell diagonal.
    """
    dual_norms = np.linalg.norm(ps.dual_basis, axis=0)
    return np.ceil((radius + cell_diagonal(ps)) * dual_norms).astype(int)


def lattice_shifts(half_widths: np.ndarray, origin=None) -> np.ndarray:
    """All integer vectors in the box origin +- half_widths, lexicographic order."""
    if len(half_widths) == 0:
        return np.zeros((1, 0), dtype=int)
    ranges = [range(-w, w + 1) for w in half_widths]
    shifts = np.array(list(itertools.product(*ranges)), dtype=int)
    if origin is not None:
        shifts = shifts + np.asarray(origin, dtype=int)
    return shifts


def points_in_ball(ps: PeriodicSet, ball: Ball) -> List[BallPoint]:
    """
    Every point p + v of S with |p + v - center| <= radius.

    Lattice shifts are enumerated over an integer box around the cell holding
    the center and candidates are filtered by exact distance.

    Args:
        ps: Periodic set
        ball: Closed ball to search

    Returns:
        BallPoints sorted by distance to the center, then motif index, then shift
    """
    center = np.asarray(ball.center, dtype=float)
    origin = np.floor(center @ ps.dual_basis).astype(int)
    shifts = lattice_shifts(shift_half_widths(ps, ball.radius), origin=origin)

    translations = shifts.astype(float) @ ps.basis
    candidates = translations[:, None, :] + ps.motif[None, :, :]
    dists = np.linalg.norm(candidates - center, axis=2)
    shift_idx, motif_idx = np.nonzero(dists <= ball.radius)

    order = np.lexsort((shift_idx, motif_idx, dists[shift_idx, motif_idx]))
    found = [
        BallPoint(
            point=candidates[s, i],
            motif_index=int(i),
            lattice_shift=tuple(int(x) for x in shifts[s]),
        )
        for s, i in zip(shift_idx[order], motif_idx[order])
    ]
    logger.debug(f"points_in_ball: {len(found)} points of {ps.label()} within r={ball.radius}")
    return found


def ball_count_bounds(ps: PeriodicSet, radius: float) -> Tuple[float, float]:
    """
    Two-sided bound on the number of points of S in any closed ball of radius r > d.

    Formula:
        m * V_n * (r - d)^n / vol[U] <= count <= m * V_n * (r + d)^n / vol[U]

    Raises:
        NotFullRank: For sets not periodic in every direction
    """
    if not ps.is_full_rank:
        raise NotFullRank(f"Ball count bounds need rank == dim for {ps.label()}")
    d = cell_diagonal(ps)
    density = ps.m * unit_ball_volume(ps.dim) / ps.cell_volume
    lower = density * max(radius - d, 0.0) ** ps.dim
    upper = density * (radius + d) ** ps.dim
    return lower, upper


def initial_knn_radius(ps: PeriodicSet, k: int) -> float:
    """
    Starting search radius for k nearest neighbors.

    Full-rank sets use PPC * (k+1)^(1/n) + 1.5 d, which already covers the
    k-th neighbor in practice. Other periodic sets start from a guess that
    doubles until enough neighbors are inside.
    """
    if ps.is_full_rank:
        return ppc(ps) * (k + 1) ** (1.0 / ps.dim) + 1.5 * cell_diagonal(ps)
    if ps.rank == 0:
        return math.inf
    shortest = float(np.min(np.linalg.norm(ps.basis, axis=1)))
    return cell_diagonal(ps) + shortest * (k / ps.m + 1) ** (1.0 / ps.rank)


class NeighborPool:
    """
    Points of S within a radius of every motif point, with a KD-tree over them.

    The pool grows on demand. ``self_index[i]`` is the position of motif
    point i (zero shift) inside the pool.
    """

    def __init__(self, ps: PeriodicSet, radius: float):
        """
        Initialize the pool.

        Args:
            ps: Periodic set
            radius: Initial covering radius around each motif point
        """
        self.periodic_set = ps
        self._build(radius)

    def _build(self, radius: float):
        ps = self.periodic_set
        if ps.rank == 0:
            shifts = np.zeros((1, 0), dtype=int)
            self.radius = math.inf
        else:
            shifts = lattice_shifts(shift_half_widths(ps, radius))
            self.radius = radius
        translations = shifts.astype(float) @ ps.basis if ps.rank else np.zeros((1, ps.dim))
        self.points = (translations[:, None, :] + ps.motif[None, :, :]).reshape(-1, ps.dim)
        self.motif_index = np.tile(np.arange(ps.m), len(shifts))

        zero_shift = int(np.flatnonzero(~shifts.any(axis=1))[0])
        self.self_index = zero_shift * ps.m + np.arange(ps.m)
        self.tree = cKDTree(self.points)
        logger.debug(
            f"Neighbor pool for {ps.label()}: radius={self.radius:.4g}, "
            f"{len(shifts)} shifts, {len(self.points)} points"
        )

    @property
    def size(self) -> int:
        return len(self.points)

    def ensure(self, radius: float):
        """Grow the pool until it covers ``radius`` around every motif point."""
        if radius > self.radius:
            self._build(max(radius, 2.0 * self.radius))

    def nearest(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Distances and pool indices of the k nearest neighbors of each motif point.

        Finite sets with fewer than k other points return only the neighbors
        that exist (fewer columns).

        Returns:
            (m x k' distances, m x k' pool indices), rows sorted by distance
        """
        motif = self.periodic_set.motif
        while True:
            n_query = min(k + 1, self.size)
            dists, idx = self.tree.query(motif, k=n_query)
            dists = dists.reshape(len(motif), n_query)
            idx = idx.reshape(len(motif), n_query)
            if self.periodic_set.rank == 0:
                return dists[:, 1:], idx[:, 1:]
            if n_query == k + 1 and np.all(dists[:, k] <= self.radius):
                return dists[:, 1:], idx[:, 1:]
            logger.debug(f"Expanding neighbor pool of {self.periodic_set.label()} beyond r={self.radius:.4g}")
            self._build(2.0 * self.radius)

    def within(self, motif_point: int, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Pool indices and distances of all points within ``radius`` of a motif point.

        The motif point itself is excluded. Results are sorted by distance with
        ties broken by pool index.
        """
        center = self.periodic_set.motif[motif_point]
        if self.periodic_set.rank == 0:
            idx = np.arange(self.size)
        else:
            self.ensure(radius)
            idx = np.array(self.tree.query_ball_point(center, radius), dtype=int)
        idx = idx[idx != self.self_index[motif_point]]
        dists = np.linalg.norm(self.points[idx] - center, axis=1)
        if self.periodic_set.rank == 0:
            keep = dists <= radius
            idx, dists = idx[keep], dists[keep]
        order = np.lexsort((idx, dists))
        return idx[order], dists[order]


def neighbor_pool_for(ps: PeriodicSet, k: int) -> NeighborPool:
    return NeighborPool(ps, initial_knn_radius(ps, k))


def packing_radius(ps: PeriodicSet) -> float:
    """
    Half the minimum distance between distinct points of S.

    A finite set with a single point has no pairs and returns infinity.
    """
    dists, _ = neighbor_pool_for(ps, 1).nearest(1)
    if dists.size == 0:
        return math.inf
    return 0.5 * float(np.min(dists[:, 0]))
