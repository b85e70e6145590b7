"""Exact Earth Mover's Distance between weighted row distributions.

The transportation problem is solved in floating point by the network
simplex method on the bipartite supply/demand graph: a spanning-tree basis
of m + n - 1 cells, node potentials from the tree, entering cells chosen by
most negative reduced cost, switching to the lowest-index (Bland) rule
after a degenerate pivot so that the method cannot cycle. Termination is
certified by non-negative reduced costs (complementary slackness).
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.errors import ColumnMismatch, SolverError
from src.invariants.distribution import WeightedRowDistribution
from src.metrics.ground import GroundMetric

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12       # relative reduced cost below which a cell may enter
CERTIFICATE_TOL = 1e-10  # relative slack allowed in the optimality certificate
FLOW_TOL = 1e-9          # feasibility slack on row/column sums


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Optimal flows between two distributions.

    Attributes:
        flows: m(A) x m(B) non-negative flow matrix
        cost: Achieved transportation cost (the EMD value)
        row_potentials: Dual variables u_i of the supply rows
        col_potentials: Dual variables v_j of the demand columns
        pivots: Number of simplex pivots performed
    """

    flows: np.ndarray
    cost: float
    row_potentials: np.ndarray
    col_potentials: np.ndarray
    pivots: int = 0

    @property
    def total_flow(self) -> float:
        return float(self.flows.sum())

    def is_feasible(self, supply: np.ndarray, demand: np.ndarray, tol: float = FLOW_TOL) -> bool:
        """Row sums <= supply, column sums <= demand, total flow 1, all within ``tol``."""
        return bool(
            np.all(self.flows >= -tol)
            and np.all(self.flows.sum(axis=1) <= supply + tol)
            and np.all(self.flows.sum(axis=0) <= demand + tol)
            and abs(self.total_flow - 1.0) <= tol
        )


def _northwest_corner(supply: np.ndarray, demand: np.ndarray) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    """Initial basic feasible solution with exactly m + n - 1 basic cells."""
    m, n = len(supply), len(demand)
    flows = np.zeros((m, n))
    basis = []
    s, d = supply.copy(), demand.copy()
    i = j = 0
    while True:
        q = min(s[i], d[j])
        if i == m - 1 and j == n - 1:
            q = s[i]
        flows[i, j] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1 or s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return flows, basis


def _adjacency(basis: List[Tuple[int, int]], m: int) -> Dict[int, List[Tuple[int, Tuple[int, int]]]]:
    """Tree adjacency; rows are nodes 0..m-1, columns are nodes m..m+n-1."""
    adj: Dict[int, List[Tuple[int, Tuple[int, int]]]] = {}
    for i, j in basis:
        adj.setdefault(i, []).append((m + j, (i, j)))
        adj.setdefault(m + j, []).append((i, (i, j)))
    return adj


def _potentials(adj, cost: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Solve u_i + v_j = c_ij over the basic tree with u_0 = 0."""
    m, n = cost.shape
    pot = np.full(m + n, np.nan)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for other, (i, j) in adj.get(node, []):
            if np.isnan(pot[other]):
                pot[other] = cost[i, j] - pot[node]
                queue.append(other)
    if np.isnan(pot).any():
        raise SolverError("Basis is not a spanning tree")
    return pot[:m], pot[m:]


def _tree_path(adj, start: int, goal: int) -> List[Tuple[int, int]]:
    """Cells on the unique tree path from node ``start`` to node ``goal``."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for other, cell in adj.get(node, []):
            if other not in parent:
                parent[other] = (node, cell)
                queue.append(other)
    path = []
    node = goal
    while parent[node] is not None:
        prev, cell = parent[node]
        path.append(cell)
        node = prev
    return path[::-1]


def transport_simplex(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray) -> TransportPlan:
    """
    Minimum-cost transportation plan between ``supply`` and ``demand``.

    Args:
        supply: m positive weights summing to 1
        demand: n positive weights summing to 1
        cost: m x n cost matrix

    Returns:
        TransportPlan with optimal flows and certifying potentials

    Raises:
        SolverError: If the optimality certificate fails or pivots run away
    """
    m, n = cost.shape
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float) * (supply.sum() / np.sum(demand))
    scale = max(1.0, float(np.abs(cost).max())) if cost.size else 1.0

    flows, basis = _northwest_corner(supply, demand)
    is_basic = np.zeros((m, n), dtype=bool)
    for cell in basis:
        is_basic[cell] = True

    bland = False
    max_pivots = 50 * (m + n) * max(m, n) + 1000
    for pivot in range(max_pivots + 1):
        adj = _adjacency(basis, m)
        u, v = _potentials(adj, cost)
        reduced = cost - u[:, None] - v[None, :]
        reduced[is_basic] = 0.0
        entering_mask = reduced < -PIVOT_TOL * scale
        if not entering_mask.any():
            break
        if pivot == max_pivots:
            raise SolverError(f"No optimum after {max_pivots} pivots on a {m}x{n} instance")

        flat = int(np.flatnonzero(entering_mask)[0]) if bland else int(np.argmin(reduced))
        ei, ej = divmod(flat, n)

        path = _tree_path(adj, m + ej, ei)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flows[c] for c in minus)
        leaving = min((c for c in minus if flows[c] == theta), key=lambda c: c[0] * n + c[1])

        flows[ei, ej] += theta
        for c in plus:
            flows[c] += theta
        for c in minus:
            flows[c] -= theta
        flows[leaving] = 0.0

        basis.remove(leaving)
        basis.append((ei, ej))
        is_basic[leaving] = False
        is_basic[ei, ej] = True
        bland = theta == 0.0

    residual = float(reduced.min()) if reduced.size else 0.0
    if residual < -CERTIFICATE_TOL * scale:
        raise SolverError(f"Optimality certificate failed: reduced cost {residual}")

    flows = np.clip(flows, 0.0, None)
    logger.debug(f"Transport simplex {m}x{n}: {pivot} pivots, min reduced cost {residual:.3g}")
    return TransportPlan(
        flows=flows,
        cost=float(np.sum(flows * cost)),
        row_potentials=u,
        col_potentials=v,
        pivots=pivot,
    )


def emd(a: WeightedRowDistribution, b: WeightedRowDistribution,
        g: GroundMetric) -> Tuple[float, TransportPlan]:
    """
    Earth Mover's Distance between two weighted row distributions.

    Args:
        a: First distribution
        b: Second distribution
        g: Ground metric on rows

    Returns:
        (EMD value, optimal TransportPlan)

    Raises:
        ColumnMismatch: If the distributions have different column counts
    """
    if a.k != b.k:
        raise ColumnMismatch(f"Distributions with {a.k} and {b.k} columns")
    cost = g.cost_matrix(a.values, b.values)
    plan = transport_simplex(a.weights, b.weights, cost)
    return plan.cost, plan
