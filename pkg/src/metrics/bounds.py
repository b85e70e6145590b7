"""Checks of the lower bounds that make cheap comparisons safe filters.

For distributions of orders 1..h under any ground metric:

    (a) the max-over-orders EMD up to h dominates the one up to g <= h;
    (b) truncating every row to its first k' <= k columns cannot increase
        the EMD (for RMS this holds for sqrt(k) * EMD, i.e. the L2 scale);
    (c) the ground distance between the weighted column means (centroids)
        is at most the EMD.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from src.geometry.periodic_set import PeriodicSet
from src.invariants.distribution import WeightedRowDistribution
from src.metrics.compare import InvariantKind, emd_per_order, order_distributions
from src.metrics.emd import emd
from src.metrics.ground import GroundMetric, ground_distance

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9


@dataclass
class BoundCheck:
    """One inequality lower <= upper."""

    name: str
    lower: float
    upper: float

    @property
    def slack(self) -> float:
        return self.upper - self.lower

    def holds(self, tol: float = BOUND_SLACK) -> bool:
        return self.slack >= -tol


@dataclass
class BoundsReport:
    """All checked inequalities; ``violations`` is expected to be empty."""

    checks: List[BoundCheck] = field(default_factory=list)
    tol: float = BOUND_SLACK

    @property
    def violations(self) -> List[BoundCheck]:
        return [c for c in self.checks if not c.holds(self.tol)]


def _rms_scale(g: GroundMetric, k: int) -> float:
    return math.sqrt(k) if g.kind == "rms" else 1.0


def check_distribution_bounds(
    dists_a: Sequence[WeightedRowDistribution],
    dists_b: Sequence[WeightedRowDistribution],
    g: GroundMetric,
    k_prime: Optional[int] = None,
    tol: float = BOUND_SLACK,
) -> BoundsReport:
    """
    Check bounds (a), (b), (c) for two lists of distributions of orders 1..h.

    Args:
        dists_a: Distributions of the first set, index i holding order i + 1
        dists_b: Distributions of the second set, same layout
        g: Ground metric
        k_prime: Truncation for bound (b); defaults to half the column count
        tol: Allowed negative slack

    Returns:
        BoundsReport listing every inequality checked
    """
    report = BoundsReport(tol=tol)
    per_order = emd_per_order(dists_a, dists_b, g)

    running = 0.0
    for order, value in enumerate(per_order, start=1):
        previous = running
        running = max(running, value)
        report.checks.append(BoundCheck(f"order: max up to {order - 1} <= max up to {order}", previous, running))

    for order, (da, db, value) in enumerate(zip(dists_a, dists_b, per_order), start=1):
        k = da.k
        kp = k_prime if k_prime is not None else max(1, k // 2)
        kp = min(kp, k)
        truncated, _ = emd(da.truncate(kp), db.truncate(kp), g)
        report.checks.append(BoundCheck(
            f"columns: order {order}, k'={kp} <= k={k}",
            truncated * _rms_scale(g, kp),
            value * _rms_scale(g, k),
        ))

        centroid = ground_distance(da.column_means(), db.column_means(), g)
        report.checks.append(BoundCheck(f"centroid: order {order}", centroid, value))

    if report.violations:
        logger.warning(f"{len(report.violations)} bound violations: {[c.name for c in report.violations]}")
    return report


def check_bounds(a: PeriodicSet, b: PeriodicSet, h: int, k: int, g: GroundMetric,
                 invariant: InvariantKind = "pdd", k_prime: Optional[int] = None) -> BoundsReport:
    """Bounds (a), (b), (c) for the order 1..h invariants of two sets."""
    return check_distribution_bounds(
        order_distributions(a, h, k, invariant),
        order_distributions(b, h, k, invariant),
        g,
        k_prime=k_prime,
    )
