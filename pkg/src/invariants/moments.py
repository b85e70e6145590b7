"""Moments matrices of weighted row distributions."""

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import InvalidOrder
from src.invariants.distribution import WeightedRowDistribution

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MomentsMatrix:
    """
    t x k matrix whose column j holds mu_1..mu_t of column j of a distribution.

    Attributes:
        values: t x k array; row 0 is the weighted column average
        order: Order h of the source distribution
        source: Short name of the source invariant (e.g. "PDD", "PDA")
    """

    values: np.ndarray
    order: int = 1
    source: str = "PDD"

    @property
    def t(self) -> int:
        return self.values.shape[0]

    def flatten(self) -> np.ndarray:
        """Row-major vector of all moments."""
        return self.values.reshape(-1)


def _signed_root(x: np.ndarray, t: int) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** (1.0 / t)


def moments(dist: WeightedRowDistribution, t: int, source: str = "PDD") -> MomentsMatrix:
    """
    Moments matrix of a distribution.

    Formula:
        mu_t(A) = (m^(1-t) * sum_i w_i a_i^t)^(1/t), m = number of uncollapsed rows

    Negative entries (possible in PDA) use the signed power mean for odd t.
    For even t the root of the mean of |a_i|^t is taken and given the sign
    of the weighted column mean.

    Args:
        dist: Source distribution
        t: Number of moments (t >= 1)
        source: Name recorded on the result

    Returns:
        MomentsMatrix of shape t x k
    """
    if t < 1:
        raise InvalidOrder(f"Number of moments must be >= 1, got {t}")

    m = dist.n_points
    values = dist.values
    rows = [dist.column_means()]
    sign = np.sign(rows[0])
    sign[sign == 0] = 1.0
    for power in range(2, t + 1):
        if power % 2:
            mean = m ** (1 - power) * (dist.weights @ values ** power)
            rows.append(_signed_root(mean, power))
        else:
            mean = m ** (1 - power) * (dist.weights @ np.abs(values) ** power)
            rows.append(sign * mean ** (1.0 / power))
    return MomentsMatrix(values=np.vstack(rows), order=dist.order, source=source)
