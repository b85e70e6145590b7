"""Asymptotic behaviour of PDD^{h} and the deviations PDA^{h} / ADA^{h}.

Column j of PDD^{h}(S; k) grows like c(S;h,k) * (h! j)^(1/(hn)). The
Pointwise Deviation from Asymptotic subtracts that curve so that columns
become comparable across j.
"""

import logging
import math
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from src.errors import NotFullRank
from src.geometry.periodic_set import PeriodicSet, cell_diagonal, ppc
from src.invariants.distribution import WeightedRowDistribution, concat_columns
from src.invariants.higher_order import check_order, b_coefficient, pdd_h

logger = logging.getLogger(__name__)


def growth_terms(h: int, k: int, n: int) -> np.ndarray:
    """(h! j)^(1/(hn)) for j = 1..k."""
    j = np.arange(1, k + 1, dtype=float)
    return (math.factorial(h) * j) ** (1.0 / (h * n))


def rho_coefficient(h: int, k: int, n: int) -> float:
    """rho_k = sum_j (h!j)^(1/(hn)) / sum_j (h!j)^(2/(hn))."""
    x = growth_terms(h, k, n)
    return float(x.sum() / (x ** 2).sum())


def fit_coefficient(ps: PeriodicSet, h: int, k: int,
                    base: Optional[WeightedRowDistribution] = None) -> float:
    """
    Coefficient c(S; h, k) of the asymptotic curve.

    Formula:
        h = 1:  c = PPC(S)
        h >= 2: c = sum_j a(h,j) x_j / sum_j x_j^2,  x_j = (h! j)^(1/(hn))
        where a(h, j) are the weighted column means of PDD^{h}(S; k)

    Args:
        ps: Periodic set
        h: Order
        k: Number of columns
        base: Precomputed PDD^{h}(S; k), computed if omitted

    Raises:
        NotFullRank: h = 1 on a set that is not periodic in every direction
    """
    check_order(h, k)
    if h == 1:
        return ppc(ps)
    base = base if base is not None else pdd_h(ps, h, k)
    x = growth_terms(h, k, ps.dim)
    return float(base.column_means() @ x / (x @ x))


def asymptote(ps: PeriodicSet, h: int, k: int,
              base: Optional[WeightedRowDistribution] = None) -> np.ndarray:
    """Curve A(S; h, k)_j = c(S; h, k) * (h! j)^(1/(hn)) for j = 1..k."""
    return fit_coefficient(ps, h, k, base=base) * growth_terms(h, k, ps.dim)


def pda_h(ps: PeriodicSet, h: int, k: int,
          base: Optional[WeightedRowDistribution] = None) -> WeightedRowDistribution:
    """
    Pointwise Deviation from Asymptotic PDA^{h}(S; k) = PDD^{h}(S; k) - A(S; h, k).

    Every row has the same curve subtracted, so weights are unchanged and
    values may be negative.
    """
    base = base if base is not None else pdd_h(ps, h, k)
    curve = asymptote(ps, h, k, base=base)
    return replace(base, values=base.values - curve[None, :])


def ada_h(ps: PeriodicSet, h: int, k: int) -> np.ndarray:
    """Average Deviation from Asymptotic: weighted column means of PDA^{h}(S; k)."""
    return pda_h(ps, h, k).column_means()


def pda_concat(ps: PeriodicSet, h: int, k: int) -> WeightedRowDistribution:
    """PDA^{(h)}(S; k): per-point concatenation of PDA^{1..h}."""
    check_order(h, k)
    return concat_columns([pda_h(ps, order, k) for order in range(1, h + 1)], order=h)


def asymptotic_bounds(ps: PeriodicSet, h: int, k: int) -> Tuple[float, float]:
    """
    Band containing the k-th column average a(h, k) of a full-rank set.

    Formula:
        2/(h+1) * (PPC * b^(1/n) - d) <= a(h,k) <= 2h/(h+1) * (PPC * b^(1/n) + d)
        with b = b(h, k) and d the longest cell diagonal
    """
    if not ps.is_full_rank:
        raise NotFullRank(f"Asymptotic bounds need rank == dim for {ps.label()}")
    growth = ppc(ps) * b_coefficient(h, k) ** (1.0 / ps.dim)
    d = cell_diagonal(ps)
    return 2.0 / (h + 1) * (growth - d), 2.0 * h / (h + 1) * (growth + d)
