"""KD-tree index over ADA vectors for L-infinity range queries."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.concurrency import map_concurrently
from src.errors import PerinvError
from src.geometry.periodic_set import PeriodicSet
from src.invariants.asymptotic import pda_h
from src.invariants.distribution import WeightedRowDistribution

logger = logging.getLogger(__name__)


@dataclass
class AdaIndex:
    """
    ADA(S; k) vectors of a dataset with a KD-tree for box (L-infinity) queries.

    Attributes:
        ids: Identifier of each indexed entry
        positions: Index of each indexed entry in the input list
        vectors: len(ids) x k matrix of ADA vectors
        pda: PDA(S; k) of each indexed entry, reused by later stages
        quarantined: (id, reason) of entries that could not be indexed
        k: Vector length
    """

    ids: List[str]
    positions: List[int]
    vectors: np.ndarray
    pda: List[WeightedRowDistribution]
    k: int
    quarantined: List[Tuple[str, str]] = field(default_factory=list)
    tree: Optional[cKDTree] = None

    def __post_init__(self):
        if self.tree is None and len(self.ids) > 0:
            self.tree = cKDTree(self.vectors)

    def __len__(self) -> int:
        return len(self.ids)

    def pairs_within(self, radius: float) -> np.ndarray:
        """
        All index pairs (i, j), i < j, with |ADA_i - ADA_j|_inf <= radius.

        Returns:
            n_pairs x 2 array sorted lexicographically
        """
        if len(self) < 2:
            return np.zeros((0, 2), dtype=int)
        pairs = self.tree.query_pairs(radius, p=np.inf, output_type="ndarray")
        if len(pairs) == 0:
            return np.zeros((0, 2), dtype=int)
        pairs = np.sort(pairs, axis=1)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]

    def pairs_between(self, other: "AdaIndex", radius: float) -> np.ndarray:
        """All (i in self, j in other) with |ADA_i - ADA_j|_inf <= radius, sorted."""
        if len(self) == 0 or len(other) == 0:
            return np.zeros((0, 2), dtype=int)
        neighbors = self.tree.query_ball_tree(other.tree, radius, p=np.inf)
        pairs = [(i, j) for i, found in enumerate(neighbors) for j in sorted(found)]
        return np.array(pairs, dtype=int).reshape(-1, 2)


def _entry_id(ps: PeriodicSet, position: int, prefix: str) -> str:
    return ps.id if ps.id is not None else f"{prefix}{position}"


def build_index(sets: Sequence[PeriodicSet], k: int, prefix: str = "entry",
                max_concurrency: Optional[int] = None) -> AdaIndex:
    """
    Compute ADA(S; k) for every set and index the vectors.

    Entries whose invariants fail (e.g. NotFullRank) are quarantined with a
    warning and left out of the index.

    Args:
        sets: Dataset of periodic sets
        k: Number of neighbors
        prefix: Identifier prefix for sets without an id
        max_concurrency: Worker limit

    Returns:
        AdaIndex over the successfully processed entries
    """
    results = map_concurrently(lambda ps: pda_h(ps, 1, k), sets, max_concurrency, return_exceptions=True)

    ids, positions, vectors, pdas, quarantined = [], [], [], [], []
    for position, (ps, result) in enumerate(zip(sets, results)):
        entry_id = _entry_id(ps, position, prefix)
        if isinstance(result, PerinvError):
            logger.warning(f"Quarantined {entry_id}: {result}")
            quarantined.append((entry_id, f"{type(result).__name__}: {result}"))
            continue
        if isinstance(result, BaseException):
            raise result
        ids.append(entry_id)
        positions.append(position)
        vectors.append(result.column_means())
        pdas.append(result)

    if len(set(ids)) != len(ids):
        logger.warning("Dataset contains repeated identifiers; pair lists will repeat them")

    matrix = np.vstack(vectors) if vectors else np.zeros((0, k))
    logger.info(f"Indexed {len(ids)} entries (k={k}), quarantined {len(quarantined)}")
    return AdaIndex(ids=ids, positions=positions, vectors=matrix, pda=pdas, k=k, quarantined=quarantined)
