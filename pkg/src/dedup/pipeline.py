"""Hierarchical near-duplicate detection.

Stage 1 takes candidate pairs from the ADA KD-tree. Each later stage
recomputes a stronger distance and keeps only pairs within the threshold:

    ADA     L_inf on ADA(S; k) vectors (candidate generation)
    ADA(2)  max over orders 1, 2 of the ground distance on ADA^{h}(S; k)
    PDA     EMD on PDA(S; k)
    PDA(2)  max over orders 1, 2 of the EMD on PDA^{h}(S; k)

Every distance is a lower bound for the next one, so filtering never
loses a pair that the final stage would accept.

Run with:
    python -m src.cli dedup <files>
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.concurrency import map_concurrently
from src.errors import InputError, PerinvError
from src.geometry.periodic_set import PeriodicSet
from src.invariants.asymptotic import pda_h
from src.invariants.distribution import WeightedRowDistribution
from src.metrics.emd import emd
from src.metrics.ground import GroundMetric, ground_distance
from src.dedup.index import AdaIndex, build_index

logger = logging.getLogger(__name__)

STAGES = ("ADA", "ADA(2)", "PDA", "PDA(2)")


@dataclass
class StageResult:
    """Surviving pairs after one stage."""

    name: str
    pairs: int
    unique_entries: int
    elapsed: float


@dataclass
class PairRecord:
    """A candidate pair and the distances computed until it was dropped."""

    id_a: str
    id_b: str
    stage_reached: int
    d_ada: float
    d_ada2: Optional[float] = None
    d_pda: Optional[float] = None
    d_pda2: Optional[float] = None

    @property
    def is_duplicate(self) -> bool:
        return self.stage_reached == len(STAGES)


@dataclass
class DedupReport:
    """
    Per-stage counts of one pipeline run.

    Attributes:
        stages: Results in pipeline order
        threshold: Distance threshold in Angstrom
        metric: Name of the ground metric
        k: Number of neighbors
        n_entries: Entries considered (both datasets for cross comparisons)
        quarantined: (id, reason) of entries excluded from the run
    """

    threshold: float
    metric: str
    k: int
    n_entries: int
    stages: List[StageResult] = field(default_factory=list)
    quarantined: List[Tuple[str, str]] = field(default_factory=list)


@dataclass
class _Heavy:
    """Order-2 invariants of one entry."""

    ada2: np.ndarray
    pda2: WeightedRowDistribution


class DedupSession:
    """
    Indexes one or two datasets once and runs the pipeline at any threshold.

    Order-2 invariants are computed lazily for entries that reach stage 2 and
    cached across thresholds.
    """

    def __init__(
        self,
        dataset_a: Sequence[PeriodicSet],
        dataset_b: Optional[Sequence[PeriodicSet]] = None,
        k: int = 100,
        ground: GroundMetric = GroundMetric(),
        max_concurrency: Optional[int] = None,
    ):
        """
        Initialize the session and build the ADA indexes.

        Args:
            dataset_a: First dataset
            dataset_b: Optional second dataset; absent means self-comparison
            k: Number of neighbors
            ground: Ground metric of the final distance
            max_concurrency: Worker limit for invariant computation
        """
        self.k = k
        self.ground = ground
        self.max_concurrency = max_concurrency
        self.cross = dataset_b is not None
        self.sets = {"A": list(dataset_a), "B": list(dataset_b) if self.cross else []}

        logger.info("=" * 60)
        logger.info(f"Building ADA index (k={k}, ground={ground.name})")
        logger.info("=" * 60)
        self.index_a = build_index(self.sets["A"], k, prefix="A", max_concurrency=max_concurrency)
        self.index_b = (
            build_index(self.sets["B"], k, prefix="B", max_concurrency=max_concurrency)
            if self.cross else self.index_a
        )
        self._heavy: Dict[Tuple[str, int], _Heavy] = {}
        self._heavy_failures: Dict[Tuple[str, int], str] = {}

    @property
    def n_entries(self) -> int:
        return len(self.sets["A"]) + len(self.sets["B"])

    def candidate_radius(self, threshold: float) -> float:
        """Stage-1 L_inf radius; RMS targets are inflated by sqrt(k) since L_inf <= sqrt(k) RMS."""
        if self.ground.kind == "rms":
            return threshold * math.sqrt(self.k)
        return threshold

    def _candidates(self, threshold: float) -> np.ndarray:
        radius = self.candidate_radius(threshold)
        if self.cross:
            return self.index_a.pairs_between(self.index_b, radius)
        return self.index_a.pairs_within(radius)

    def _ensure_heavy(self, keys: Sequence[Tuple[str, int]]):
        missing = [key for key in dict.fromkeys(keys) if key not in self._heavy and key not in self._heavy_failures]
        if not missing:
            return

        def compute(key):
            side, i = key
            index = self.index_a if side == "A" else self.index_b
            ps = self.sets[side][index.positions[i]]
            pda2 = pda_h(ps, 2, self.k)
            return _Heavy(ada2=pda2.column_means(), pda2=pda2)

        results = map_concurrently(compute, missing, self.max_concurrency, return_exceptions=True)
        for key, result in zip(missing, results):
            if isinstance(result, PerinvError):
                entry_id = self._index(key[0]).ids[key[1]]
                logger.warning(f"Quarantined {entry_id} at order 2: {result}")
                self._heavy_failures[key] = f"{type(result).__name__}: {result}"
            elif isinstance(result, BaseException):
                raise result
            else:
                self._heavy[key] = result

    def _index(self, side: str) -> AdaIndex:
        return self.index_a if side == "A" else self.index_b

    def _unique(self, records: List[PairRecord]) -> int:
        if self.cross:
            return len({("A", r.id_a) for r in records} | {("B", r.id_b) for r in records})
        return len({r.id_a for r in records} | {r.id_b for r in records})

    def run(self, threshold: float) -> Tuple[DedupReport, List[PairRecord]]:
        """
        Run all four stages at one threshold.

        Args:
            threshold: Near-duplicate distance threshold in Angstrom (> 0)

        Returns:
            (DedupReport, every stage-1 candidate pair sorted by (id_a, id_b))
        """
        if not threshold > 0:
            raise InputError(f"Threshold must be positive, got {threshold}")

        report = DedupReport(threshold=threshold, metric=self.ground.name, k=self.k, n_entries=self.n_entries)
        b_side = "B" if self.cross else "A"
        ia, ib = self.index_a, self.index_b

        logger.info("=" * 60)
        logger.info(f"DEDUP at threshold {threshold:g} A")
        logger.info("=" * 60)

        # Stage 1: ADA candidates
        start = time.perf_counter()
        pairs = self._candidates(threshold)
        records = [
            PairRecord(
                id_a=ia.ids[i],
                id_b=ib.ids[j],
                stage_reached=1,
                d_ada=float(np.max(np.abs(ia.vectors[i] - ib.vectors[j]))),
            )
            for i, j in pairs
        ]
        alive = list(range(len(records)))
        report.stages.append(StageResult("ADA", len(alive), self._unique(records), time.perf_counter() - start))

        # Stage 2: ADA^{(2)}
        start = time.perf_counter()
        self._ensure_heavy([("A", int(i)) for i, _ in pairs] + [(b_side, int(j)) for _, j in pairs])
        kept = []
        for r in alive:
            i, j = int(pairs[r][0]), int(pairs[r][1])
            ha, hb = self._heavy.get(("A", i)), self._heavy.get((b_side, j))
            if ha is None or hb is None:
                continue
            d1 = ground_distance(ia.vectors[i], ib.vectors[j], self.ground)
            d2 = ground_distance(ha.ada2, hb.ada2, self.ground)
            records[r].d_ada2 = max(d1, d2)
            if records[r].d_ada2 <= threshold:
                records[r].stage_reached = 2
                kept.append(r)
        alive = kept
        report.stages.append(self._stage("ADA(2)", records, alive, start))

        # Stage 3: PDA
        start = time.perf_counter()
        kept = []
        for r in alive:
            i, j = int(pairs[r][0]), int(pairs[r][1])
            records[r].d_pda = emd(ia.pda[i], ib.pda[j], self.ground)[0]
            if records[r].d_pda <= threshold:
                records[r].stage_reached = 3
                kept.append(r)
        alive = kept
        report.stages.append(self._stage("PDA", records, alive, start))

        # Stage 4: PDA^{(2)}
        start = time.perf_counter()
        kept = []
        for r in alive:
            i, j = int(pairs[r][0]), int(pairs[r][1])
            order2 = emd(self._heavy[("A", i)].pda2, self._heavy[(b_side, j)].pda2, self.ground)[0]
            records[r].d_pda2 = max(records[r].d_pda, order2)
            if records[r].d_pda2 <= threshold:
                records[r].stage_reached = 4
                kept.append(r)
        report.stages.append(self._stage("PDA(2)", records, kept, start))

        report.quarantined = self._quarantined()
        for stage in report.stages:
            logger.info(
                f"{stage.name:7s}: {stage.pairs:6d} pairs, {stage.unique_entries:6d} entries, {stage.elapsed:.3f}s"
            )
        records.sort(key=lambda rec: (rec.id_a, rec.id_b))
        return report, records

    def _stage(self, name: str, records: List[PairRecord], alive: List[int], start: float) -> StageResult:
        survivors = [records[r] for r in alive]
        return StageResult(name, len(alive), self._unique(survivors), time.perf_counter() - start)

    def _quarantined(self) -> List[Tuple[str, str]]:
        found = list(self.index_a.quarantined)
        if self.cross:
            found += self.index_b.quarantined
        for (side, i), reason in self._heavy_failures.items():
            found.append((self._index(side).ids[i], reason))
        return found


def hierarchical_dedup(
    dataset_a: Sequence[PeriodicSet],
    dataset_b: Optional[Sequence[PeriodicSet]] = None,
    threshold: float = 1e-2,
    k: int = 100,
    ground: GroundMetric = GroundMetric(),
    max_concurrency: Optional[int] = None,
) -> Tuple[DedupReport, List[PairRecord]]:
    """
    Near-duplicate pairs within one dataset or between two.

    Returns:
        (DedupReport, stage-1 candidate pairs with the distances they reached)
    """
    session = DedupSession(dataset_a, dataset_b, k=k, ground=ground, max_concurrency=max_concurrency)
    return session.run(threshold)


def dedup_ladder(
    dataset_a: Sequence[PeriodicSet],
    dataset_b: Optional[Sequence[PeriodicSet]] = None,
    thresholds: Sequence[float] = (1e-10, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2),
    k: int = 100,
    ground: GroundMetric = GroundMetric(),
    max_concurrency: Optional[int] = None,
) -> List[Tuple[DedupReport, List[PairRecord]]]:
    """Run the pipeline once per threshold, computing invariants only once."""
    session = DedupSession(dataset_a, dataset_b, k=k, ground=ground, max_concurrency=max_concurrency)
    return [session.run(t) for t in sorted(thresholds)]


def exhaustive_pairs(
    dataset_a: Sequence[PeriodicSet],
    dataset_b: Optional[Sequence[PeriodicSet]],
    threshold: float,
    k: int,
    ground: GroundMetric,
) -> List[Tuple[str, str]]:
    """
    All pairs within ``threshold`` by the max over orders 1, 2 of EMD on PDA^{h}.

    The O(N^2) reference that the staged pipeline must reproduce.
    """
    def invariants(ps):
        return pda_h(ps, 1, k), pda_h(ps, 2, k)

    inv_a = [invariants(ps) for ps in dataset_a]
    if dataset_b is None:
        inv_b, candidates = inv_a, [(i, j) for i in range(len(inv_a)) for j in range(i + 1, len(inv_a))]
        set_b = dataset_a
    else:
        inv_b = [invariants(ps) for ps in dataset_b]
        candidates = [(i, j) for i in range(len(inv_a)) for j in range(len(inv_b))]
        set_b = dataset_b

    found = []
    for i, j in candidates:
        d = max(emd(inv_a[i][0], inv_b[j][0], ground)[0], emd(inv_a[i][1], inv_b[j][1], ground)[0])
        if d <= threshold:
            found.append((dataset_a[i].id, set_b[j].id))
    return sorted(found)
