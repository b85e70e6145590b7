"""Tabular summaries of dedup runs."""

import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.dedup.pipeline import DedupReport, PairRecord

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["threshold", "metric", "stage", "pairs", "unique_entries", "unique_pct", "seconds"]
PAIR_COLUMNS = ["idA", "idB", "stage_reached", "d_ADA", "d_ADA2", "d_PDA", "d_PDA2"]
COUNT_COLUMNS = ["threshold", "dataset", "entries", "with_duplicate", "pct"]


def report_summary(report: Optional[DedupReport]) -> pd.DataFrame:
    """
    One row per stage: surviving pairs, unique entries and their share, seconds.

    Args:
        report: Result of a pipeline run, or None

    Returns:
        DataFrame with SUMMARY_COLUMNS; no rows for an empty report
    """
    if report is None or not report.stages:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)

    rows = []
    for stage in report.stages:
        pct = 100.0 * stage.unique_entries / report.n_entries if report.n_entries else 0.0
        rows.append({
            "threshold": report.threshold,
            "metric": report.metric,
            "stage": stage.name,
            "pairs": stage.pairs,
            "unique_entries": stage.unique_entries,
            "unique_pct": round(pct, 2),
            "seconds": round(stage.elapsed, 3),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def ladder_summary(reports: Iterable[DedupReport]) -> pd.DataFrame:
    """Stage summaries of several thresholds stacked into one table."""
    frames = [report_summary(r) for r in reports]
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def pair_table(records: Sequence[PairRecord], final_only: bool = False) -> pd.DataFrame:
    """Pair list; distances a pair never reached are left empty."""
    rows = [
        (r.id_a, r.id_b, r.stage_reached, r.d_ada, r.d_ada2, r.d_pda, r.d_pda2)
        for r in records
        if not final_only or r.is_duplicate
    ]
    return pd.DataFrame(rows, columns=PAIR_COLUMNS)


def write_pairs(records: Sequence[PairRecord], path: Union[str, Path], final_only: bool = False):
    """Write the pair list CSV."""
    table = pair_table(records, final_only=final_only)
    table.to_csv(path, index=False)
    logger.info(f"Wrote {len(table)} pairs to {path}")


def duplicate_counts(
    pairs: Sequence[Tuple[str, str]],
    ids_a: Sequence[str],
    ids_b: Optional[Sequence[str]] = None,
    threshold: Optional[float] = None,
) -> pd.DataFrame:
    """
    Count and percentage of entries having a near-duplicate.

    For a cross comparison each dataset gets a row counting its entries that
    have a partner in the other one. For a self comparison a single row counts
    entries appearing in any pair.

    Args:
        pairs: (id_a, id_b) duplicate pairs
        ids_a: Identifiers of the first dataset
        ids_b: Identifiers of the second dataset, None for self comparison
        threshold: Threshold stamped on every row

    Returns:
        DataFrame with COUNT_COLUMNS
    """
    rows: List[dict] = []

    def row(name: str, ids: Sequence[str], matched: set):
        total = len(set(ids))
        hits = len(matched & set(ids))
        rows.append({
            "threshold": threshold,
            "dataset": name,
            "entries": total,
            "with_duplicate": hits,
            "pct": round(100.0 * hits / total, 2) if total else 0.0,
        })

    if ids_b is None:
        row("A", ids_a, {a for a, _ in pairs} | {b for _, b in pairs})
    else:
        row("A", ids_a, {a for a, _ in pairs})
        row("B", ids_b, {b for _, b in pairs})
    return pd.DataFrame(rows, columns=COUNT_COLUMNS)
