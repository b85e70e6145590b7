"""Subcommand implementations. Each returns what the entry point writes out."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.concurrency import map_concurrently
from src.config import CliConfig
from src.dedup.pipeline import dedup_ladder
from src.dedup.report import duplicate_counts, ladder_summary, write_pairs
from src.errors import InputError
from src.geometry.periodic_set import PeriodicSet, perturb, with_id
from src.ingest.native import NativeDistribution, read_distributions, write_native
from src.ingest.readers import expand_inputs, load_inputs
from src.invariants.asymptotic import asymptote, growth_terms, pda_concat, pda_h
from src.invariants.distribution import WeightedRowDistribution, collapse_rows
from src.invariants.higher_order import pdd_concat, pdd_h
from src.invariants.moments import moments
from src.invariants.psd import psd, psd_reconstruct
from src.metrics.compare import corpus_distributions, nearest_neighbors, perturbation_lower_bound
from src.metrics.emd import emd
from src.metrics.ground import ground_distance

logger = logging.getLogger(__name__)

COMPARE_COLUMNS = ["idA", "idB", "invariant", "h", "k", "ground", "value"]
NN_COLUMNS = ["query", "rank", "neighbor", "distance", "lnd", "min_perturbation"]


@dataclass
class CommandResult:
    """Output of a subcommand plus the per-file failures it skipped."""

    table: Optional[pd.DataFrame] = None
    documents: Optional[List[dict]] = None
    text: Optional[str] = None
    failures: List[Tuple[str, str]] = field(default_factory=list)


def _label(kind: str, h: int) -> str:
    base = kind.upper()
    return base if h == 1 else f"{base}^{h}"


def _load(config: CliConfig, patterns: List[str]) -> Tuple[List[PeriodicSet], List[Tuple[str, str]]]:
    return load_inputs(patterns, site_tol=config.site_tol, max_concurrency=config.threads)


def _distribution(ps: PeriodicSet, kind: str, config: CliConfig) -> Tuple[str, WeightedRowDistribution]:
    inv = config.invariant_config
    h, k = inv.h, inv.k
    if kind == "pdd":
        dist, label = pdd_h(ps, h, k), _label("pdd", h)
    elif kind == "pdd-concat":
        dist, label = pdd_concat(ps, h, k), f"PDD^({h})"
    elif kind == "pda":
        dist, label = pda_h(ps, h, k), _label("pda", h)
    elif kind == "pda-concat":
        dist, label = pda_concat(ps, h, k), f"PDA^({h})"
    else:
        dist, label = psd(ps, k), "PSD"
    if inv.collapse:
        dist = collapse_rows(dist, inv.collapse_tol)
    return label, dist.sorted_rows()


def _vector(ps: PeriodicSet, kind: str, config: CliConfig) -> Tuple[str, np.ndarray]:
    inv = config.invariant_config
    h, k = inv.h, inv.k
    if kind == "amd":
        return _label("amd", h), pdd_h(ps, h, k).column_means()
    if kind == "ada":
        return _label("ada", h), pda_h(ps, h, k).column_means()
    source = pdd_h(ps, h, k) if inv.invariant == "pdd" else pda_h(ps, h, k)
    matrix = moments(source, config.moments_t, source=_label(inv.invariant, h))
    return f"M{config.moments_t}[{matrix.source}]", matrix.flatten()


def cmd_invariant(config: CliConfig) -> CommandResult:
    """
    Compute one invariant for every structure in the inputs.

    CSV has one line per distribution row (weight first) or one line per
    structure for vector invariants (AMD, ADA, moments).
    """
    kind = config.kind or config.invariant_config.invariant
    sets, failures = _load(config, config.inputs)

    if kind in ("amd", "ada", "moments"):
        results = map_concurrently(lambda ps: _vector(ps, kind, config), sets, config.threads)
        rows, documents = [], []
        for ps, (label, vector) in zip(sets, results):
            rows.append({"id": ps.id, "invariant": label, "h": config.invariant_config.h,
                         **{f"v{j + 1}": float(v) for j, v in enumerate(vector)}})
            documents.append({"id": ps.id, "invariant": label, "h": config.invariant_config.h,
                              "values": vector.tolist()})
        return CommandResult(table=pd.DataFrame(rows), documents=documents, failures=failures)

    results = map_concurrently(lambda ps: _distribution(ps, kind, config), sets, config.threads)
    frames, documents = [], []
    for ps, (label, dist) in zip(sets, results):
        frame = pd.DataFrame(dist.values, columns=[f"c{j + 1}" for j in range(dist.k)])
        frame.insert(0, "weight", dist.weights)
        frame.insert(0, "h", dist.order)
        frame.insert(0, "invariant", label)
        frame.insert(0, "id", ps.id)
        frames.append(frame)
        documents.append(NativeDistribution.from_distribution(dist, invariant=label, id=ps.id).model_dump())
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    return CommandResult(table=table, documents=documents, failures=failures)


def _compare_invariants(ps: PeriodicSet, config: CliConfig) -> Dict[str, List]:
    inv = config.invariant_config
    dists = [pdd_h(ps, order, inv.k) if inv.invariant == "pdd" else pda_h(ps, order, inv.k)
             for order in range(1, inv.h + 1)]
    return {"dists": dists, "means": [d.column_means() for d in dists]}


def cmd_compare(config: CliConfig) -> CommandResult:
    """
    Distances between structures of the inputs and structures of ``against``.

    Per order 1..h: the ground distance on AMD/ADA vectors and the EMD on
    PDD/PDA; for h >= 2 also the maximum over orders. With ``perturb`` every
    input is instead compared with a copy whose points moved by at most
    that distance (seeded by ``seed``).
    """
    inv = config.invariant_config
    sets_a, failures = _load(config, config.inputs)
    if config.perturb is not None:
        sets_b = [
            with_id(perturb(ps, config.perturb, seed=config.seed), f"{ps.id}~{config.perturb:g}")
            for ps in sets_a
        ]
        pairs = [(i, i) for i in range(len(sets_a))]
    elif config.against:
        sets_b, failures_b = _load(config, config.against)
        failures = failures + failures_b
        pairs = [(i, j) for i in range(len(sets_a)) for j in range(len(sets_b))]
    else:
        raise InputError("compare needs a second input or --perturb")

    cache_a = map_concurrently(lambda ps: _compare_invariants(ps, config), sets_a, config.threads)
    cache_b = map_concurrently(lambda ps: _compare_invariants(ps, config), sets_b, config.threads)
    vector_name = "amd" if inv.invariant == "pdd" else "ada"

    records = []
    for i, j in pairs:
        a, b, ca, cb = sets_a[i], sets_b[j], cache_a[i], cache_b[j]
        per_order = []
        for order in range(1, inv.h + 1):
            d_vec = ground_distance(ca["means"][order - 1], cb["means"][order - 1], inv.ground)
            records.append((a.id, b.id, _label(vector_name, order), order, inv.k, inv.ground.name, d_vec))
        for order in range(1, inv.h + 1):
            value, _ = emd(ca["dists"][order - 1], cb["dists"][order - 1], inv.ground)
            per_order.append(value)
            records.append((a.id, b.id, _label(inv.invariant, order), order, inv.k, inv.ground.name, value))
        if inv.h >= 2:
            records.append((a.id, b.id, f"{inv.invariant.upper()}^({inv.h})", inv.h, inv.k,
                            inv.ground.name, max(per_order)))

    table = pd.DataFrame(records, columns=COMPARE_COLUMNS)
    return CommandResult(table=table, documents=table.to_dict(orient="records"), failures=failures)


def cmd_nn(config: CliConfig) -> CommandResult:
    """Local Novelty Distance of every query against the corpus, with the top neighbors."""
    queries, failures_q = _load(config, config.inputs)
    corpus, failures_c = _load(config, config.against)
    inv = config.invariant_config

    logger.info(f"Ranking {len(corpus)} corpus entries for {len(queries)} queries")
    corpus_dists = corpus_distributions(corpus, inv, max_concurrency=config.threads)

    records = []
    for query in queries:
        ranked = nearest_neighbors(query, corpus, inv, top=config.top, corpus_dists=corpus_dists)
        novelty = ranked[0][0]
        for rank, (distance, neighbor) in enumerate(ranked, start=1):
            records.append((query.id, rank, neighbor, distance, novelty, perturbation_lower_bound(novelty)))

    table = pd.DataFrame(records, columns=NN_COLUMNS)
    return CommandResult(table=table, documents=table.to_dict(orient="records"),
                         failures=failures_q + failures_c)


def cmd_dedup(config: CliConfig) -> CommandResult:
    """
    Hierarchical near-duplicate search for every threshold of the ladder.

    The stage summary is the main output. ``pairs_out`` receives the pair list
    at the largest threshold and ``counts_out`` the per-threshold count and
    percentage of entries with a near-duplicate.
    """
    inv = config.invariant_config
    sets_a, failures_a = _load(config, config.inputs)
    sets_b, failures_b = _load(config, config.against) if config.against else (None, [])

    runs = dedup_ladder(
        sets_a, sets_b, thresholds=config.thresholds, k=inv.k, ground=inv.ground,
        max_concurrency=config.threads,
    )
    summary = ladder_summary([report for report, _ in runs])

    ids_a = [ps.id for ps in sets_a]
    ids_b = [ps.id for ps in sets_b] if sets_b is not None else None
    counts = pd.concat([
        duplicate_counts(
            [(r.id_a, r.id_b) for r in records if r.is_duplicate], ids_a, ids_b, threshold=report.threshold
        )
        for report, records in runs
    ], ignore_index=True)

    final_report, final_records = runs[-1]
    if config.pairs_out:
        logger.info(f"Pair list at threshold {final_report.threshold:g}")
        write_pairs(final_records, config.pairs_out)
    if config.counts_out:
        counts.to_csv(config.counts_out, index=False)
    for entry_id, reason in final_report.quarantined:
        logger.warning(f"Quarantined {entry_id}: {reason}")

    documents = [{
        "stages": summary.to_dict(orient="records"),
        "counts": counts.to_dict(orient="records"),
        "quarantined": [{"id": i, "reason": r} for i, r in final_report.quarantined],
    }]
    return CommandResult(table=summary, documents=documents, failures=failures_a + failures_b)


def cmd_reconstruct1d(config: CliConfig) -> CommandResult:
    """Rebuild sequences from PSD(S; m) documents written by ``invariant --kind psd --format json``."""
    paths = expand_inputs(config.inputs)
    if not paths:
        raise InputError(f"No input files match {config.inputs}")

    sets = []
    for path in paths:
        for doc in read_distributions(path.read_text(encoding="utf-8")):
            if doc.invariant.upper() != "PSD":
                logger.warning(f"{path}: document {doc.id} holds {doc.invariant}, reading it as PSD")
            sets.append(psd_reconstruct(doc.to_distribution(), id=doc.id))
    logger.info(f"Reconstructed {len(sets)} sequences")
    return CommandResult(text=write_native(sets))


def cmd_asymptote(config: CliConfig) -> CommandResult:
    """
    Column averages a(h, j) of PDD^{h} against their asymptotic curve, j = 1..k.

    Columns: id, h, k, a, a_normalized = a / (h! k)^(1/(hn)), asymptote, ada.
    """
    inv = config.invariant_config
    sets, failures = _load(config, config.inputs)

    def curve(ps: PeriodicSet) -> pd.DataFrame:
        base = pdd_h(ps, inv.h, inv.k)
        averages = base.column_means()
        fitted = asymptote(ps, inv.h, inv.k, base=base)
        return pd.DataFrame({
            "id": ps.id,
            "h": inv.h,
            "k": np.arange(1, inv.k + 1),
            "a": averages,
            "a_normalized": averages / growth_terms(inv.h, inv.k, ps.dim),
            "asymptote": fitted,
            "ada": averages - fitted,
        })

    frames = map_concurrently(curve, sets, config.threads)
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    return CommandResult(table=table, documents=table.to_dict(orient="records"), failures=failures)


COMMANDS = {
    "invariant": cmd_invariant,
    "compare": cmd_compare,
    "nn": cmd_nn,
    "dedup": cmd_dedup,
    "reconstruct1d": cmd_reconstruct1d,
    "asymptote": cmd_asymptote,
}
