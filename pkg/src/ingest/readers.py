"""Load periodic sets from .cif and .json files."""

import glob
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from src.concurrency import map_concurrently
from src.errors import InputError, PerinvError
from src.geometry.periodic_set import PeriodicSet, with_id
from src.ingest.cif import parse_cif
from src.ingest.native import read_native

logger = logging.getLogger(__name__)

SUPPORTED_SUFFIXES = (".cif", ".json")


def read_structures(path: Union[str, Path], site_tol: Optional[float] = None) -> List[PeriodicSet]:
    """
    All periodic sets in one file.

    Sets without an id are named after the file (``stem`` or ``stem#i``).

    Raises:
        InputError: For unsupported suffixes and every parse failure
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise InputError(f"Unsupported file type '{suffix}' for {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"Cannot read {path}: {e}") from e

    if suffix == ".cif":
        sets = [ps for ps, _ in parse_cif(text, site_tol=site_tol)]
    else:
        sets = read_native(text)

    named = []
    for i, ps in enumerate(sets):
        if ps.id is None:
            ps = with_id(ps, path.stem if len(sets) == 1 else f"{path.stem}#{i}")
        named.append(ps)
    logger.debug(f"Read {len(named)} structures from {path}")
    return named


def expand_inputs(patterns: Sequence[str]) -> List[Path]:
    """
    Files named by paths, directories (searched recursively) and glob patterns.

    Order is the order of ``patterns``, sorted within each pattern, without repeats.
    """
    found: List[Path] = []
    for pattern in patterns:
        path = Path(pattern)
        if path.is_dir():
            matches = sorted(p for p in path.rglob("*") if p.suffix.lower() in SUPPORTED_SUFFIXES)
        elif any(ch in pattern for ch in "*?["):
            matches = sorted(Path(p) for p in glob.glob(pattern, recursive=True))
        else:
            matches = [path]
        for match in matches:
            if match not in found:
                found.append(match)
    return found


def load_inputs(
    patterns: Sequence[str],
    site_tol: Optional[float] = None,
    max_concurrency: Optional[int] = None,
) -> Tuple[List[PeriodicSet], List[Tuple[str, str]]]:
    """
    Parse every input file, quarantining files that fail.

    Returns:
        (sets in input order, (path, reason) for every failed file)

    Raises:
        InputError: If the patterns match no files
    """
    paths = expand_inputs(patterns)
    if not paths:
        raise InputError(f"No input files match {list(patterns)}")

    results = map_concurrently(
        lambda p: read_structures(p, site_tol), paths, max_concurrency, return_exceptions=True
    )

    sets: List[PeriodicSet] = []
    failures: List[Tuple[str, str]] = []
    for path, result in zip(paths, results):
        if isinstance(result, PerinvError):
            logger.warning(f"Skipping {path}: {result}")
            failures.append((str(path), f"{type(result).__name__}: {result}"))
        elif isinstance(result, BaseException):
            raise result
        else:
            sets.extend(result)
    logger.info(f"Loaded {len(sets)} structures from {len(paths) - len(failures)} of {len(paths)} files")
    return sets, failures
