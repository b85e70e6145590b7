"""Command-line entry point.

Run with:
    python -m src.cli invariant structures/*.cif --kind pdd --h 2 --k 100
    python -m src.cli compare a.cif b.cif --ground linf
    python -m src.cli nn query.cif corpus/ --top 5
    python -m src.cli dedup corpus/ --thresholds 1e-4,1e-2 --pairs-out pairs.csv
    python -m src.cli reconstruct1d psd.json
    python -m src.cli asymptote lattice.json --h 2 --k 2000

Exit codes: 0 success, 1 computation error, 2 usage or input error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.cli.commands import COMMANDS, CommandResult
from src.config import CliConfig, InvariantConfig, settings
from src.errors import ComputationError, InputError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_INPUT = 2


def _thresholds(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--h", type=int, help=f"order h (default {settings.default_h})")
    common.add_argument("--k", type=int, help=f"number of neighbors (default {settings.default_k})")
    common.add_argument("--ground", help=f"linf | l2 | q:<r> | rms (default {settings.default_ground})")
    common.add_argument("--invariant", choices=["pdd", "pda"], help="invariant used for distances")
    common.add_argument("--collapse", action="store_true", help="merge equal rows of output distributions")
    common.add_argument("--threads", type=int, help="worker limit (default PERINV_THREADS or all cores)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument("--site-tol", type=float, help="fractional tolerance for merging CIF symmetry images")
    common.add_argument("--log-level", default=None, help=f"logging level (default {settings.log_level})")

    parser = argparse.ArgumentParser(prog="perinv", description="Isometry invariants of periodic point sets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariant", parents=[common], help="compute invariants of structures")
    p.add_argument("inputs", nargs="+", help="files, directories or glob patterns")
    p.add_argument("--kind", choices=["pdd", "pdd-concat", "pda", "pda-concat", "amd", "ada", "moments", "psd"])
    p.add_argument("--moments", dest="moments_t", type=int, help="number of moments for --kind moments")

    p = sub.add_parser("compare", parents=[common], help="distances between two sets of structures")
    p.add_argument("inputs", nargs=1, metavar="FILE_A")
    p.add_argument("against", nargs="?", metavar="FILE_B")
    p.add_argument("--perturb", type=float, help="compare FILE_A with a copy perturbed by at most this distance")
    p.add_argument("--seed", type=int, help="random seed for --perturb")

    p = sub.add_parser("nn", parents=[common], help="Local Novelty Distance against a corpus")
    p.add_argument("inputs", nargs=1, metavar="QUERY")
    p.add_argument("against", nargs="+", metavar="CORPUS")
    p.add_argument("--top", type=int, help="neighbors listed per query (default 5)")

    p = sub.add_parser("dedup", parents=[common], help="hierarchical near-duplicate search")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--against", nargs="+", help="second dataset for a cross comparison")
    p.add_argument("--thresholds", "--threshold", type=_thresholds, help="comma-separated thresholds in Angstrom")
    p.add_argument("--pairs-out", help="CSV pair list at the largest threshold")
    p.add_argument("--counts-out", help="CSV count and percentage of duplicated entries per threshold")

    p = sub.add_parser("reconstruct1d", parents=[common], help="rebuild sequences from PSD documents")
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("asymptote", parents=[common], help="column averages against the asymptotic curve")
    p.add_argument("inputs", nargs="+")

    return parser


def build_config(args: argparse.Namespace) -> CliConfig:
    """CliConfig from parsed arguments; unset options fall back to settings."""
    invariant_config = InvariantConfig.build(
        h=args.h,
        k=args.k,
        ground=args.ground,
        invariant=args.invariant,
        collapse=args.collapse,
    )
    against = getattr(args, "against", None)
    if isinstance(against, str):
        against = [against]
    return CliConfig.build(
        command=args.command,
        inputs=list(args.inputs),
        against=against,
        invariant_config=invariant_config,
        kind=getattr(args, "kind", None),
        moments_t=getattr(args, "moments_t", None),
        thresholds=getattr(args, "thresholds", None),
        top=getattr(args, "top", None),
        seed=getattr(args, "seed", None),
        perturb=getattr(args, "perturb", None),
        output=args.output,
        format=args.format,
        pairs_out=getattr(args, "pairs_out", None),
        counts_out=getattr(args, "counts_out", None),
        threads=args.threads,
        site_tol=args.site_tol,
    )


def write_result(result: CommandResult, config: CliConfig):
    """Write data to the output file or stdout."""
    if result.text is not None:
        content = result.text + "\n"
    elif config.format == "json":
        content = json.dumps(result.documents or [], indent=2) + "\n"
    else:
        content = result.table.to_csv(index=False) if result.table is not None else ""

    if config.output:
        Path(config.output).write_text(content, encoding="utf-8")
        logger.info(f"Wrote {config.output}")
    else:
        sys.stdout.write(content)


def configure_logging(level: Optional[str]):
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT

    configure_logging(args.log_level)

    try:
        config = build_config(args)
        result = COMMANDS[config.command](config)
        write_result(result, config)
    except InputError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_INPUT
    except ComputationError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        return EXIT_COMPUTATION

    for path, reason in result.failures:
        logger.error(f"Failed to read {path}: {reason}")
    return EXIT_INPUT if result.failures else EXIT_OK
