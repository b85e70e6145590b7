"""Typed errors raised by the invariant library.

Two families exist. ``InputError`` means the caller handed over something
invalid (CLI exit code 2); ``ComputationError`` means a valid input could
not be processed (CLI exit code 1).
"""

from typing import Optional


class PerinvError(Exception):
    """Root of every error raised by this package."""


class InputError(PerinvError, ValueError):
    """Invalid input: malformed structure, bad parameter, unparsable file."""


class ComputationError(PerinvError, ArithmeticError):
    """A valid input that the requested computation cannot handle."""


# Geometry

class RankDeficientBasis(InputError):
    """Basis vectors are linearly dependent."""


class DuplicateMotifPoint(InputError):
    """Two motif points coincide (up to a lattice translation)."""


class DimensionMismatch(InputError):
    """Vectors of the wrong length for the declared dimension or rank."""


class NotFullRank(ComputationError):
    """Operation needs periodicity in every direction (rank == dim)."""


# Invariants

class InvalidOrder(InputError):
    """Order h, neighbor count k or moment count t below 1."""


class NotOneDimensional(InputError):
    """Pointwise shift distributions exist only for sets on a line."""


class TooFewPoints(InputError):
    """Finite set with fewer than k + 1 points."""


class MalformedRow(InputError):
    """Row that is not a valid strictly increasing shift row."""


class UnrealizablePSD(ComputationError):
    """Shift distribution does not come from any periodic sequence."""


class NeighborSearchError(ComputationError):
    """Candidate radius failed to contain the k smallest tuples."""


# Metrics

class LengthMismatch(InputError):
    """Vectors of unequal length passed to a ground metric."""


class ColumnMismatch(InputError):
    """Distributions with different column counts."""


class EmptyCorpus(InputError):
    """Novelty distance against an empty corpus."""


class SolverError(ComputationError):
    """Transport solver finished without an optimality certificate."""


# Configuration and ingestion

class ConfigurationError(InputError):
    """Invalid configuration value."""


class SchemaViolation(InputError):
    """Native JSON document that does not match the schema."""


class CifParseError(InputError):
    """Base class for CIF parsing failures, optionally tied to a line."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingCellParameter(CifParseError):
    """A data block lacks one of the six cell parameters."""


class MalformedLoop(CifParseError):
    """loop_ whose value count is not a multiple of its column count."""


class UnparsableSymOp(CifParseError):
    """Symmetry operator string outside the supported xyz grammar."""


class DisorderedSite(CifParseError):
    """Atom site with partial occupancy."""
