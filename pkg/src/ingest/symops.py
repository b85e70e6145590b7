"""Symmetry operators written as xyz expressions ("-x, y+1/2, -z")."""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from src.errors import UnparsableSymOp

logger = logging.getLogger(__name__)

AXES = "xyz"
ALLOWED_DENOMINATORS = (1, 2, 3, 4, 6)
DECIMAL_SNAP_TOL = 1e-3

# One signed term: a number, an axis, or number times axis ("2*x" is rejected later)
TERM_PATTERN = re.compile(
    r"""(?P<sign>[+-]?)
        (?:
            (?P<number>\d+/\d+|\d*\.\d+|\d+\.?)(?:\*?(?P<scaled>[xyz]))?
          | (?P<axis>[xyz])
        )""",
    re.VERBOSE,
)

Row = Tuple[Fraction, Fraction, Fraction]


@dataclass(frozen=True)
class SymOp:
    """
    Exact affine map x -> W x + t on fractional coordinates.

    Attributes:
        matrix: Rows of W, entries in {-1, 0, 1}
        translation: t exactly as written (not reduced modulo 1)
    """

    matrix: Tuple[Row, Row, Row]
    translation: Row

    @classmethod
    def identity(cls) -> "SymOp":
        one, zero = Fraction(1), Fraction(0)
        return cls(
            matrix=((one, zero, zero), (zero, one, zero), (zero, zero, one)),
            translation=(zero, zero, zero),
        )

    @property
    def rotation(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.matrix])

    @property
    def shift(self) -> np.ndarray:
        return np.array([float(v) for v in self.translation])

    def apply(self, frac: np.ndarray) -> np.ndarray:
        """Apply to one point (shape (3,)) or many (shape (m, 3)) fractional points."""
        frac = np.asarray(frac, dtype=float)
        return frac @ self.rotation.T + self.shift

    def is_identity(self) -> bool:
        return self == SymOp.identity()

    def as_xyz(self) -> str:
        """Canonical xyz string, e.g. '-x,y+1/2,-z'."""
        parts = []
        for row, t in zip(self.matrix, self.translation):
            terms = ""
            for coef, axis in zip(row, AXES):
                if coef == 1:
                    terms += f"+{axis}"
                elif coef == -1:
                    terms += f"-{axis}"
            if t != 0:
                terms += f"{'+' if t > 0 else '-'}{abs(t)}"
            parts.append(terms.lstrip("+") or "0")
        return ",".join(parts)


def _snap(value: Fraction, text: str, line: Optional[int]) -> Fraction:
    """Snap decimals such as 0.3333 to the nearest allowed crystallographic fraction."""
    snapped = value.limit_denominator(12)
    if snapped.denominator not in ALLOWED_DENOMINATORS or abs(snapped - value) > DECIMAL_SNAP_TOL:
        raise UnparsableSymOp(f"Translation {value} in '{text}' is not a multiple of 1/2, 1/3, 1/4 or 1/6", line)
    return snapped


def _parse_component(component: str, text: str, line: Optional[int]) -> Tuple[Row, Fraction]:
    if not component:
        raise UnparsableSymOp(f"Empty component in '{text}'", line)

    coefs = [Fraction(0)] * 3
    translation = Fraction(0)
    pos = 0
    while pos < len(component):
        match = TERM_PATTERN.match(component, pos)
        if match is None or match.end() == pos:
            raise UnparsableSymOp(f"Unexpected '{component[pos:]}' in '{text}'", line)
        if pos > 0 and not match.group("sign"):
            raise UnparsableSymOp(f"Missing operator before '{component[pos:]}' in '{text}'", line)

        sign = -1 if match.group("sign") == "-" else 1
        if match.group("axis"):
            coefs[AXES.index(match.group("axis"))] += sign
        else:
            number = Fraction(match.group("number"))
            if match.group("scaled"):
                coefs[AXES.index(match.group("scaled"))] += sign * number
            else:
                translation += sign * number
        pos = match.end()

    if any(c not in (-1, 0, 1) for c in coefs):
        raise UnparsableSymOp(f"Coefficients of '{component}' in '{text}' must be -1, 0 or 1", line)
    if all(c == 0 for c in coefs):
        raise UnparsableSymOp(f"Component '{component}' of '{text}' has no axis", line)
    if translation.denominator not in ALLOWED_DENOMINATORS:
        translation = _snap(translation, text, line)
    return tuple(coefs), translation


def parse_symop(text: str, line: Optional[int] = None) -> SymOp:
    """
    Parse an xyz symmetry operator.

    Whitespace and case are ignored; offsets may precede or follow the axis
    ("1/2+x" and "x+1/2") and may be decimal ("z-0.25").

    Args:
        text: Operator such as "-x, y+1/2, -z"
        line: Source line, reported in errors

    Returns:
        SymOp with exact rational entries

    Raises:
        UnparsableSymOp: If the string is not three valid components
    """
    cleaned = re.sub(r"\s+", "", str(text)).lower().strip("'\"")
    parts = cleaned.split(",")
    if len(parts) != 3:
        raise UnparsableSymOp(f"Expected three components in '{text}'", line)

    rows, shifts = [], []
    for part in parts:
        row, t = _parse_component(part, text, line)
        rows.append(row)
        shifts.append(t)

    op = SymOp(matrix=tuple(rows), translation=tuple(shifts))
    if np.linalg.matrix_rank(op.rotation) < 3:
        raise UnparsableSymOp(f"Operator '{text}' is singular", line)
    return op
