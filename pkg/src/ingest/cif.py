"""Reader for the subset of CIF needed to build periodic sets.

Blocks, tags and loops are read with pymatgen's ``CifFile``. On top of it:
    _cell_length_a/b/c, _cell_angle_alpha/beta/gamma
    loop_ with _atom_site_fract_x/y/z and _atom_site_type_symbol or _atom_site_label
    _atom_site_occupancy (anything below 1 is rejected as disorder)
    _symmetry_equiv_pos_as_xyz or _space_group_symop_operation_xyz (looped or single)

Every other tag is read and ignored. Errors carry the line of the source text
they refer to.
"""

import logging
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pymatgen.io.cif import CifBlock, CifFile

from src.config import settings
from src.errors import (
    CifParseError,
    DisorderedSite,
    MalformedLoop,
    MissingCellParameter,
    PerinvError,
)
from src.geometry.periodic_set import PeriodicSet, make_periodic_set
from src.ingest.symops import SymOp, parse_symop

logger = logging.getLogger(__name__)

LENGTH_TAGS = ("_cell_length_a", "_cell_length_b", "_cell_length_c")
ANGLE_TAGS = ("_cell_angle_alpha", "_cell_angle_beta", "_cell_angle_gamma")
FRACT_TAGS = ("_atom_site_fract_x", "_atom_site_fract_y", "_atom_site_fract_z")
SYMOP_TAGS = ("_symmetry_equiv_pos_as_xyz", "_space_group_symop_operation_xyz")
OCCUPANCY_TOL = 1e-6
HEADER_LENGTH = 74

# Same block, loop and comment rules as CifFile.from_str
BLOCK_PATTERN = re.compile(r"\s*data_(\S*)")
LOOP_PATTERN = re.compile(r"loop_")
COMMENT_PATTERN = re.compile(r"(\s|^)#.*$")
ELEMENT_PATTERN = re.compile(r"[A-Z][a-z]?")

Value = Union[str, List[str]]


@dataclass
class BlockText:
    """Source lines of one data block, used to report line numbers."""

    header: str
    lines: List[str]
    start: int
    stop: int

    @property
    def line(self) -> int:
        """Line of the data_ header."""
        return self.start + 1

    def find(self, value: str, after: Optional[int] = None) -> Optional[int]:
        """First line from ``after`` on holding ``value`` as a bare or quoted word."""
        needle = value.strip().lower()
        if not needle:
            return None
        word = re.compile(rf"(?<![^\s'\"]){re.escape(needle)}(?![^\s'\"])")
        begin = self.start if after is None else max(self.start, after - 1)
        for i in range(begin, self.stop):
            if word.search(COMMENT_PATTERN.sub("", self.lines[i]).lower()):
                return i + 1
        return None

    def row_lines(self, loop: List[str], first_column: List[str]) -> List[int]:
        """Line of every loop row, located by its first value."""
        cursor = (self.find(loop[-1]) or self.line) + 1
        lines = []
        for value in first_column:
            cursor = self.find(value, cursor) or cursor
            lines.append(cursor)
        return lines


@dataclass
class CifSite:
    label: str
    element: str
    frac: np.ndarray
    line: int


@dataclass
class CifDocument:
    """
    One data block reduced to what a periodic set needs.

    Attributes:
        id: Data block name
        lengths: a, b, c in Angstrom
        angles: alpha, beta, gamma in degrees
        sites: Asymmetric-unit atom sites
        symops: (operator, line) pairs; identity when the block lists none
        line: Line of the data_ header
    """

    id: str
    lengths: Tuple[float, float, float]
    angles: Tuple[float, float, float]
    sites: List[CifSite]
    symops: List[Tuple[SymOp, int]] = field(default_factory=list)
    line: int = 1


def _scan_layout(text: str) -> Tuple[Dict[str, BlockText], List[int]]:
    """
    Block spans and loop_ lines of the source text.

    Raises:
        CifParseError: On content before the first data_ line or an
            unterminated semicolon text field
    """
    lines = text.splitlines()
    starts: List[Tuple[int, str]] = []
    loop_lines: List[int] = []
    open_field: Optional[int] = None

    for number, raw in enumerate(lines, start=1):
        match = BLOCK_PATTERN.match(raw)
        if match:
            if open_field is not None:
                break
            starts.append((number - 1, match.group(1)[:HEADER_LENGTH]))
            continue
        if open_field is not None:
            if raw.startswith(";"):
                open_field = None
            continue
        content = COMMENT_PATTERN.sub("", raw).strip()
        if not content:
            continue
        if not starts:
            raise CifParseError(f"Content '{content.split()[0]}' before the first data_ block", number)
        if raw.startswith(";"):
            open_field = number
        elif LOOP_PATTERN.match(content):
            loop_lines.append(number)
    if open_field is not None:
        raise CifParseError("Unterminated semicolon text field", open_field)

    blocks: Dict[str, BlockText] = {}
    for i, (start, header) in enumerate(starts):
        if header in blocks:
            logger.warning(f"Block {header} appears twice, keeping the last one")
        stop = starts[i + 1][0] if i + 1 < len(starts) else len(lines)
        blocks[header] = BlockText(header, lines, start, stop)
    return blocks, loop_lines


def _check_loops(text: str, loop_lines: List[int]) -> None:
    """
    Tag and value counts of every loop, on pymatgen's own token stream.

    Raises:
        MalformedLoop: For a loop without tags, without values or with a
            partial last row
    """
    tokens = CifBlock._process_string(text)
    seen = 0
    while tokens:
        word = tokens.popleft()[0]
        if word.startswith("loop_"):
            line = loop_lines[seen] if seen < len(loop_lines) else None
            seen += 1
            tags = []
            while tokens and tokens[0][0].startswith("_"):
                tags.append(tokens.popleft()[0])
            values = 0
            while tokens and not tokens[0][0].startswith(("loop_", "_", "data_")):
                tokens.popleft()
                values += 1
            if not tags:
                raise MalformedLoop("loop_ without tags", line)
            if values == 0 or values % len(tags):
                raise MalformedLoop(
                    f"Loop with {len(tags)} tags has {values} values, not a positive multiple", line
                )
        elif word.startswith("_") and tokens and not tokens[0][0].startswith("data_"):
            tokens.popleft()


def _number(value: str, what: str, line: Optional[int]) -> Optional[float]:
    """Float value with any standard uncertainty "(n)" removed; None for '?' and '.'."""
    value = value.strip()
    if value in ("?", "."):
        return None
    try:
        return float(re.sub(r"\(\d*\)?$", "", value))
    except ValueError:
        raise CifParseError(f"Cannot read {what} from '{value}'", line) from None


def cell_matrix(lengths: Sequence[float], angles: Sequence[float]) -> np.ndarray:
    """
    Basis rows from cell parameters: a along x, b in the xy plane.

    Args:
        lengths: a, b, c in Angstrom
        angles: alpha, beta, gamma in degrees

    Returns:
        3 x 3 basis matrix

    Raises:
        CifParseError: If the angles do not describe a cell
    """
    a, b, c = lengths
    alpha, beta, gamma = (math.radians(x) for x in angles)
    cos_a, cos_b, cos_g = math.cos(alpha), math.cos(beta), math.cos(gamma)
    sin_g = math.sin(gamma)

    cy = (cos_a - cos_b * cos_g) / sin_g
    cz_sq = 1.0 - cos_b ** 2 - cy ** 2
    if cz_sq <= 0:
        raise CifParseError(f"Cell angles {tuple(angles)} do not form a cell")

    return np.array([
        [a, 0.0, 0.0],
        [b * cos_g, b * sin_g, 0.0],
        [c * cos_b, c * cy, c * math.sqrt(cz_sq)],
    ])


def cell_parameters(basis: np.ndarray) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
    """Lengths and angles (degrees) of a 3 x 3 basis."""
    basis = np.asarray(basis, dtype=float)
    lengths = np.linalg.norm(basis, axis=1)

    def angle(i, j):
        cos = np.dot(basis[i], basis[j]) / (lengths[i] * lengths[j])
        return math.degrees(math.acos(max(-1.0, min(1.0, cos))))

    return tuple(float(x) for x in lengths), (angle(1, 2), angle(0, 2), angle(0, 1))


def _cell(source: BlockText, data: Dict[str, Value]):
    values = []
    for tag in LENGTH_TAGS + ANGLE_TAGS:
        value = data.get(tag)
        number = _number(value, tag, source.find(tag)) if isinstance(value, str) else None
        if number is None:
            raise MissingCellParameter(f"Block {source.header} has no {tag}", source.line)
        values.append(number)

    lengths, angles = tuple(values[:3]), tuple(values[3:])
    if any(x <= 0 for x in lengths):
        raise CifParseError(f"Cell lengths must be positive in block {source.header}, got {lengths}", source.line)
    if any(not 0 < x < 180 for x in angles):
        raise CifParseError(f"Cell angles must lie in (0, 180) in block {source.header}, got {angles}", source.line)
    return lengths, angles


def _element(label: str) -> str:
    match = ELEMENT_PATTERN.match(label.strip())
    return match.group(0) if match else label


def _sites(source: BlockText, data: Dict[str, Value], loops: List[List[str]]) -> List[CifSite]:
    site_loop = next((loop for loop in loops if FRACT_TAGS[0] in loop), None)
    if site_loop is None:
        raise CifParseError(f"Block {source.header} has no atom site loop", source.line)
    missing = [tag for tag in FRACT_TAGS if tag not in site_loop]
    if missing:
        raise MalformedLoop(f"Atom site loop lacks {', '.join(missing)}", source.find(site_loop[0]))

    lines = source.row_lines(site_loop, data[site_loop[0]])
    sites = []
    for row_line, row in zip(lines, zip(*(data[tag] for tag in site_loop))):
        values = dict(zip(site_loop, row))
        frac = [_number(values[tag], tag, row_line) for tag in FRACT_TAGS]
        if any(x is None for x in frac):
            raise MalformedLoop("Atom site with unknown coordinates", row_line)

        label = values.get("_atom_site_label", "")
        element = _element(values.get("_atom_site_type_symbol", label))

        if "_atom_site_occupancy" in values:
            occupancy = _number(values["_atom_site_occupancy"], "_atom_site_occupancy", row_line)
            if occupancy is not None and occupancy < 1 - OCCUPANCY_TOL:
                raise DisorderedSite(f"Site {label or element} has occupancy {occupancy}", row_line)

        sites.append(CifSite(label=label or element, element=element, frac=np.array(frac), line=row_line))
    return sites


def _symops(source: BlockText, data: Dict[str, Value], loops: List[List[str]]) -> List[Tuple[SymOp, int]]:
    for tag in SYMOP_TAGS:
        value = data.get(tag)
        if value is None:
            continue
        if isinstance(value, str):
            line = source.find(tag) or source.line
            return [(parse_symop(value, line), line)]
        loop = next(loop for loop in loops if tag in loop)
        lines = source.row_lines(loop, data[loop[0]])
        return [(parse_symop(text, line), line) for text, line in zip(value, lines)]
    return []


def read_cif_documents(text: str) -> List[CifDocument]:
    """
    Split CIF text into data blocks and extract cell, sites and operators.

    Raises:
        CifParseError: Or one of its subclasses, with the offending line
    """
    blocks, loop_lines = _scan_layout(text)
    _check_loops(text, loop_lines)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cif = CifFile.from_str(text)
    for warning in caught:
        logger.debug(f"Ignoring stray CIF content: {warning.message}")

    documents = []
    for header, block in cif.data.items():
        source = blocks[header]
        data = {key.lower(): value for key, value in block.data.items()}
        loops = [[key.lower() for key in loop] for loop in block.loops]

        lengths, angles = _cell(source, data)
        sites = _sites(source, data, loops)
        symops = _symops(source, data, loops)
        if not symops:
            logger.warning(f"Block {header} lists no symmetry operators, assuming P1")
            symops = [(SymOp.identity(), source.line)]
        documents.append(CifDocument(header, lengths, angles, sites, symops, source.line))
    return documents


def expand_sites(doc: CifDocument, site_tol: Optional[float] = None) -> Tuple[np.ndarray, List[str]]:
    """
    Orbit of every asymmetric-unit site under the operators.

    Images within ``site_tol`` (fractional, modulo 1) of an earlier point are
    merged. Merging two different elements means the sites overlap.

    Returns:
        (m x 3 fractional coordinates in [0, 1), element per point)

    Raises:
        DisorderedSite: If images of different elements coincide
    """
    tol = settings.site_tol if site_tol is None else site_tol
    points: List[np.ndarray] = []
    species: List[str] = []
    for site in doc.sites:
        for op, _ in doc.symops:
            image = op.apply(site.frac)
            image = image - np.floor(image)
            image[np.isclose(image, 1.0, rtol=0.0, atol=1e-12)] = 0.0
            if points:
                diff = np.asarray(points) - image
                diff -= np.round(diff)
                close = np.flatnonzero(np.max(np.abs(diff), axis=1) <= tol)
                if close.size:
                    if species[close[0]] != site.element:
                        raise DisorderedSite(
                            f"{site.element} site {site.label} overlaps a {species[close[0]]} site", site.line
                        )
                    continue
            points.append(image)
            species.append(site.element)
    return np.array(points), species


def to_periodic_set(doc: CifDocument, site_tol: Optional[float] = None) -> PeriodicSet:
    """Periodic set of one data block, motif symmetry-expanded."""
    frac, species = expand_sites(doc, site_tol)
    basis = cell_matrix(doc.lengths, doc.angles)
    return make_periodic_set(3, 3, basis, frac, species=species, id=doc.id)


def parse_cif(text: str, site_tol: Optional[float] = None) -> List[Tuple[PeriodicSet, dict]]:
    """
    Parse every data block of a CIF into a periodic set.

    Args:
        text: CIF content
        site_tol: Fractional tolerance for merging symmetry images

    Returns:
        (PeriodicSet, metadata) per data block; metadata holds the block
        id, cell parameters, asymmetric-unit size and operator count

    Raises:
        CifParseError: Or a subclass, with the offending line
    """
    results = []
    for doc in read_cif_documents(text):
        try:
            ps = to_periodic_set(doc, site_tol)
        except CifParseError:
            raise
        except PerinvError as e:
            raise CifParseError(f"Block {doc.id}: {e}", doc.line) from e
        metadata = {
            "id": doc.id,
            "cell_lengths": list(doc.lengths),
            "cell_angles": list(doc.angles),
            "asymmetric_sites": len(doc.sites),
            "symops": len(doc.symops),
            "motif_points": ps.m,
            "line": doc.line,
        }
        logger.debug(f"Parsed block {doc.id}: {len(doc.sites)} sites -> {ps.m} motif points")
        results.append((ps, metadata))
    return results
