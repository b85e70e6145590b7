"""Tests for CIF, symmetry operator and native JSON ingestion."""

import json
import logging
from fractions import Fraction

import numpy as np
import pytest

from builders import sequence_s
from src.errors import (
    CifParseError,
    DisorderedSite,
    InputError,
    MalformedLoop,
    MissingCellParameter,
    SchemaViolation,
    UnparsableSymOp,
)
from src.ingest.cif import cell_matrix, cell_parameters, parse_cif, read_cif_documents
from src.ingest.native import (
    NativeDistribution,
    read_distributions,
    read_native,
    write_distributions,
    write_native,
)
from src.ingest.readers import expand_inputs, load_inputs, read_structures
from src.ingest.symops import SymOp, parse_symop
from src.invariants.psd import psd, same_distribution

CUBIC_CELL = """
_cell_length_a 4.0(2)
_cell_length_b 4.0
_cell_length_c 4.0
_cell_angle_alpha 90
_cell_angle_beta 90.0
_cell_angle_gamma 90
"""

ROCKSALT = """data_rocksalt
# conventional cell without operators
""" + CUBIC_CELL + """
loop_
_atom_site_label
_atom_site_type_symbol
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
Na1 Na 0 0 0
Cl1 Cl 0.5 0.5 0.5
"""

CENTROSYMMETRIC = """data_inverted
_symmetry_space_group_name_H-M 'P -1'
_journal_title
;
A multi-line
text field
;
""" + CUBIC_CELL + """
loop_
_symmetry_equiv_pos_site_id
_symmetry_equiv_pos_as_xyz
1 'x, y, z'
2 '-x, -y, -z'
loop_
_atom_site_label
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
_atom_site_occupancy
C1 0.1 0.2 0.3 1.0
O1 0.5 0.5 0.5 1
N1 0 0 0 .
"""


class TestParseSymop:
    """Test xyz operator parsing."""

    def test_mixed_signs_and_offsets(self):
        op = parse_symop("-x, y+1/2, -z")
        assert op.rotation.tolist() == [[-1, 0, 0], [0, 1, 0], [0, 0, -1]]
        assert op.translation == (0, Fraction(1, 2), 0)
        assert op.as_xyz() == "-x,y+1/2,-z"

    def test_leading_offset_and_decimal(self):
        op = parse_symop("1/2+x, y, z-0.25")
        assert op.translation == (Fraction(1, 2), 0, Fraction(-1, 4))

    def test_decimal_snaps_to_thirds(self):
        assert parse_symop("x+0.3333,y,z").translation[0] == Fraction(1, 3)

    def test_case_and_identity(self):
        op = parse_symop("X, Y, Z")
        assert op.is_identity()
        assert op == SymOp.identity()

    def test_apply(self):
        image = parse_symop("-x,y+1/2,-z").apply([0.1, 0.2, 0.3])
        assert np.allclose(image, [-0.1, 0.7, -0.3])

    def test_difference_of_axes(self):
        """Hexagonal operators mix two axes."""
        op = parse_symop("x-y, x, z+1/6")
        assert op.rotation.tolist() == [[1, -1, 0], [1, 0, 0], [0, 0, 1]]

    @pytest.mark.parametrize("text", [
        "x, y",
        "2x, y, z",
        "x, x, z",
        "a, b, c",
        "x+0.3, y, z",
        "x, , z",
        "x y, y, z",
    ])
    def test_rejects(self, text):
        with pytest.raises(UnparsableSymOp):
            parse_symop(text, line=7)

    def test_error_carries_line(self):
        with pytest.raises(UnparsableSymOp) as info:
            parse_symop("x,y", line=12)
        assert info.value.line == 12


class TestCellMatrix:
    """Test conversions between cell parameters and basis vectors."""

    def test_cubic(self):
        assert np.allclose(cell_matrix((4, 4, 4), (90, 90, 90)), 4 * np.eye(3))

    def test_round_trip(self):
        lengths, angles = cell_parameters(cell_matrix((3.0, 4.0, 5.0), (80.0, 95.0, 110.0)))
        assert lengths == pytest.approx((3.0, 4.0, 5.0))
        assert angles == pytest.approx((80.0, 95.0, 110.0))

    def test_impossible_angles(self):
        with pytest.raises(CifParseError):
            cell_matrix((1, 1, 1), (10, 10, 170))


class TestCif:
    """Test CIF parsing into periodic sets."""

    def test_rocksalt_without_operators(self, caplog):
        with caplog.at_level(logging.WARNING):
            [(ps, meta)] = parse_cif(ROCKSALT)
        assert "assuming P1" in caplog.text
        assert ps.id == "rocksalt"
        assert ps.m == 2
        assert list(ps.species) == ["Na", "Cl"]
        assert np.allclose(ps.basis, 4 * np.eye(3))
        assert meta["cell_lengths"] == [4.0, 4.0, 4.0]
        assert meta["symops"] == 1

    def test_inversion_expands_general_site_only(self):
        """The general site doubles; the two inversion centres stay single."""
        [(ps, meta)] = parse_cif(CENTROSYMMETRIC)
        assert meta["asymmetric_sites"] == 3
        assert meta["symops"] == 2
        assert meta["motif_points"] == 4
        assert sorted(ps.species) == ["C", "C", "N", "O"]
        carbon = ps.motif_frac[[s == "C" for s in ps.species]]
        assert np.allclose(sorted(carbon[:, 0]), [0.1, 0.9])

    def test_mirror_operator(self):
        text = ROCKSALT.replace("Cl1 Cl 0.5 0.5 0.5\n", "") + (
            "loop_\n_space_group_symop_operation_xyz\n'x,y,z'\n'-x,y,z'\n"
        )
        text = text.replace("Na1 Na 0 0 0", "Na1 Na 0.25 0 0")
        [(ps, _)] = parse_cif(text)
        assert ps.m == 2
        assert np.allclose(sorted(ps.motif_frac[:, 0]), [0.25, 0.75])

    def test_single_operator_tag(self):
        text = ROCKSALT + "_symmetry_equiv_pos_as_xyz 'x,y,z'\n"
        [(_, meta)] = parse_cif(text)
        assert meta["symops"] == 1

    def test_several_blocks(self):
        docs = read_cif_documents(ROCKSALT + CENTROSYMMETRIC)
        assert [doc.id for doc in docs] == ["rocksalt", "inverted"]
        assert [doc.line for doc in docs] == [1, ROCKSALT.count("\n") + 1]

    def test_site_and_operator_lines(self):
        [doc] = read_cif_documents(CENTROSYMMETRIC)
        assert [line for _, line in doc.symops] == [19, 20]
        assert [site.line for site in doc.sites] == [27, 28, 29]

    def test_repeated_block_keeps_last(self, caplog):
        with caplog.at_level(logging.WARNING):
            docs = read_cif_documents(ROCKSALT + ROCKSALT.replace("Cl1 Cl 0.5 0.5 0.5\n", ""))
        assert "appears twice" in caplog.text
        assert [len(doc.sites) for doc in docs] == [1]

    def test_stray_value_is_ignored(self):
        [(ps, _)] = parse_cif(ROCKSALT.replace("_cell_angle_beta 90.0", "_cell_angle_beta 90.0 stray"))
        assert ps.m == 2

    def test_missing_cell_parameter(self):
        text = ROCKSALT.replace("_cell_angle_gamma 90\n", "")
        with pytest.raises(MissingCellParameter) as info:
            parse_cif(text)
        assert info.value.line == 1

    def test_unknown_cell_parameter(self):
        with pytest.raises(MissingCellParameter):
            parse_cif(ROCKSALT.replace("_cell_length_b 4.0", "_cell_length_b ?"))

    def test_malformed_loop(self):
        with pytest.raises(MalformedLoop) as info:
            parse_cif(ROCKSALT.replace("Cl1 Cl 0.5 0.5 0.5", "Cl1 Cl 0.5 0.5"))
        assert info.value.line == 11

    def test_empty_loop(self):
        text = ROCKSALT + "loop_\n_symmetry_equiv_pos_as_xyz\n"
        with pytest.raises(MalformedLoop) as info:
            parse_cif(text)
        assert info.value.line == 19

    def test_partial_occupancy(self):
        text = CENTROSYMMETRIC.replace("O1 0.5 0.5 0.5 1", "O1 0.5 0.5 0.5 0.5")
        with pytest.raises(DisorderedSite) as info:
            parse_cif(text)
        assert info.value.line == 28

    def test_overlapping_elements(self):
        text = ROCKSALT.replace("Cl1 Cl 0.5 0.5 0.5", "Cl1 Cl 0.00001 0 0")
        with pytest.raises(DisorderedSite) as info:
            parse_cif(text)
        assert info.value.line == 18

    def test_unterminated_text_field(self):
        with pytest.raises(CifParseError) as info:
            parse_cif("data_x\n;\nnever closed\n")
        assert info.value.line == 2

    def test_text_field_running_into_next_block(self):
        with pytest.raises(CifParseError) as info:
            parse_cif("data_x\n_title\n;\nnot closed\n" + ROCKSALT)
        assert info.value.line == 3

    def test_bad_number(self):
        with pytest.raises(CifParseError) as info:
            parse_cif(ROCKSALT.replace("_cell_length_c 4.0", "_cell_length_c four"))
        assert info.value.line == 6

    def test_content_before_block(self):
        with pytest.raises(CifParseError) as info:
            parse_cif("# header comment\n_cell_length_a 4.0\n" + ROCKSALT)
        assert info.value.line == 2

    def test_uppercase_tags(self):
        [(ps, _)] = parse_cif(ROCKSALT.replace("_cell_length_a", "_CELL_LENGTH_A"))
        assert np.allclose(ps.basis, 4 * np.eye(3))

    def test_cif_errors_are_input_errors(self):
        with pytest.raises(InputError):
            parse_cif("data_empty\n" + CUBIC_CELL)


class TestNative:
    """Test the native JSON formats."""

    def test_round_trip(self, s_half):
        [ps] = read_native(write_native([s_half]))
        assert ps.id == s_half.id
        assert np.allclose(ps.basis, s_half.basis)
        assert np.allclose(ps.motif_frac, s_half.motif_frac)

    def test_single_document(self, square):
        text = write_native(square)
        assert isinstance(json.loads(text), dict)
        assert read_native(text)[0].m == 1

    @pytest.mark.parametrize("document", [
        {"dim": 1, "rank": 1, "basis": [[8.0]], "motif_frac": [[0.0]], "colour": "red"},
        {"dim": 1, "rank": 2, "basis": [[1.0], [2.0]], "motif_frac": [[0.0]]},
        {"dim": 2, "rank": 1, "basis": [[1.0, 0.0]], "motif_frac": [[0.0]]},
        {"dim": 1, "rank": 1, "basis": [[8.0]], "motif_frac": []},
        {"dim": 1, "rank": 1, "basis": [[8.0]], "motif_frac": [[0.0], [1.0]]},
        {"dim": 1, "rank": 1, "basis": [[8.0]], "motif_frac": [[0.0]], "species": ["C", "O"]},
    ])
    def test_schema_violations(self, document):
        with pytest.raises(SchemaViolation):
            read_native(json.dumps(document))

    def test_invalid_json(self):
        with pytest.raises(SchemaViolation):
            read_native("{not json")

    def test_distribution_round_trip(self, s_half):
        dist = psd(s_half, 4)
        doc = NativeDistribution.from_distribution(dist, "PSD", id=s_half.id)
        [back] = read_distributions(write_distributions([doc]))
        assert back.invariant == "PSD"
        assert same_distribution(back.to_distribution(), dist)

    def test_distribution_weight_mismatch(self):
        text = json.dumps({"invariant": "PSD", "n_points": 2, "weights": [1.0], "rows": [[1.0], [2.0]]})
        with pytest.raises(SchemaViolation):
            read_distributions(text)

    def test_distribution_weights_must_sum_to_one(self):
        [doc] = read_distributions(json.dumps(
            {"invariant": "PSD", "n_points": 2, "weights": [0.5, 0.4], "rows": [[1.0], [2.0]]}
        ))
        with pytest.raises(SchemaViolation):
            doc.to_distribution()


class TestReaders:
    """Test file discovery and per-file error handling."""

    @pytest.fixture
    def folder(self, tmp_path):
        (tmp_path / "salt.cif").write_text(ROCKSALT)
        (tmp_path / "single.json").write_text(json.dumps(
            {"dim": 1, "rank": 1, "basis": [[8.0]], "motif_frac": [[0.0], [0.5]]}
        ))
        (tmp_path / "pair.json").write_text(write_native([sequence_s(0.5), sequence_s(0.2)]).replace(
            '"S(0.5)"', "null"
        ))
        nested = tmp_path / "nested"
        nested.mkdir()
        (nested / "broken.cif").write_text("data_broken\n")
        (nested / "notes.txt").write_text("ignored")
        return tmp_path

    def test_names_unnamed_sets_after_file(self, folder):
        assert [ps.id for ps in read_structures(folder / "single.json")] == ["single"]
        assert [ps.id for ps in read_structures(folder / "pair.json")] == ["pair#0", "S(0.2)"]

    def test_unsupported_suffix(self, folder):
        with pytest.raises(InputError):
            read_structures(folder / "nested" / "notes.txt")

    def test_directory_is_searched_recursively(self, folder):
        found = expand_inputs([str(folder)])
        assert [p.name for p in found] == ["broken.cif", "pair.json", "salt.cif", "single.json"]

    def test_globs_and_repeats(self, folder):
        found = expand_inputs([str(folder / "*.json"), str(folder / "single.json")])
        assert [p.name for p in found] == ["pair.json", "single.json"]

    def test_failures_are_quarantined(self, folder):
        sets, failures = load_inputs([str(folder)], max_concurrency=2)
        assert sorted(ps.id for ps in sets) == ["S(0.2)", "pair#0", "rocksalt", "single"]
        assert len(failures) == 1
        assert failures[0][0].endswith("broken.cif")
        assert "CifParseError" in failures[0][1] or "MissingCellParameter" in failures[0][1]

    def test_no_matching_files(self, tmp_path):
        with pytest.raises(InputError):
            load_inputs([str(tmp_path / "*.cif")])
