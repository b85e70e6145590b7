"""Tests for Pointwise Shift Distributions and sequence reconstruction."""

import numpy as np
import pytest

from builders import random_sequence
from src.errors import MalformedRow, NotOneDimensional, TooFewPoints, UnrealizablePSD
from src.geometry.periodic_set import make_periodic_set
from src.invariants.distribution import from_rows
from src.invariants.psd import (
    psd,
    psd_mirror,
    psd_mirror_distribution,
    psd_reconstruct,
    same_distribution,
    sequences_isometric,
)


def mirror(ps):
    """Reflection x -> -x of a 1D periodic set."""
    return make_periodic_set(1, 1, ps.basis, -ps.motif_frac, id=f"mirror-{ps.id}")


class TestPsd:
    """Test shift distributions of periodic and finite sequences."""

    def test_periodic_closed_form(self, s_half):
        """Right shifts of {0, 0.5, 2.5, 4} + 8Z."""
        dist = psd(s_half, 4).sorted_rows()
        expected = [
            [0.5, 2.5, 4.0, 8.0],
            [1.5, 5.5, 6.0, 8.0],
            [2.0, 3.5, 7.5, 8.0],
            [4.0, 4.5, 6.5, 8.0],
        ]
        assert np.allclose(dist.values, expected)
        assert np.allclose(dist.weights, 0.25)

    def test_last_column_is_period(self):
        """Column m of PSD(S; m) is the period for every row."""
        ps = random_sequence(3, m=6)
        dist = psd(ps, 6)
        assert np.allclose(dist.values[:, -1], ps.basis[0, 0])

    def test_more_columns_than_points(self, s_half):
        """Column m + j repeats column j shifted by the period."""
        dist = psd(s_half, 6)
        assert np.allclose(dist.values[:, 4:], dist.values[:, :2] + 8.0)

    def test_finite_rows_from_leftmost_points(self):
        """Only points with k right neighbors contribute rows."""
        ps = make_periodic_set(1, 0, [], [[0.0], [1.0], [3.0], [6.0]])
        assert psd(ps, 2).values.tolist() == [[1.0, 3.0], [2.0, 5.0]]
        assert psd(ps, 3).values.tolist() == [[1.0, 3.0, 6.0]]

    def test_finite_too_few_points(self):
        ps = make_periodic_set(1, 0, [], [[0.0], [1.0], [3.0], [6.0]])
        with pytest.raises(TooFewPoints):
            psd(ps, 4)

    def test_requires_one_dimension(self, square):
        with pytest.raises(NotOneDimensional):
            psd(square, 2)


class TestMirror:
    """Test the mirror formula on shift rows."""

    def test_two_point_row(self):
        """(1, 3) with period 3 mirrors to (2, 3)."""
        assert psd_mirror([1.0, 3.0], 3.0).tolist() == [2.0, 3.0]

    def test_matches_reflected_sequence(self, s_half):
        """Mirroring PSD rows gives the PSD of the reflected sequence."""
        mirrored = psd_mirror_distribution(psd(s_half, 4))
        assert same_distribution(mirrored, psd(mirror(s_half), 4))

    def test_rejects_wrong_period(self):
        with pytest.raises(MalformedRow):
            psd_mirror([1.0, 3.0], 4.0)

    def test_rejects_decreasing_row(self):
        with pytest.raises(MalformedRow):
            psd_mirror([3.0, 1.0, 4.0], 4.0)


class TestReconstruct:
    """Test rebuilding sequences from their shift distributions."""

    def test_rebuilds_homometric_sequence(self, q_half):
        """Q(0.5) is recovered up to translation."""
        rebuilt = psd_reconstruct(psd(q_half, 4), id="rebuilt")
        assert rebuilt.id == "rebuilt"
        assert rebuilt.basis[0, 0] == pytest.approx(8.0)
        assert sequences_isometric(rebuilt, q_half)

    @pytest.mark.parametrize("seed", range(6))
    def test_round_trip_random_sequences(self, seed):
        """psd_reconstruct inverts psd for random sequences."""
        ps = random_sequence(seed, m=5)
        rebuilt = psd_reconstruct(psd(ps, 5))
        assert same_distribution(psd(rebuilt, 5), psd(ps, 5))
        assert sequences_isometric(rebuilt, ps)

    def test_rejects_inconsistent_rows(self):
        """The row (1, 3) forces points {0, 2} + 3Z, whose PSD also has (2, 3)."""
        with pytest.raises(UnrealizablePSD):
            psd_reconstruct(from_rows(np.array([[1.0, 3.0], [1.0, 3.0]])))

    def test_rejects_non_increasing_row(self):
        with pytest.raises(UnrealizablePSD):
            psd_reconstruct(from_rows(np.array([[2.0, 2.0]])))


class TestSequencesIsometric:
    """Test the isometry decision for periodic sequences."""

    def test_reflection_is_isometry(self, s_half):
        assert sequences_isometric(s_half, mirror(s_half))

    def test_translation_is_isometry(self, s_half):
        shifted = make_periodic_set(1, 1, [[8.0]], s_half.motif_frac + 0.3)
        assert sequences_isometric(s_half, shifted)

    def test_homometric_pair_is_not(self, s_half, q_half):
        """S(0.5) and Q(0.5) share pair distances but are not isometric."""
        assert not sequences_isometric(s_half, q_half)

    def test_different_periods(self, s_half):
        stretched = make_periodic_set(1, 1, [[9.0]], s_half.motif_frac)
        assert not sequences_isometric(s_half, stretched)

    def test_different_sizes(self, s_half):
        single = make_periodic_set(1, 1, [[8.0]], [[0.0]])
        assert not sequences_isometric(s_half, single)
