"""Shared fixtures."""

import pytest

from builders import lattice, planar_pair, sequence_q, sequence_s


@pytest.fixture
def s_half():
    return sequence_s(0.5)


@pytest.fixture
def q_half():
    return sequence_q(0.5)


@pytest.fixture
def square():
    return lattice("square")


@pytest.fixture
def planar():
    return planar_pair(0.25, 0.25, 0.25)
