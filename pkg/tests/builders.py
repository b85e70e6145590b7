"""Builders for the homometric sequences, the 1-periodic planar pair, lattices and random sets."""

import math

import numpy as np

from src.geometry.periodic_set import from_cartesian, make_periodic_set


def sequence_s(r: float):
    """S(r) = {0, r, 2 + r, 4} + 8Z."""
    return make_periodic_set(1, 1, [[8.0]], [[0.0], [r / 8], [(2 + r) / 8], [4 / 8]], id=f"S({r:g})")


def sequence_q(r: float):
    """Q(r) = {0, 2 + r, 4, 4 + r} + 8Z, homometric to S(r)."""
    return make_periodic_set(1, 1, [[8.0]], [[0.0], [(2 + r) / 8], [4 / 8], [(4 + r) / 8]], id=f"Q({r:g})")


def planar_pair(a: float, b: float, c: float):
    """
    Two 6-point motifs repeated along x with period 4.

    Both share A(0, a), A'(2, -a), B(b, 0), B'(2 + b, 0); S adds C(1, c),
    C'(3, -c) and Q adds D(1, -c), D'(3, c).
    """
    shared = [(0, a), (2, -a), (b, 0), (2 + b, 0)]
    s = from_cartesian([[4.0, 0.0]], shared + [(1, c), (3, -c)], dim=2, id="S")
    q = from_cartesian([[4.0, 0.0]], shared + [(1, -c), (3, c)], dim=2, id="Q")
    return s, q


SQRT3 = math.sqrt(3.0)

# (basis, point packing coefficient)
LATTICES = {
    "oblique": ([[1.25, 0.25], [0.25, 0.75]], 0.5278),
    "hexagonal": ([[1.0, 0.0], [0.5, SQRT3 / 2]], 0.5250),
    "rhombic": ([[1.0, 0.5], [1.0, -0.5]], 0.5642),
    "centered": ([[1.0, 1.5], [1.0, -1.5]], 0.9772),
    "square": ([[1.0, 0.0], [0.0, 1.0]], 0.5642),
    "rectangular": ([[2.0, 0.0], [0.0, 1.0]], 0.7979),
}


def lattice(name: str):
    basis, _ = LATTICES[name]
    return make_periodic_set(2, 2, basis, [[0.0, 0.0]], id=name)


def random_periodic_set(seed: int, dim: int = 2, m: int = 4, id: str = None):
    """Full-rank set with a well-conditioned random cell and m random motif points."""
    rng = np.random.default_rng(seed)
    basis = np.eye(dim) + rng.uniform(-0.25, 0.25, size=(dim, dim))
    basis *= rng.uniform(1.5, 3.0)
    motif = rng.random((m, dim))
    return make_periodic_set(dim, dim, basis, motif, id=id or f"random-{seed}")


def random_sequence(seed: int, m: int = 5, id: str = None):
    """1D periodic sequence of m points with distinct, well separated positions."""
    rng = np.random.default_rng(seed)
    period = rng.uniform(4.0, 10.0)
    gaps = rng.uniform(0.2, 1.0, size=m)
    positions = np.cumsum(gaps) - gaps[0]
    positions *= period * 0.9 / gaps.sum()
    return make_periodic_set(1, 1, [[period]], (positions / period).reshape(-1, 1), id=id or f"seq-{seed}")


