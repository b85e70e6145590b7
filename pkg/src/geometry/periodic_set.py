"""Finite and l-periodic point sets.

A periodic set is a finite motif of points translated by every vector of
an l-dimensional lattice in R^n. Motif coordinates are stored fractional
along the l basis vectors, followed by absolute coordinates along an
orthonormal complement of the lattice span (the n - l non-periodic
directions). A finite set has rank 0 and no basis.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma

from src.errors import (
    DimensionMismatch,
    DuplicateMotifPoint,
    InputError,
    NotFullRank,
    RankDeficientBasis,
)

logger = logging.getLogger(__name__)

EPS_RANK = 1e-12      # relative Gram determinant below which a basis is singular
EPS_POINT = 1e-12     # motif points closer than 2 * EPS_POINT are duplicates
EPS_WRAP = 1e-12      # fractional values within this of 1.0 wrap to 0.0


@dataclass(frozen=True, eq=False)
class PeriodicSet:
    """Immutable periodic point set.

    Attributes:
        dim: Ambient dimension n
        rank: Number of independent periods l (0 for a finite set)
        basis: l x n array of lattice basis vectors (Angstrom)
        motif_frac: m x n array; first l columns fractional in [0, 1),
            remaining columns absolute along the lattice complement
        species: Optional element label per motif point
        id: Optional identifier carried through reports
    """

    dim: int
    rank: int
    basis: np.ndarray
    motif_frac: np.ndarray
    species: Optional[Tuple[str, ...]] = None
    id: Optional[str] = None

    @property
    def m(self) -> int:
        """Number of motif points."""
        return self.motif_frac.shape[0]

    @property
    def is_full_rank(self) -> bool:
        return self.rank == self.dim

    @cached_property
    def complement(self) -> np.ndarray:
        """(n - l) x n orthonormal rows spanning the non-periodic directions."""
        return _orthonormal_complement(self.basis, self.dim)

    @cached_property
    def motif(self) -> np.ndarray:
        """m x n Cartesian coordinates of the motif points."""
        periodic = self.motif_frac[:, :self.rank] @ self.basis
        free = self.motif_frac[:, self.rank:] @ self.complement
        return periodic + free

    @cached_property
    def dual_basis(self) -> np.ndarray:
        """n x l matrix mapping Cartesian vectors to fractional coordinates."""
        if self.rank == 0:
            return np.zeros((self.dim, 0))
        return np.linalg.pinv(self.basis)

    @cached_property
    def cell_volume(self) -> float:
        """l-dimensional volume of the unit cell (0 for finite sets)."""
        if self.rank == 0:
            return 0.0
        return float(math.sqrt(abs(np.linalg.det(self.basis @ self.basis.T))))

    def label(self) -> str:
        return self.id if self.id is not None else "<unnamed>"


@dataclass(frozen=True)
class Ball:
    """Closed ball B(center; radius)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise InputError(f"Ball radius must be non-negative, got {self.radius}")


def _orthonormal_complement(basis: np.ndarray, dim: int) -> np.ndarray:
    """
    Orthonormal rows completing the span of ``basis`` to R^n.

    Gram-Schmidt over the basis rows followed by the standard unit vectors in
    order, so the result is deterministic (e.g. basis [[4, 0]] gives [[0, 1]]).
    """
    ortho = []
    for vector in itertools.chain(basis, np.eye(dim)):
        residual = np.array(vector, dtype=float)
        for unit in ortho:
            residual = residual - np.dot(residual, unit) * unit
        norm = np.linalg.norm(residual)
        if norm > 1e-6 * max(1.0, float(np.linalg.norm(vector))):
            ortho.append(residual / norm)
        if len(ortho) == dim:
            break
    rank = basis.shape[0]
    return np.array(ortho[rank:], dtype=float).reshape(dim - rank, dim)


def _canonicalize(motif_frac: np.ndarray, rank: int) -> np.ndarray:
    """Reduce the periodic columns mod 1, snapping values near 1.0 to 0.0."""
    frac = motif_frac.copy()
    periodic = frac[:, :rank]
    periodic -= np.floor(periodic)
    periodic[np.abs(periodic - 1.0) <= EPS_WRAP] = 0.0
    periodic[np.abs(periodic) <= EPS_WRAP] = 0.0
    frac[:, :rank] = periodic
    return frac


def _check_duplicates(ps: PeriodicSet) -> None:
    """Reject motif points that coincide modulo the lattice."""
    if ps.m < 2:
        return
    i, j = np.triu_indices(ps.m, k=1)
    diff = ps.motif_frac[i] - ps.motif_frac[j]
    diff[:, :ps.rank] -= np.round(diff[:, :ps.rank])
    cart = diff[:, :ps.rank] @ ps.basis + diff[:, ps.rank:] @ ps.complement
    gaps = np.linalg.norm(cart, axis=1)
    worst = int(np.argmin(gaps))
    if gaps[worst] <= 2 * EPS_POINT:
        raise DuplicateMotifPoint(
            f"Motif points {i[worst]} and {j[worst]} of {ps.label()} coincide"
        )


def make_periodic_set(
    dim: int,
    rank: int,
    basis: Sequence,
    motif: Sequence,
    species: Optional[Sequence[str]] = None,
    id: Optional[str] = None,
) -> PeriodicSet:
    """
    Build a validated, canonicalized periodic set.

    Args:
        dim: Ambient dimension n >= 1
        rank: Number of periods l with 0 <= l <= n
        basis: l vectors of length n
        motif: m points of length n, fractional along the basis then absolute
        species: Optional m element labels
        id: Optional identifier

    Returns:
        PeriodicSet with periodic coordinates reduced to [0, 1)

    Raises:
        DimensionMismatch: Shapes inconsistent with dim/rank, or empty motif
        RankDeficientBasis: Basis vectors linearly dependent
        DuplicateMotifPoint: Two motif points coincide modulo the lattice
    """
    if dim < 1 or not 0 <= rank <= dim:
        raise DimensionMismatch(f"Need dim >= 1 and 0 <= rank <= dim, got dim={dim}, rank={rank}")

    basis_arr = np.array(basis, dtype=float) if rank > 0 else np.zeros((0, dim))
    if basis_arr.shape != (rank, dim):
        raise DimensionMismatch(f"Basis must be {rank}x{dim}, got shape {basis_arr.shape}")

    if rank > 0:
        gram = basis_arr @ basis_arr.T
        scale = float(np.prod(np.diag(gram)))
        if scale == 0.0 or np.linalg.det(gram) <= EPS_RANK * scale:
            raise RankDeficientBasis(f"Basis vectors are linearly dependent: {basis_arr.tolist()}")

    motif_arr = np.asarray(motif, dtype=float)
    if motif_arr.ndim == 1 and dim == 1:
        motif_arr = motif_arr.reshape(-1, 1)
    if motif_arr.ndim != 2 or motif_arr.shape[0] == 0 or motif_arr.shape[1] != dim:
        raise DimensionMismatch(f"Motif must be a non-empty m x {dim} array, got shape {motif_arr.shape}")

    species_tuple = None
    if species is not None:
        species_tuple = tuple(str(s) for s in species)
        if len(species_tuple) != motif_arr.shape[0]:
            raise DimensionMismatch(
                f"Got {len(species_tuple)} species labels for {motif_arr.shape[0]} motif points"
            )

    basis_arr.setflags(write=False)
    frac = _canonicalize(motif_arr, rank)
    frac.setflags(write=False)

    ps = PeriodicSet(dim=dim, rank=rank, basis=basis_arr, motif_frac=frac, species=species_tuple, id=id)
    _check_duplicates(ps)
    return ps


def from_cartesian(
    basis: Sequence,
    points: Sequence,
    dim: Optional[int] = None,
    species: Optional[Sequence[str]] = None,
    id: Optional[str] = None,
) -> PeriodicSet:
    """
    Build a periodic set from Cartesian motif points.

    The rank is the number of basis rows; pass ``basis=[]`` and ``dim`` for a
    finite set.
    """
    points_arr = np.asarray(points, dtype=float)
    if points_arr.ndim == 1:
        points_arr = points_arr.reshape(-1, 1)
    dim = dim if dim is not None else points_arr.shape[1]
    basis_arr = np.asarray(basis, dtype=float).reshape(-1, dim)
    rank = basis_arr.shape[0]
    if rank > 0:
        frac_periodic = points_arr @ np.linalg.pinv(basis_arr)
    else:
        frac_periodic = np.zeros((points_arr.shape[0], 0))
    free = points_arr @ _orthonormal_complement(basis_arr, dim).T
    motif = np.hstack([frac_periodic, free])
    return make_periodic_set(dim, rank, basis_arr, motif, species=species, id=id)


def with_id(ps: PeriodicSet, new_id: Optional[str]) -> PeriodicSet:
    return make_periodic_set(ps.dim, ps.rank, ps.basis, ps.motif_frac, ps.species, new_id)


def apply_isometry(ps: PeriodicSet, rotation: np.ndarray, translation: np.ndarray) -> PeriodicSet:
    """Image of ``ps`` under x -> R x + t (R orthogonal, possibly a reflection)."""
    rotation = np.asarray(rotation, dtype=float)
    translation = np.asarray(translation, dtype=float)
    points = ps.motif @ rotation.T + translation
    basis = ps.basis @ rotation.T
    if ps.rank == 0:
        basis = np.zeros((0, ps.dim))
    return from_cartesian(basis, points, dim=ps.dim, species=ps.species, id=ps.id)


def supercell(ps: PeriodicSet, factors: Sequence[int]) -> PeriodicSet:
    """
    Same infinite set described with a larger cell.

    Basis vector i is scaled by ``factors[i]``; the motif grows by the
    product of the factors.
    """
    factors = [int(f) for f in factors]
    if len(factors) != ps.rank or any(f < 1 for f in factors):
        raise InputError(f"Need {ps.rank} positive supercell factors, got {factors}")
    offsets = np.array(list(itertools.product(*(range(f) for f in factors))), dtype=float)
    offsets = offsets.reshape(-1, ps.rank)
    scale = np.array(factors, dtype=float)

    frac_periodic = (ps.motif_frac[None, :, :ps.rank] + offsets[:, None, :]) / scale
    free = np.broadcast_to(ps.motif_frac[None, :, ps.rank:], (len(offsets), ps.m, ps.dim - ps.rank))
    motif = np.concatenate([frac_periodic, free], axis=2).reshape(-1, ps.dim)
    species = None if ps.species is None else ps.species * len(offsets)
    basis = ps.basis * scale[:, None]
    return make_periodic_set(ps.dim, ps.rank, basis, motif, species=species, id=ps.id)


def perturb(ps: PeriodicSet, epsilon: float, seed: Optional[int] = None) -> PeriodicSet:
    """
    Displace every motif point by an independent uniform vector in B(0; epsilon).

    The basis is unchanged and the output is deterministic given ``seed``.
    """
    if epsilon < 0:
        raise InputError(f"Perturbation radius must be non-negative, got {epsilon}")
    if epsilon == 0:
        return ps

    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((ps.m, ps.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = epsilon * rng.random(ps.m) ** (1.0 / ps.dim)
    displacement = directions * radii[:, None]

    frac = np.array(ps.motif_frac)
    frac[:, :ps.rank] += displacement @ ps.dual_basis
    frac[:, ps.rank:] += displacement @ ps.complement.T
    return make_periodic_set(ps.dim, ps.rank, ps.basis, frac, species=ps.species, id=ps.id)


def cell_diagonal(ps: PeriodicSet) -> float:
    """Longest diagonal of the unit cell: max over signs of |sum of +-v_i|."""
    if ps.rank == 0:
        return 0.0
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=ps.rank)))
    return float(np.max(np.linalg.norm(signs @ ps.basis, axis=1)))


def unit_ball_volume(n: int) -> float:
    """V_n = pi^(n/2) / Gamma(n/2 + 1)."""
    return float(math.pi ** (n / 2) / gamma(n / 2 + 1))


def ppc(ps: PeriodicSet) -> float:
    """
    Point Packing Coefficient (vol[U] / (m * V_n))^(1/n).

    Raises:
        NotFullRank: If the set is not periodic in every direction
    """
    if not ps.is_full_rank:
        raise NotFullRank(f"PPC needs rank == dim, {ps.label()} has rank {ps.rank} in dimension {ps.dim}")
    return (ps.cell_volume / (ps.m * unit_ball_volume(ps.dim))) ** (1.0 / ps.dim)
