"""Native JSON format for periodic sets and computed distributions.

A structure document:

    {"id": "S(0.5)", "dim": 1, "rank": 1, "basis": [[8.0]],
     "motif_frac": [[0.0], [0.0625], [0.5]], "species": null}

A file holds one document or a list of them. A distribution document
(written by ``invariant --format json``, read by ``reconstruct1d``):

    {"id": "S(0.5)", "invariant": "PSD", "order": 1, "n_points": 4,
     "weights": [0.25, ...], "rows": [[...], ...]}
"""

import json
import logging
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from src.errors import InputError, SchemaViolation
from src.geometry.periodic_set import PeriodicSet, make_periodic_set
from src.invariants.distribution import WeightedRowDistribution

logger = logging.getLogger(__name__)


class NativeStructure(BaseModel):
    """Schema of one periodic set."""

    id: Optional[str] = None
    dim: int = Field(ge=1)
    rank: int = Field(ge=0)
    basis: List[List[float]]
    motif_frac: List[List[float]] = Field(min_length=1)
    species: Optional[List[str]] = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.rank > self.dim:
            raise ValueError(f"rank {self.rank} exceeds dim {self.dim}")
        if len(self.basis) != self.rank or any(len(v) != self.dim for v in self.basis):
            raise ValueError(f"basis must be {self.rank} vectors of length {self.dim}")
        if any(len(p) != self.dim for p in self.motif_frac):
            raise ValueError(f"motif_frac rows must have length {self.dim}")
        if self.species is not None and len(self.species) != len(self.motif_frac):
            raise ValueError("species must label every motif point")
        return self

    def to_periodic_set(self) -> PeriodicSet:
        try:
            return make_periodic_set(
                self.dim, self.rank, self.basis, self.motif_frac, species=self.species, id=self.id
            )
        except InputError as e:
            raise SchemaViolation(f"Structure {self.id}: {e}") from e

    @classmethod
    def from_periodic_set(cls, ps: PeriodicSet) -> "NativeStructure":
        return cls(
            id=ps.id,
            dim=ps.dim,
            rank=ps.rank,
            basis=ps.basis.tolist(),
            motif_frac=ps.motif_frac.tolist(),
            species=list(ps.species) if ps.species is not None else None,
        )


class NativeDistribution(BaseModel):
    """Schema of one weighted row distribution."""

    id: Optional[str] = None
    invariant: str
    order: int = Field(default=1, ge=1)
    n_points: int = Field(ge=1)
    weights: List[float] = Field(min_length=1)
    rows: List[List[float]] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.rows) != len(self.weights):
            raise ValueError(f"{len(self.weights)} weights for {len(self.rows)} rows")
        if len({len(r) for r in self.rows}) != 1:
            raise ValueError("rows must have equal length")
        return self

    def to_distribution(self) -> WeightedRowDistribution:
        try:
            return WeightedRowDistribution(
                weights=np.array(self.weights, dtype=float),
                values=np.array(self.rows, dtype=float),
                n_points=self.n_points,
                collapsed=len(self.rows) < self.n_points,
                order=self.order,
            )
        except InputError as e:
            raise SchemaViolation(f"Distribution {self.id}: {e}") from e

    @classmethod
    def from_distribution(cls, dist: WeightedRowDistribution, invariant: str,
                          id: Optional[str] = None) -> "NativeDistribution":
        return cls(
            id=id,
            invariant=invariant,
            order=dist.order,
            n_points=dist.n_points,
            weights=dist.weights.tolist(),
            rows=dist.values.tolist(),
        )


def _load(text: str) -> list:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"Invalid JSON at line {e.lineno}: {e.msg}") from e
    return payload if isinstance(payload, list) else [payload]


def read_native(text: str) -> List[PeriodicSet]:
    """
    Periodic sets from native JSON text (one document or a list).

    Raises:
        SchemaViolation: On invalid JSON, a schema mismatch or an invalid set
    """
    sets = []
    for position, item in enumerate(_load(text)):
        try:
            doc = NativeStructure.model_validate(item)
        except ValidationError as e:
            raise SchemaViolation(f"Document {position}: {e}") from e
        sets.append(doc.to_periodic_set())
    logger.debug(f"Read {len(sets)} native structures")
    return sets


def write_native(sets: Union[PeriodicSet, List[PeriodicSet]]) -> str:
    """Native JSON text; a single set is written as one document."""
    if isinstance(sets, PeriodicSet):
        return NativeStructure.from_periodic_set(sets).model_dump_json(indent=2)
    return json.dumps([NativeStructure.from_periodic_set(ps).model_dump() for ps in sets], indent=2)


def read_distributions(text: str) -> List[NativeDistribution]:
    """
    Distribution documents from JSON text.

    Raises:
        SchemaViolation: On invalid JSON or a schema mismatch
    """
    docs = []
    for position, item in enumerate(_load(text)):
        try:
            docs.append(NativeDistribution.model_validate(item))
        except ValidationError as e:
            raise SchemaViolation(f"Document {position}: {e}") from e
    return docs


def write_distributions(docs: List[NativeDistribution]) -> str:
    return json.dumps([doc.model_dump() for doc in docs], indent=2)
