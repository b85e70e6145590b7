"""Ground metrics between rows of equal length."""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, field_validator
from scipy.spatial.distance import cdist

from src.errors import ConfigurationError, LengthMismatch

logger = logging.getLogger(__name__)


class GroundMetric(BaseModel):
    """
    Minkowski L_q metric (1 <= q <= inf) or Root Mean Square.

    RMS(u, v) = L_2(u, v) / sqrt(k) for vectors of length k.
    """

    kind: Literal["lq", "rms"] = "lq"
    q: float = math.inf

    model_config = {"frozen": True}

    @field_validator("q")
    @classmethod
    def _q_at_least_one(cls, q: float) -> float:
        if not q >= 1:
            raise ValueError(f"q must be >= 1, got {q}")
        return q

    @classmethod
    def parse(cls, text: str) -> "GroundMetric":
        """
        Parse ``linf``, ``l2``, ``l1``, ``q:<r>`` or ``rms``.

        Raises:
            ConfigurationError: Unknown selector or q < 1
        """
        key = text.strip().lower()
        try:
            if key == "rms":
                return cls(kind="rms", q=2.0)
            if key in ("linf", "inf", "chebyshev"):
                return cls(kind="lq", q=math.inf)
            if key.startswith("q:"):
                return cls(kind="lq", q=float(key[2:]))
            if key.startswith("l") and key[1:].replace(".", "", 1).isdigit():
                return cls(kind="lq", q=float(key[1:]))
        except ValueError as e:
            raise ConfigurationError(f"Invalid ground metric {text!r}: {e}") from e
        raise ConfigurationError(f"Unknown ground metric {text!r} (use linf, l2, q:<r> or rms)")

    @property
    def name(self) -> str:
        if self.kind == "rms":
            return "rms"
        if math.isinf(self.q):
            return "linf"
        return f"l{self.q:g}"

    def is_chebyshev(self) -> bool:
        return self.kind == "lq" and math.isinf(self.q)

    def cost_matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pairwise ground distances between rows of ``a`` and rows of ``b``."""
        if a.shape[1] != b.shape[1]:
            raise LengthMismatch(f"Rows of length {a.shape[1]} and {b.shape[1]}")
        if self.kind == "rms":
            return cdist(a, b, metric="euclidean") / math.sqrt(a.shape[1])
        if math.isinf(self.q):
            return cdist(a, b, metric="chebyshev")
        if self.q == 1:
            return cdist(a, b, metric="cityblock")
        return cdist(a, b, metric="minkowski", p=self.q)


LINF = GroundMetric(kind="lq", q=math.inf)
RMS = GroundMetric(kind="rms", q=2.0)


def ground_distance(u, v, g: GroundMetric) -> float:
    """
    Distance between two k-vectors under a ground metric.

    Raises:
        LengthMismatch: If the vectors differ in length
    """
    u = np.asarray(u, dtype=float).reshape(1, -1)
    v = np.asarray(v, dtype=float).reshape(1, -1)
    if u.shape != v.shape:
        raise LengthMismatch(f"Vectors of length {u.shape[1]} and {v.shape[1]}")
    return float(g.cost_matrix(u, v)[0, 0])
