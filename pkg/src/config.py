"""Configuration management for perinv."""

import os
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings

from src.errors import ConfigurationError
from src.metrics.ground import GroundMetric

load_dotenv()


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Concurrency
    threads: int = Field(default=os.cpu_count() or 1, alias="PERINV_THREADS")

    # Invariant defaults
    default_h: int = Field(default=2, alias="PERINV_DEFAULT_H")
    default_k: int = Field(default=100, alias="PERINV_DEFAULT_K")
    default_ground: str = Field(default="linf", alias="PERINV_GROUND")
    default_invariant: Literal["pdd", "pda"] = Field(default="pda", alias="PERINV_INVARIANT")

    # Tolerances
    collapse_tol: float = Field(default=1e-10, alias="PERINV_COLLAPSE_TOL")  # Angstrom, entrywise
    site_tol: float = Field(default=1e-4, alias="PERINV_SITE_TOL")          # fractional, CIF site merging

    # Near-duplicate thresholds in Angstrom; 1e-10 is float noise, 1e-2 experimental noise
    threshold_ladder: List[float] = Field(
        default=[1e-10, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
        alias="PERINV_THRESHOLDS",
    )

    # Logging
    log_level: str = Field(default="INFO", alias="PERINV_LOG_LEVEL")

    class Config:
        env_file = ".env"
        case_sensitive = False


class InvariantConfig(BaseModel):
    """Which invariant to compute and how to compare it."""

    h: int = Field(default=2, ge=1)
    k: int = Field(default=100, ge=1)
    ground: GroundMetric = GroundMetric()
    invariant: Literal["pdd", "pda"] = "pda"
    collapse: bool = False
    collapse_tol: float = Field(default=1e-10, ge=0)

    model_config = {"frozen": True}

    @field_validator("ground", mode="before")
    @classmethod
    def _parse_ground(cls, value):
        if isinstance(value, str):
            return GroundMetric.parse(value)
        return value

    @classmethod
    def build(cls, **values) -> "InvariantConfig":
        """
        Validated config; pydantic failures surface as ConfigurationError.

        Unset fields fall back to the environment defaults in ``settings``.
        """
        defaults = {
            "h": settings.default_h,
            "k": settings.default_k,
            "ground": settings.default_ground,
            "invariant": settings.default_invariant,
            "collapse_tol": settings.collapse_tol,
        }
        defaults.update({key: value for key, value in values.items() if value is not None})
        try:
            return cls(**defaults)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid invariant configuration: {e}") from e


class CliConfig(BaseModel):
    """Validated command-line options of one invocation."""

    command: Literal["invariant", "compare", "nn", "dedup", "reconstruct1d", "asymptote"]
    inputs: List[str] = Field(default_factory=list)
    against: List[str] = Field(default_factory=list)
    invariant_config: InvariantConfig
    kind: Optional[Literal["pdd", "pdd-concat", "pda", "pda-concat", "amd", "ada", "moments", "psd"]] = None
    moments_t: int = Field(default=3, ge=1)
    thresholds: List[float] = Field(default_factory=lambda: list(settings.threshold_ladder), min_length=1)
    top: int = Field(default=5, ge=1)
    seed: Optional[int] = None
    perturb: Optional[float] = Field(default=None, ge=0)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    pairs_out: Optional[str] = None
    counts_out: Optional[str] = None
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    site_tol: float = Field(default_factory=lambda: settings.site_tol, gt=0)

    @field_validator("thresholds")
    @classmethod
    def _positive_thresholds(cls, values: List[float]) -> List[float]:
        if any(not t > 0 for t in values):
            raise ValueError(f"thresholds must be positive, got {values}")
        return sorted(values)

    @classmethod
    def build(cls, **values) -> "CliConfig":
        """Validated options; pydantic failures surface as ConfigurationError."""
        try:
            return cls(**{key: value for key, value in values.items() if value is not None})
        except ValidationError as e:
            raise ConfigurationError(f"Invalid options: {e}") from e


# Global settings instance
settings = Settings()
