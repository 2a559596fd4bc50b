# =========================
# EMOSKIT/SCHEMAS/SCORING.PY
# =========================
"""
Predictive distributions and score configuration.

Percentile levels are accepted either as percentages (5, 10, ...) or as
probabilities (0.05, 0.10, ...); both are stored as probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


@dataclass(frozen=True, slots=True)
class GaussianPredictive:
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ValueError("Gaussian predictive needs finite mean and variance")
        if self.variance <= 0:
            raise ValueError(f"predictive variance must be positive, got {self.variance}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True, slots=True, eq=False)
class EmpiricalPredictive:
    members: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.members, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("empirical predictive needs at least one member")
        if not np.all(np.isfinite(arr)):
            raise ValueError("empirical predictive members must be finite")
        object.__setattr__(self, "members", arr)


def _default_bs_levels() -> list[float]:
    return [p / 100 for p in range(5, 100, 5)]


def _default_qs_levels() -> list[float]:
    return [0.02, 0.05, 0.10, 0.20, 0.50, 0.80, 0.90, 0.95, 0.98]


class ScoreConfig(BaseModel):
    """Brier thresholds (climatological percentile levels) and quantile-score levels."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    bs_threshold_levels: list[float] = Field(default_factory=_default_bs_levels, min_length=1)
    qs_levels: list[float] = Field(default_factory=_default_qs_levels, min_length=1)

    @field_validator("bs_threshold_levels", "qs_levels")
    @classmethod
    def _as_probabilities(cls, v: list[float]) -> list[float]:
        levels = [float(x) for x in v]
        if any(x > 1 for x in levels):
            levels = [x / 100 for x in levels]
        if any(not (0 < x < 1) for x in levels):
            raise ValueError("levels must lie strictly between 0 and 1 (or 0 and 100 as percentages)")
        if levels != sorted(levels):
            raise ValueError("levels must be sorted ascending")
        if len(set(levels)) != len(levels):
            raise ValueError("levels must be distinct")
        return levels


def level_name(prefix: str, level: float) -> str:
    """Column name for a level, e.g. ``qs2`` for 0.02 or ``bs50`` for 0.5."""
    pct = round(level * 100, 6)
    text = f"{pct:g}".replace(".", "p")
    return f"{prefix}{text}"


__all__ = ["GaussianPredictive", "EmpiricalPredictive", "ScoreConfig", "level_name"]
