# =========================
# EMOSKIT/SCHEMAS/EMOS.PY
# =========================
"""
EMOS model variants, fitted coefficients and ensemble summaries.

``EmosParameters.b`` is aligned with ``labels``: member labels for
NON_EXCHANGEABLE, group labels otherwise (high resolution first for the dual
variants). ``d_groups`` carries the per-group variance coefficients of
DUAL_SPLIT_VARIANCE; the pooled ``d`` is unused there and kept at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class EmosVariant(str, Enum):
    NON_EXCHANGEABLE = "NON_EXCHANGEABLE"
    GROUPED = "GROUPED"
    DUAL = "DUAL"
    DUAL_SPLIT_VARIANCE = "DUAL_SPLIT_VARIANCE"

    @classmethod
    def _missing_(cls, value: object):
        # config files may use lower case
        if isinstance(value, str):
            return cls.__members__.get(value.upper())
        return None

    @property
    def is_dual(self) -> bool:
        return self in (EmosVariant.DUAL, EmosVariant.DUAL_SPLIT_VARIANCE)


class WindowDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    scope_id: str = ""
    target_date: date
    lead_days: int = Field(ge=1)
    length_days: int = Field(ge=1)
    n_cases: int = Field(ge=1)


class EmosParameters(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: EmosVariant
    labels: list[str] = Field(min_length=1)
    a: float
    b: list[float]
    c: float
    d: float = 0.0
    d_groups: list[float] | None = None
    converged: bool = True
    objective: float | None = None
    trained_on: WindowDescriptor | None = None

    @model_validator(mode="after")
    def _check_shape(self) -> "EmosParameters":
        if len(self.b) != len(self.labels):
            raise ValueError(f"{len(self.b)} mean coefficients for {len(self.labels)} labels")
        if self.variant.is_dual and len(self.labels) != 2:
            raise ValueError(f"{self.variant.value} needs exactly two groups, got {len(self.labels)}")
        if self.variant is EmosVariant.DUAL_SPLIT_VARIANCE:
            if self.d_groups is None or len(self.d_groups) != len(self.labels):
                raise ValueError("DUAL_SPLIT_VARIANCE needs one variance coefficient per group")
        elif self.d_groups is not None:
            raise ValueError(f"{self.variant.value} takes a single pooled variance coefficient")
        values = [self.a, self.c, self.d, *self.b, *(self.d_groups or [])]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("EMOS parameters must be finite")
        return self

    def coefficient(self, label: str) -> float:
        try:
            return self.b[self.labels.index(label)]
        except ValueError:
            return 0.0

    def variance_coefficient(self, label: str) -> float:
        """Spread coefficient of one group: d_k for the split variant, the pooled d otherwise."""
        if self.d_groups is None:
            return self.d
        try:
            return self.d_groups[self.labels.index(label)]
        except ValueError:
            return 0.0


class FitRecord(BaseModel):
    """One line of a parameters file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    configuration: str = ""
    scope_id: str
    lead_days: int = Field(ge=1)
    target_date: date
    parameters: EmosParameters


@dataclass(frozen=True, slots=True, eq=False)
class EnsembleSummary:
    """Group means and variances of one forecast case (sample variances, divisor n - 1)."""

    labels: tuple[str, ...]
    group_sizes: tuple[int, ...]
    group_means: np.ndarray
    group_variances: np.ndarray
    pooled_mean: float
    pooled_variance: float
    members: np.ndarray

    def mean_of(self, label: str) -> float | None:
        if label not in self.labels:
            return None
        return float(self.group_means[self.labels.index(label)])

    def variance_of(self, label: str) -> float:
        """Group variance; 0 for absent or singleton groups."""
        if label not in self.labels:
            return 0.0
        return float(self.group_variances[self.labels.index(label)])


__all__ = ["EmosVariant", "WindowDescriptor", "EmosParameters", "FitRecord", "EnsembleSummary"]
