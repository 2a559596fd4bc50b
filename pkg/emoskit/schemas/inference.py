# =========================
# EMOSKIT/SCHEMAS/INFERENCE.PY
# =========================

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import SeriesAlignmentError

# shortest series the Diebold-Mariano test accepts
MIN_DM_LENGTH = 10


@dataclass(frozen=True, slots=True, eq=False)
class ScoreSeries:
    """Time-ordered daily scores of one forecast system."""

    label: str
    values: np.ndarray
    dates: tuple[date, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).ravel()
        dates = tuple(self.dates)
        if values.size != len(dates):
            raise SeriesAlignmentError(
                f"series {self.label!r}: {values.size} values for {len(dates)} dates", label=self.label
            )
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise SeriesAlignmentError(f"series {self.label!r} dates are not strictly increasing", label=self.label)
        if not np.all(np.isfinite(values)):
            raise SeriesAlignmentError(f"series {self.label!r} contains non-finite scores", label=self.label)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", dates)

    @classmethod
    def from_pairs(cls, label: str, pairs: Sequence[tuple[date, float]]) -> "ScoreSeries":
        ordered = sorted(pairs, key=lambda item: item[0])
        return cls(label, np.array([v for _, v in ordered], dtype=float), tuple(d for d, _ in ordered))

    def __len__(self) -> int:
        return self.values.size

    @property
    def has_gaps(self) -> bool:
        """True if some day inside the span has no score."""
        return any(b - a != timedelta(days=1) for a, b in zip(self.dates, self.dates[1:]))

    def restrict(self, dates: Sequence[date]) -> "ScoreSeries":
        wanted = set(dates)
        keep = np.array([d in wanted for d in self.dates], dtype=bool)
        return ScoreSeries(self.label, self.values[keep], tuple(d for d, k in zip(self.dates, keep) if k))


class DmFlag(str, Enum):
    OK = "OK"
    DEGENERATE_ZERO_VARIANCE = "DEGENERATE_ZERO_VARIANCE"


class DmResult(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    n: int = Field(ge=1)
    max_lag: int = Field(ge=0)
    mean_difference: float
    flag: DmFlag = DmFlag.OK

    def rejects(self, level: float) -> bool:
        return self.p_value < level


class BootstrapStatistic(str, Enum):
    MEAN = "mean"
    MEAN_DIFFERENCE = "mean_difference"
    SKILL = "skill"
    RMSE = "rmse"
    RMSE_DIFFERENCE = "rmse_difference"

    @property
    def paired(self) -> bool:
        return self is not BootstrapStatistic.MEAN and self is not BootstrapStatistic.RMSE


class BootstrapCi(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    point: float
    lower: float
    upper: float
    level: float = Field(default=0.95, gt=0.0, lt=1.0)
    replicates: int = Field(default=2000, ge=100)
    mean_block_length: float = Field(ge=1.0)
    statistic: BootstrapStatistic = BootstrapStatistic.MEAN

    @model_validator(mode="after")
    def _ordered(self) -> "BootstrapCi":
        if self.lower > self.upper:
            raise ValueError(f"interval bounds out of order: [{self.lower}, {self.upper}]")
        return self


__all__ = ["MIN_DM_LENGTH", "ScoreSeries", "DmFlag", "DmResult", "BootstrapStatistic", "BootstrapCi"]
