# =========================
# EMOSKIT/SCHEMAS/EXPERIMENT.PY
# =========================
"""
Experiment configuration and the score table it produces.

The configuration mirrors the TOML file section by section; every field has
a default so an empty file describes the reference LHPC 4:1 experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .emos import EmosVariant, FitRecord
from .inference import MIN_DM_LENGTH
from .scoring import ScoreConfig
from .selection import ScopeMode


# =========================
# CONFIG SECTIONS
# =========================


class DataSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Path | None = None
    observations: Path | None = None
    forecasts: Path | None = None
    stations: Path | None = None
    orographic_correction: bool = True

    def paths(self) -> tuple[Path, Path, Path]:
        """(observations, forecasts, stations); explicit paths win over the directory."""
        base = self.directory
        names = {"observations": "observations.csv", "forecasts": "forecasts.csv", "stations": "stations.csv"}
        resolved = []
        for key, default in names.items():
            explicit = getattr(self, key)
            if explicit is not None:
                resolved.append(explicit)
            elif base is not None:
                resolved.append(base / default)
            else:
                raise ValueError(f"no path for {key}: set data.directory or data.{key}")
        return resolved[0], resolved[1], resolved[2]


class Mixture(BaseModel):
    """A cost-equivalent member mixture (M_L, M_H)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    low: int = Field(ge=0)
    high: int = Field(ge=0)

    @model_validator(mode="after")
    def _nonempty(self) -> "Mixture":
        if self.low + self.high < 1:
            raise ValueError("a mixture needs at least one member")
        return self

    @property
    def name(self) -> str:
        return f"({self.low},{self.high})"

    @classmethod
    def parse(cls, text: str) -> "Mixture":
        try:
            low, high = (int(part) for part in text.strip().strip("()").split(","))
        except ValueError:
            raise ValueError(f"mixture must look like '(M_L,M_H)', got {text!r}") from None
        return cls(low=low, high=high)

    def sizes(self, low_label: str, high_label: str) -> dict[str, int]:
        return {high_label: self.high, low_label: self.low}


def _default_mixtures() -> list[Mixture]:
    pairs = [(0, 50), (40, 40), (120, 20), (160, 10), (200, 0)]
    return [Mixture(low=low, high=high) for low, high in pairs]


class ScenarioSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    high_label: str = "H"
    low_label: str = "L"
    mixtures: list[Mixture] = Field(default_factory=_default_mixtures, min_length=1)
    cost_ratio: float | None = Field(default=None, gt=0.0)
    budget: float | None = Field(default=None, gt=0.0)
    reference: str | None = None
    random_subset: bool = False

    @model_validator(mode="after")
    def _consistent(self) -> "ScenarioSection":
        if self.high_label == self.low_label:
            raise ValueError("high and low resolution labels must differ")
        names = [m.name for m in self.mixtures]
        if len(set(names)) != len(names):
            raise ValueError("mixtures must be distinct")
        if self.budget is not None:
            if self.cost_ratio is None:
                raise ValueError("a budget needs scenario.cost_ratio")
            over = [m.name for m in self.mixtures if m.low + m.high * self.cost_ratio > self.budget + 1e-9]
            if over:
                raise ValueError(f"mixtures {over} exceed the budget {self.budget}")
        if self.reference is not None and self.reference not in names:
            raise ValueError(f"reference {self.reference!r} is not one of the mixtures {names}")
        return self

    @property
    def reference_mixture(self) -> Mixture:
        """Declared reference, else the pure high-resolution mixture, else the first one."""
        if self.reference is not None:
            return next(m for m in self.mixtures if m.name == self.reference)
        pure_high = [m for m in self.mixtures if m.low == 0]
        return pure_high[0] if pure_high else self.mixtures[0]


class TrainingSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: ScopeMode = ScopeMode.SEMI_LOCAL
    n_days: int = Field(default=30, ge=1)
    k_clusters: int = Field(default=200, ge=1)
    seed: int = 0
    lead_times: list[int] | None = None
    recluster_each_window: bool = False
    cluster_per_configuration: bool = False


class EmosSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: EmosVariant = EmosVariant.DUAL
    nonnegative_b: bool = False
    refine: bool = True
    max_iter: int = Field(default=500, ge=1)
    warm_start: bool = True


class VerificationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: date | None = None
    end: date | None = None
    station_equal: bool = False

    @model_validator(mode="after")
    def _ordered(self) -> "VerificationSection":
        if self.start is not None and self.end is not None and self.end < self.start:
            raise ValueError("verification end precedes start")
        return self


class InferenceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    replicates: int = Field(default=2000, ge=100)
    mean_block_length: float | Literal["auto"] | None = None
    level: float = Field(default=0.95, gt=0.0, lt=1.0)
    dm_max_lag: int | None = Field(default=None, ge=0)
    significance_level: float = Field(default=0.05, gt=0.0, lt=1.0)
    min_station_pairs: int = Field(default=20, ge=MIN_DM_LENGTH)

    @field_validator("mean_block_length")
    @classmethod
    def _block(cls, v: float | str | None) -> float | str | None:
        if isinstance(v, float) and v < 1.0:
            raise ValueError("mean block length must be at least 1")
        return v


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Path = Path("results")


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: DataSection = Field(default_factory=DataSection)
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    emos: EmosSection = Field(default_factory=EmosSection)
    scores: ScoreConfig = Field(default_factory=ScoreConfig)
    verification: VerificationSection = Field(default_factory=VerificationSection)
    inference: InferenceSection = Field(default_factory=InferenceSection)
    output: OutputSection = Field(default_factory=OutputSection)


# =========================
# RESULTS
# =========================

SUMMARY_COLUMNS = [
    "configuration",
    "forecast",
    "lead_days",
    "metric",
    "level",
    "mean",
    "ci_lower",
    "ci_upper",
    "skill",
    "diff",
    "diff_lower",
    "diff_upper",
    "dm_statistic",
    "dm_p_value",
    "n_days",
    "n_cases",
]


@dataclass
class ScoreTable:
    """Scores of one experiment at three levels of aggregation.

    ``cases``: one row per (configuration, forecast, lead_days, date, station_id).
    ``daily``: mean over stations per (configuration, forecast, lead_days, date).
    ``summary``: one row per (configuration, forecast, lead_days, metric, level)
    with bootstrap interval, skill and DM test against the reference.
    ``significance``: per lead, the share of stations whose mean CRPS differs
    significantly between two configurations.
    """

    cases: pd.DataFrame
    daily: pd.DataFrame
    summary: pd.DataFrame
    reference: str
    configurations: list[str] = field(default_factory=list)
    lead_times: list[int] = field(default_factory=list)
    fits: list[FitRecord] = field(default_factory=list)
    significance: dict[int, pd.DataFrame] = field(default_factory=dict)

    def row(self, configuration: str, forecast: str, lead_days: int, metric: str, level: float | None = None) -> pd.Series:
        s = self.summary
        mask = (
            (s["configuration"] == configuration)
            & (s["forecast"] == forecast)
            & (s["lead_days"] == lead_days)
            & (s["metric"] == metric)
        )
        mask &= s["level"].isna() if level is None else (s["level"] - level).abs() < 1e-12
        found = s[mask]
        if len(found) != 1:
            raise KeyError(f"no unique row for {configuration} {forecast} lead {lead_days} {metric} {level}")
        return found.iloc[0]


__all__ = [
    "DataSection",
    "Mixture",
    "ScenarioSection",
    "TrainingSection",
    "EmosSection",
    "VerificationSection",
    "InferenceSection",
    "OutputSection",
    "ExperimentConfig",
    "SUMMARY_COLUMNS",
    "ScoreTable",
]
