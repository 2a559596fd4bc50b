# =========================
# EMOSKIT/SCHEMAS/SYNTH.PY
# =========================
"""
Synthetic dual-resolution data configuration.

Defaults give a high-resolution group ``H`` (4 cost units per member) and a
low-resolution group ``L`` (1 unit) whose ensemble-mean RMSE is about 0.05 K
higher and whose mean ensemble variance is about 0.1 K^2 lower than H's.
"""

from __future__ import annotations

from datetime import date

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .dataset import MAX_LEAD_DAYS, MIN_LEAD_DAYS
from .emos import EmosParameters, EmosVariant


class GroupSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    label: str = Field(min_length=1)
    n_members: int = Field(ge=0, le=255)
    bias: float = 0.0
    error_sd: float = Field(gt=0.0)
    spread_sd: float = Field(gt=0.0)
    cost_per_member: float = Field(default=1.0, gt=0.0)


class ExactEmosSpec(BaseModel):
    """Observation model N(a + sum b_k f_k, c + d S^2) for the recovery oracle."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    a: float = 2.0
    b: dict[str, float] = Field(default_factory=lambda: {"H": 1.0})
    c: float = Field(default=1.0, gt=0.0)
    d: float = Field(default=0.5, ge=0.0)


class GroundTruthParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    a: float
    b: dict[str, float]
    c: float
    d: float

    def as_parameters(self, labels: list[str]) -> EmosParameters:
        variant = EmosVariant.DUAL if len(labels) == 2 else EmosVariant.GROUPED
        return EmosParameters(
            variant=variant,
            labels=list(labels),
            a=self.a,
            b=[self.b.get(label, 0.0) for label in labels],
            c=self.c,
            d=self.d,
        )


def _default_groups() -> list[GroupSpec]:
    return [
        GroupSpec(label="H", n_members=50, bias=1.0, error_sd=1.5, spread_sd=0.75, cost_per_member=4.0),
        GroupSpec(label="L", n_members=200, bias=1.0, error_sd=1.56, spread_sd=0.68, cost_per_member=1.0),
    ]


class SynthConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_stations: int = Field(default=20, ge=1)
    n_days: int = Field(default=120, ge=1)
    start_date: date = date(2020, 6, 1)
    lead_times: list[int] = Field(default_factory=lambda: [1])
    truth_ar1_coefficient: float = Field(default=0.7, gt=-1.0, lt=1.0)
    climate_mean: float = 288.0
    climate_station_sd: float = Field(default=5.0, ge=0.0)
    anomaly_sd: float = Field(default=3.0, gt=0.0)
    station_bias_spread: float = Field(default=0.5, ge=0.0)
    # growth of error and spread per lead day beyond the first
    lead_growth: float = Field(default=0.1, ge=0.0)
    # correlation of ensemble-mean errors across groups
    error_correlation: float = Field(default=0.8, ge=0.0, le=1.0)
    # log-sd of the per-case spread multiplier
    spread_variability: float = Field(default=0.5, ge=0.0)
    elevation_difference_sd: float = Field(default=150.0, ge=0.0)
    groups: list[GroupSpec] = Field(default_factory=_default_groups, min_length=1)
    exact_emos: ExactEmosSpec | None = None
    seed: int = 0

    @field_validator("lead_times")
    @classmethod
    def _leads(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one lead time required")
        if any(not (MIN_LEAD_DAYS <= lead <= MAX_LEAD_DAYS) for lead in v):
            raise ValueError(f"lead times must lie in {MIN_LEAD_DAYS}..{MAX_LEAD_DAYS}")
        if len(set(v)) != len(v):
            raise ValueError("lead times must be distinct")
        return sorted(v)

    @model_validator(mode="after")
    def _check(self) -> "SynthConfig":
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError("group labels must be distinct")
        if sum(g.n_members for g in self.groups) < 1:
            raise ValueError("at least one ensemble member required")
        if self.exact_emos is not None:
            if len(self.lead_times) != 1:
                raise ValueError("exact EMOS mode takes a single lead time")
            if sum(g.n_members for g in self.groups) < 2:
                raise ValueError("exact EMOS mode needs at least two members for the ensemble variance")
            unknown = set(self.exact_emos.b) - set(labels)
            if unknown:
                raise ValueError(f"exact EMOS coefficients for unknown groups {sorted(unknown)}")
        return self

    def group(self, label: str) -> GroupSpec:
        for spec in self.groups:
            if spec.label == label:
                return spec
        raise ValueError(f"unknown group {label!r}")


__all__ = ["GroupSpec", "ExactEmosSpec", "GroundTruthParams", "SynthConfig"]
