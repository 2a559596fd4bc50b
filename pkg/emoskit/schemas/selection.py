# =========================
# EMOSKIT/SCHEMAS/SELECTION.PY
# =========================

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FEATURE_QUANTILES = 12
FEATURE_LENGTH = 2 * FEATURE_QUANTILES


class ScopeMode(str, Enum):
    LOCAL = "LOCAL"
    REGIONAL = "REGIONAL"
    SEMI_LOCAL = "SEMI_LOCAL"

    @classmethod
    def _missing_(cls, value: object):
        # config files may use lower case
        if isinstance(value, str):
            return cls.__members__.get(value.upper())
        return None


REGIONAL_SCOPE_ID = "global"


class TrainingScope(BaseModel):
    """Which stations feed a training window.

    ``scope_id`` is the station id (LOCAL), ``"global"`` (REGIONAL) or the
    cluster index as text (SEMI_LOCAL).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: ScopeMode
    scope_id: str = Field(min_length=1)

    @model_validator(mode="after")
    def _check_id(self) -> "TrainingScope":
        if self.mode is ScopeMode.REGIONAL and self.scope_id != REGIONAL_SCOPE_ID:
            raise ValueError(f"regional scope id must be {REGIONAL_SCOPE_ID!r}")
        if self.mode is ScopeMode.SEMI_LOCAL and not self.scope_id.isdigit():
            raise ValueError("semi-local scope id must be a cluster index")
        return self

    @classmethod
    def local(cls, station_id: str) -> "TrainingScope":
        return cls(mode=ScopeMode.LOCAL, scope_id=station_id)

    @classmethod
    def regional(cls) -> "TrainingScope":
        return cls(mode=ScopeMode.REGIONAL, scope_id=REGIONAL_SCOPE_ID)

    @classmethod
    def cluster(cls, index: int) -> "TrainingScope":
        return cls(mode=ScopeMode.SEMI_LOCAL, scope_id=str(int(index)))

    @property
    def cluster_index(self) -> int | None:
        return int(self.scope_id) if self.mode is ScopeMode.SEMI_LOCAL else None


class StationFeatures(BaseModel):
    """Climatology quantiles followed by ensemble-mean error quantiles."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    station_id: str
    vector: list[float] = Field(min_length=FEATURE_LENGTH, max_length=FEATURE_LENGTH)

    @field_validator("vector")
    @classmethod
    def _monotone_blocks(cls, v: list[float]) -> list[float]:
        for block in (v[:FEATURE_QUANTILES], v[FEATURE_QUANTILES:]):
            if any(b < a for a, b in zip(block, block[1:])):
                raise ValueError("feature quantile blocks must be nondecreasing")
        return v


class ClusterAssignment(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    k: int = Field(ge=1)
    assignment: dict[str, int]
    centroids: list[list[float]]
    objective_history: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_partition(self) -> "ClusterAssignment":
        if len(self.centroids) != self.k:
            raise ValueError(f"{len(self.centroids)} centroids for k={self.k}")
        if any(not (0 <= idx < self.k) for idx in self.assignment.values()):
            raise ValueError("cluster index out of range")
        if self.assignment and set(self.assignment.values()) != set(range(self.k)):
            raise ValueError("every cluster must hold at least one station")
        return self

    def cluster_of(self, station_id: str) -> int:
        try:
            return self.assignment[station_id]
        except KeyError:
            raise ValueError(f"station {station_id!r} has no cluster") from None

    def members(self, index: int) -> list[str]:
        return [sid for sid, idx in self.assignment.items() if idx == index]


__all__ = [
    "FEATURE_QUANTILES",
    "FEATURE_LENGTH",
    "REGIONAL_SCOPE_ID",
    "ScopeMode",
    "TrainingScope",
    "StationFeatures",
    "ClusterAssignment",
]
