# =========================
# EMOSKIT/SCHEMAS/DATASET.PY
# =========================
"""
Station-matched forecast data model.

``StationMeta`` is a pydantic model (it is read from a small metadata file and
validated field by field). Observations, forecasts and training windows are
frozen slotted dataclasses: a verification run holds hundreds of thousands of
them, and their invariants are checked once in ``__post_init__``.

Forecasts are keyed by (station, init date, lead); the daily cycle hour is
carried in ``init_time`` but never interpreted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import DatasetError, DuplicateRecordError, UnknownStationError


MIN_LEAD_DAYS = 1
MAX_LEAD_DAYS = 15


class StationMeta(BaseModel):
    """One observing site with the elevation of its matched model grid point."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    station_id: str = Field(min_length=1)
    latitude: float = Field(ge=-90.0, le=90.0)
    longitude: float = Field(ge=-180.0, lt=180.0)
    station_elevation: float
    model_elevation: float

    @field_validator("station_elevation", "model_elevation")
    @classmethod
    def _finite_elevation(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("elevation must be finite")
        return v

    @property
    def elevation_difference(self) -> float:
        """Station minus model elevation (m); negative below the model surface."""
        return self.station_elevation - self.model_elevation


@dataclass(frozen=True, slots=True)
class Observation:
    station_id: str
    valid_time: datetime
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise DatasetError(f"observation for {self.station_id} at {self.valid_time} is not finite")


def _readonly(values: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True, eq=False)
class GroupedEnsembleForecast:
    """Members partitioned into exchangeable groups; absent groups are omitted."""

    station_id: str
    init_time: datetime
    lead_time: int
    groups: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self) -> None:
        if not (MIN_LEAD_DAYS <= int(self.lead_time) <= MAX_LEAD_DAYS):
            raise DatasetError(f"lead time {self.lead_time} outside {MIN_LEAD_DAYS}-{MAX_LEAD_DAYS} days")
        cleaned: list[tuple[str, np.ndarray]] = []
        seen: set[str] = set()
        for label, members in self.groups:
            if label in seen:
                raise DatasetError(f"group {label!r} listed twice for {self.station_id} {self.init_time}")
            seen.add(label)
            arr = members if isinstance(members, np.ndarray) and not members.flags.writeable else _readonly(members)
            if arr.ndim != 1 or arr.size == 0:
                raise DatasetError(f"group {label!r} of {self.station_id} {self.init_time} has no members")
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"non-finite member in group {label!r} of {self.station_id} {self.init_time}")
            cleaned.append((label, arr))
        if not cleaned:
            raise DatasetError(f"forecast {self.station_id} {self.init_time} has no members")
        object.__setattr__(self, "groups", tuple(cleaned))

    @property
    def init_date(self) -> date:
        return self.init_time.date()

    @property
    def valid_time(self) -> datetime:
        return self.init_time + timedelta(days=int(self.lead_time))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.groups)

    def group(self, label: str) -> np.ndarray | None:
        for name, arr in self.groups:
            if name == label:
                return arr
        return None

    def all_members(self) -> np.ndarray:
        return np.concatenate([arr for _, arr in self.groups])

    def map_members(self, shift: float) -> "GroupedEnsembleForecast":
        return GroupedEnsembleForecast(
            station_id=self.station_id,
            init_time=self.init_time,
            lead_time=self.lead_time,
            groups=tuple((label, _readonly(arr + shift)) for label, arr in self.groups),
        )

    def subset(self, sizes: Mapping[str, int], rng: np.random.Generator | None = None) -> "GroupedEnsembleForecast":
        """Keep the first ``sizes[label]`` members of each group (seeded random subset if ``rng``)."""
        kept: list[tuple[str, np.ndarray]] = []
        for label, arr in self.groups:
            size = int(sizes.get(label, 0))
            if size == 0:
                continue
            if size > arr.size:
                raise DatasetError(
                    f"{self.station_id} {self.init_time} lead {self.lead_time}: group {label!r} "
                    f"has {arr.size} members, {size} requested"
                )
            if rng is None:
                chosen = arr[:size]
            else:
                chosen = arr[np.sort(rng.choice(arr.size, size=size, replace=False))]
            kept.append((label, _readonly(chosen)))
        missing = [label for label, size in sizes.items() if size > 0 and label not in self.labels]
        if missing:
            raise DatasetError(f"{self.station_id} {self.init_time}: groups {missing} not present")
        return GroupedEnsembleForecast(self.station_id, self.init_time, self.lead_time, tuple(kept))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupedEnsembleForecast):
            return NotImplemented
        if (self.station_id, self.init_time, self.lead_time, self.labels) != (
            other.station_id,
            other.init_time,
            other.lead_time,
            other.labels,
        ):
            return False
        return all(np.array_equal(a, b) for (_, a), (_, b) in zip(self.groups, other.groups))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, slots=True)
class TrainingCase:
    forecast: GroupedEnsembleForecast
    observation: Observation

    def __post_init__(self) -> None:
        if self.forecast.station_id != self.observation.station_id:
            raise DatasetError("forecast and observation belong to different stations")
        if self.forecast.valid_time != self.observation.valid_time:
            raise DatasetError(
                f"observation valid at {self.observation.valid_time}, forecast valid at {self.forecast.valid_time}"
            )


@dataclass(frozen=True, slots=True)
class TrainingWindow:
    target_init_time: date
    lead_time: int
    length_days: int
    cases: tuple[TrainingCase, ...]
    dropped_cases: int = 0
    scope_id: str = ""

    def __post_init__(self) -> None:
        if self.length_days < 1:
            raise DatasetError("training window length must be at least one day")
        first = self.target_init_time - timedelta(days=self.length_days)
        for case in self.cases:
            init = case.forecast.init_date
            if not (first <= init < self.target_init_time):
                raise DatasetError(f"case initialized {init} outside window [{first}, {self.target_init_time})")
            if case.forecast.lead_time != self.lead_time:
                raise DatasetError("training window mixes lead times")

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def observations(self) -> np.ndarray:
        return np.array([case.observation.value for case in self.cases], dtype=float)

    @property
    def station_ids(self) -> tuple[str, ...]:
        return tuple(case.forecast.station_id for case in self.cases)

    def describe(self) -> dict[str, object]:
        return {
            "scope_id": self.scope_id,
            "target_date": self.target_init_time.isoformat(),
            "lead_days": self.lead_time,
            "length_days": self.length_days,
            "n_cases": len(self.cases),
        }


@dataclass(frozen=True)
class Dataset:
    """Immutable, cross-referenced collection of stations, observations and forecasts."""

    stations: tuple[StationMeta, ...]
    observations: tuple[Observation, ...]
    forecasts: tuple[GroupedEnsembleForecast, ...]
    _station_index: dict[str, StationMeta] = field(init=False, repr=False, compare=False)
    _obs_index: dict[tuple[str, datetime], Observation] = field(init=False, repr=False, compare=False)
    _fc_index: dict[tuple[str, date, int], GroupedEnsembleForecast] = field(init=False, repr=False, compare=False)
    _by_init: dict[tuple[date, int], tuple[GroupedEnsembleForecast, ...]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        station_index: dict[str, StationMeta] = {}
        for station in self.stations:
            if station.station_id in station_index:
                raise DuplicateRecordError(f"duplicate station {station.station_id!r}")
            station_index[station.station_id] = station

        obs_index: dict[tuple[str, datetime], Observation] = {}
        for obs in self.observations:
            if obs.station_id not in station_index:
                raise UnknownStationError(f"observation references unknown station {obs.station_id!r}")
            key = (obs.station_id, obs.valid_time)
            if key in obs_index:
                raise DuplicateRecordError(f"duplicate observation {obs.station_id} {obs.valid_time}")
            obs_index[key] = obs

        fc_index: dict[tuple[str, date, int], GroupedEnsembleForecast] = {}
        for fc in self.forecasts:
            if fc.station_id not in station_index:
                raise UnknownStationError(f"forecast references unknown station {fc.station_id!r}")
            key = (fc.station_id, fc.init_date, int(fc.lead_time))
            if key in fc_index:
                raise DuplicateRecordError(f"duplicate forecast {fc.station_id} {fc.init_time} lead {fc.lead_time}")
            fc_index[key] = fc

        order = {sid: i for i, sid in enumerate(station_index)}
        grouped: dict[tuple[date, int], list[GroupedEnsembleForecast]] = {}
        for fc in self.forecasts:
            grouped.setdefault((fc.init_date, int(fc.lead_time)), []).append(fc)
        by_init = {
            key: tuple(sorted(items, key=lambda f: order[f.station_id])) for key, items in grouped.items()
        }

        object.__setattr__(self, "_station_index", station_index)
        object.__setattr__(self, "_obs_index", obs_index)
        object.__setattr__(self, "_fc_index", fc_index)
        object.__setattr__(self, "_by_init", by_init)

    @classmethod
    def build(
        cls,
        stations: Iterable[StationMeta],
        observations: Iterable[Observation],
        forecasts: Iterable[GroupedEnsembleForecast],
    ) -> "Dataset":
        return cls(tuple(stations), tuple(observations), tuple(forecasts))

    @property
    def station_ids(self) -> tuple[str, ...]:
        return tuple(self._station_index)

    @property
    def init_dates(self) -> tuple[date, ...]:
        return tuple(sorted({key[0] for key in self._by_init}))

    @property
    def lead_times(self) -> tuple[int, ...]:
        return tuple(sorted({key[1] for key in self._by_init}))

    @property
    def group_labels(self) -> tuple[str, ...]:
        labels: dict[str, None] = {}
        for fc in self.forecasts:
            for label in fc.labels:
                labels.setdefault(label, None)
        return tuple(labels)

    def station(self, station_id: str) -> StationMeta:
        try:
            return self._station_index[station_id]
        except KeyError:
            raise UnknownStationError(f"unknown station {station_id!r}") from None

    def observation(self, station_id: str, valid_time: datetime) -> Observation | None:
        return self._obs_index.get((station_id, valid_time))

    def forecast(self, station_id: str, init_date: date, lead_time: int) -> GroupedEnsembleForecast | None:
        return self._fc_index.get((station_id, init_date, int(lead_time)))

    def forecasts_for(self, init_date: date, lead_time: int) -> tuple[GroupedEnsembleForecast, ...]:
        """Forecasts of one initialization day and lead, in station-file order."""
        return self._by_init.get((init_date, int(lead_time)), ())

    def observations_for(self, station_id: str) -> list[Observation]:
        return sorted(
            (obs for obs in self.observations if obs.station_id == station_id),
            key=lambda o: o.valid_time,
        )

    def subset_members(self, sizes: Mapping[str, int], rng: np.random.Generator | None = None) -> "Dataset":
        """Dataset restricted to a member mixture ``{group_label: M_k}``."""
        forecasts = tuple(fc.subset(sizes, rng) for fc in self.forecasts)
        return Dataset(self.stations, self.observations, forecasts)


__all__ = [
    "MIN_LEAD_DAYS",
    "MAX_LEAD_DAYS",
    "StationMeta",
    "Observation",
    "GroupedEnsembleForecast",
    "TrainingCase",
    "TrainingWindow",
    "Dataset",
]
