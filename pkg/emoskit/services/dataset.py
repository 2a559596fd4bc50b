from __future__ import annotations

import logging
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..errors import DatasetError, DuplicateRecordError, EmptyWindowError, UnknownStationError
from ..schemas.dataset import (
    MAX_LEAD_DAYS,
    MIN_LEAD_DAYS,
    Dataset,
    GroupedEnsembleForecast,
    Observation,
    StationMeta,
    TrainingCase,
    TrainingWindow,
)

logger = logging.getLogger(__name__)

LAPSE_RATE_K_PER_M = 0.0065

STATION_COLUMNS = ["station_id", "lat", "lon", "station_elev_m", "model_elev_m"]
OBSERVATION_COLUMNS = ["station_id", "valid_time", "value_k"]
FORECAST_COLUMNS = ["station_id", "init_time", "lead_days", "group", "member_idx", "value_k"]

STATIONS_FILE = "stations.csv"
OBSERVATIONS_FILE = "observations.csv"
FORECASTS_FILE = "forecasts.csv"


# --- ingestion helpers ---


def _line(row_index: int) -> int:
    # Header is line 1.
    return int(row_index) + 2


def _read_table(path: Path, columns: list[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DatasetError("file not found", path=path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DatasetError(f"unreadable CSV: {exc}", path=path) from exc
    header = [str(c).strip() for c in frame.columns]
    if header != columns:
        raise DatasetError(f"expected header {','.join(columns)}, got {','.join(header)}", path=path, line=1)
    frame.columns = header
    return frame.reset_index(drop=True)


def _to_float(value: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        return float("nan")


def _float_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    # Python's float() parses repr() output exactly, which keeps write/read round trips bit-exact.
    values = np.array([_to_float(v) for v in frame[column]], dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise DatasetError(f"column {column!r}: not a finite number: {frame[column].iat[i]!r}", path=path, line=_line(i))
    return values


def _int_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    out = np.empty(len(frame), dtype=np.int64)
    for i, raw in enumerate(frame[column]):
        try:
            out[i] = int(str(raw).strip())
        except ValueError:
            raise DatasetError(f"column {column!r}: not a whole number: {raw!r}", path=path, line=_line(i)) from None
    return out


def _time_column(frame: pd.DataFrame, column: str, path: Path) -> list[datetime]:
    parsed = pd.to_datetime(frame[column], format="ISO8601", errors="coerce")
    bad = np.flatnonzero(parsed.isna().to_numpy())
    if bad.size:
        i = int(bad[0])
        raise DatasetError(f"column {column!r}: not an ISO-8601 date-time: {frame[column].iat[i]!r}", path=path, line=_line(i))
    if parsed.dt.tz is not None:
        parsed = parsed.dt.tz_convert("UTC").dt.tz_localize(None)
    return list(parsed.dt.to_pydatetime())


def _id_column(frame: pd.DataFrame, column: str, path: Path) -> list[str]:
    ids = [str(v).strip() for v in frame[column]]
    for i, value in enumerate(ids):
        if not value:
            raise DatasetError(f"column {column!r} is empty", path=path, line=_line(i))
    return ids


def _load_stations(path: Path) -> list[StationMeta]:
    frame = _read_table(path, STATION_COLUMNS)
    ids = _id_column(frame, "station_id", path)
    lat = _float_column(frame, "lat", path)
    lon = _float_column(frame, "lon", path)
    z_station = _float_column(frame, "station_elev_m", path)
    z_model = _float_column(frame, "model_elev_m", path)

    stations: list[StationMeta] = []
    seen: set[str] = set()
    for i, sid in enumerate(ids):
        if sid in seen:
            raise DuplicateRecordError(f"duplicate station {sid!r}", path=path, line=_line(i))
        seen.add(sid)
        try:
            stations.append(
                StationMeta(
                    station_id=sid,
                    latitude=float(lat[i]),
                    longitude=float(lon[i]),
                    station_elevation=float(z_station[i]),
                    model_elevation=float(z_model[i]),
                )
            )
        except ValidationError as exc:
            raise DatasetError(f"invalid station: {exc.errors()[0]['msg']}", path=path, line=_line(i)) from exc
    return stations


def _load_observations(path: Path, known: set[str]) -> list[Observation]:
    frame = _read_table(path, OBSERVATION_COLUMNS)
    ids = _id_column(frame, "station_id", path)
    times = _time_column(frame, "valid_time", path)
    values = _float_column(frame, "value_k", path)

    observations: list[Observation] = []
    seen: set[tuple[str, datetime]] = set()
    for i, sid in enumerate(ids):
        if sid not in known:
            raise UnknownStationError(f"unknown station_id {sid!r}", path=path, line=_line(i))
        key = (sid, times[i])
        if key in seen:
            raise DuplicateRecordError(f"duplicate observation {sid} {times[i].isoformat()}", path=path, line=_line(i))
        seen.add(key)
        observations.append(Observation(sid, times[i], float(values[i])))
    return observations


def _load_forecasts(path: Path, known: set[str]) -> list[GroupedEnsembleForecast]:
    frame = _read_table(path, FORECAST_COLUMNS)
    ids = _id_column(frame, "station_id", path)
    inits = _time_column(frame, "init_time", path)
    leads = _int_column(frame, "lead_days", path)
    labels = _id_column(frame, "group", path)
    member_idx = _int_column(frame, "member_idx", path)
    values = _float_column(frame, "value_k", path)

    n = len(frame)
    seen: set[tuple] = set()
    for i in range(n):
        if ids[i] not in known:
            raise UnknownStationError(f"unknown station_id {ids[i]!r}", path=path, line=_line(i))
        if not (MIN_LEAD_DAYS <= leads[i] <= MAX_LEAD_DAYS):
            raise DatasetError(
                f"lead_days {leads[i]} outside {MIN_LEAD_DAYS}-{MAX_LEAD_DAYS}", path=path, line=_line(i)
            )
        key = (ids[i], inits[i], int(leads[i]), labels[i], int(member_idx[i]))
        if key in seen:
            raise DuplicateRecordError(
                f"duplicate member {labels[i]}[{member_idx[i]}] for {ids[i]} {inits[i].isoformat()} lead {leads[i]}",
                path=path,
                line=_line(i),
            )
        seen.add(key)

    # Groups keep the order in which their labels first appear in the file.
    group_rank = {label: r for r, label in enumerate(dict.fromkeys(labels))}
    order = sorted(range(n), key=lambda i: (ids[i], inits[i], leads[i], group_rank[labels[i]], member_idx[i]))

    forecasts: list[GroupedEnsembleForecast] = []
    start = 0
    while start < n:
        head = order[start]
        case_key = (ids[head], inits[head], leads[head])
        stop = start
        groups: list[tuple[str, list[float]]] = []
        while stop < n:
            j = order[stop]
            if (ids[j], inits[j], leads[j]) != case_key:
                break
            if not groups or groups[-1][0] != labels[j]:
                groups.append((labels[j], []))
            groups[-1][1].append(values[j])
            stop += 1
        forecasts.append(
            GroupedEnsembleForecast(
                station_id=case_key[0],
                init_time=case_key[1],
                lead_time=int(case_key[2]),
                groups=tuple((label, np.asarray(vals, dtype=float)) for label, vals in groups),
            )
        )
        start = stop
    return forecasts


def load_dataset(
    observations_path: Path | str,
    forecasts_path: Path | str,
    stations_path: Path | str,
) -> Dataset:
    """Read the three CSV files into a cross-referenced, immutable dataset."""
    stations = _load_stations(Path(stations_path))
    known = {s.station_id for s in stations}
    observations = _load_observations(Path(observations_path), known)
    forecasts = _load_forecasts(Path(forecasts_path), known)
    logger.info(
        "Loaded %d stations, %d observations, %d forecasts",
        len(stations),
        len(observations),
        len(forecasts),
    )
    return Dataset.build(stations, observations, forecasts)


def load_dataset_dir(directory: Path | str) -> Dataset:
    directory = Path(directory)
    return load_dataset(directory / OBSERVATIONS_FILE, directory / FORECASTS_FILE, directory / STATIONS_FILE)


def write_dataset(dataset: Dataset, directory: Path | str) -> tuple[Path, Path, Path]:
    """Write the dataset in the ingest schemas; floats use ``repr`` so a reload is bit-exact."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    stations = pd.DataFrame(
        [
            [s.station_id, repr(s.latitude), repr(s.longitude), repr(s.station_elevation), repr(s.model_elevation)]
            for s in dataset.stations
        ],
        columns=STATION_COLUMNS,
    )
    observations = pd.DataFrame(
        [[o.station_id, o.valid_time.isoformat(), repr(float(o.value))] for o in dataset.observations],
        columns=OBSERVATION_COLUMNS,
    )
    rows: list[list[object]] = []
    for fc in dataset.forecasts:
        init = fc.init_time.isoformat()
        for label, members in fc.groups:
            for idx, value in enumerate(members.tolist()):
                rows.append([fc.station_id, init, int(fc.lead_time), label, idx, repr(value)])
    forecasts = pd.DataFrame(rows, columns=FORECAST_COLUMNS)

    paths = (directory / STATIONS_FILE, directory / OBSERVATIONS_FILE, directory / FORECASTS_FILE)
    for frame, path in zip((stations, observations, forecasts), paths):
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.info("Wrote dataset to %s", directory)
    return paths


# --- orographic correction ---


def orographic_correction(raw_member, station_elevation: float, model_elevation: float):
    """Lapse-rate adjustment; stations below the model surface are warmed.

    Works on scalars and numpy arrays alike.
    """
    dz = station_elevation - model_elevation
    return raw_member - LAPSE_RATE_K_PER_M * dz


def apply_orographic_correction(dataset: Dataset) -> Dataset:
    forecasts: list[GroupedEnsembleForecast] = []
    for fc in dataset.forecasts:
        station = dataset.station(fc.station_id)
        shift = float(orographic_correction(0.0, station.station_elevation, station.model_elevation))
        forecasts.append(fc if shift == 0.0 else fc.map_members(shift))
    return Dataset(dataset.stations, dataset.observations, tuple(forecasts))


# --- training windows ---


def collect_cases(
    dataset: Dataset,
    init_dates: Iterable[date],
    lead_time: int,
    station_ids: Sequence[str] | None = None,
) -> tuple[list[TrainingCase], int]:
    """Forecast/observation pairs for the given days, plus the number dropped for missing observations."""
    wanted = set(station_ids) if station_ids is not None else None
    cases: list[TrainingCase] = []
    dropped = 0
    for day in init_dates:
        for fc in dataset.forecasts_for(day, lead_time):
            if wanted is not None and fc.station_id not in wanted:
                continue
            obs = dataset.observation(fc.station_id, fc.valid_time)
            if obs is None:
                dropped += 1
                continue
            cases.append(TrainingCase(fc, obs))
    return cases, dropped


def build_training_window(
    dataset: Dataset,
    target_init_time: date,
    lead_time: int,
    n: int,
    station_ids: Sequence[str] | None = None,
    scope_id: str = "",
) -> TrainingWindow:
    """Cases initialized in the ``n`` days strictly before ``target_init_time``."""
    if n < 1:
        raise DatasetError(f"training window length must be >= 1, got {n}")
    if isinstance(target_init_time, datetime):
        target_init_time = target_init_time.date()
    days = [target_init_time - timedelta(days=offset) for offset in range(n, 0, -1)]
    cases, dropped = collect_cases(dataset, days, lead_time, station_ids)
    if dropped:
        logger.warning(
            "Training window %s lead %d (%s): dropped %d cases without observation",
            target_init_time,
            lead_time,
            scope_id or "all",
            dropped,
        )
    if not cases:
        raise EmptyWindowError(
            f"no usable training cases before {target_init_time} for lead {lead_time} ({n} days)",
            target_date=target_init_time.isoformat(),
            lead_days=lead_time,
            scope_id=scope_id or None,
        )
    return TrainingWindow(
        target_init_time=target_init_time,
        lead_time=int(lead_time),
        length_days=int(n),
        cases=tuple(cases),
        dropped_cases=dropped,
        scope_id=scope_id,
    )


__all__ = [
    "LAPSE_RATE_K_PER_M",
    "STATIONS_FILE",
    "OBSERVATIONS_FILE",
    "FORECASTS_FILE",
    "load_dataset",
    "load_dataset_dir",
    "write_dataset",
    "orographic_correction",
    "apply_orographic_correction",
    "collect_cases",
    "build_training_window",
]
