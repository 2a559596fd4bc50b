"""Station feature vectors and k-means clustering for semi-local training."""

from __future__ import annotations

import logging
from datetime import date, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import ClusteringError, DatasetError
from ..schemas.dataset import Dataset, StationMeta
from ..schemas.selection import FEATURE_LENGTH, FEATURE_QUANTILES, ClusterAssignment, StationFeatures
from .dataset import collect_cases
from .scoring import empirical_quantiles

logger = logging.getLogger(__name__)

FEATURE_LEVELS = np.arange(1, FEATURE_QUANTILES + 1) / (FEATURE_QUANTILES + 1)
DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 300


def station_features(
    station: StationMeta,
    obs_history: Sequence[float],
    ensemble_mean_errors: Sequence[float],
) -> StationFeatures:
    """Quantiles at levels i/13 of the climatology and of (ensemble mean - observation)."""
    climate = np.asarray(obs_history, dtype=float)
    errors = np.asarray(ensemble_mean_errors, dtype=float)
    if climate.size == 0 or errors.size == 0:
        raise ClusteringError("feature series must be nonempty", station=station.station_id)
    vector = np.concatenate([empirical_quantiles(climate, FEATURE_LEVELS), empirical_quantiles(errors, FEATURE_LEVELS)])
    return StationFeatures(station_id=station.station_id, vector=[float(v) for v in vector])


def dataset_features(
    dataset: Dataset,
    target_init_time: date,
    lead_time: int,
    n: int,
    *,
    station_ids: Sequence[str] | None = None,
) -> list[StationFeatures]:
    """Features of every station over the ``n`` training days before ``target_init_time``."""
    days = [target_init_time - timedelta(days=offset) for offset in range(n, 0, -1)]
    cases, _ = collect_cases(dataset, days, lead_time, station_ids)
    climate: dict[str, list[float]] = {}
    errors: dict[str, list[float]] = {}
    for case in cases:
        sid = case.forecast.station_id
        obs = case.observation.value
        climate.setdefault(sid, []).append(obs)
        errors.setdefault(sid, []).append(float(case.forecast.all_members().mean()) - obs)

    wanted = list(station_ids) if station_ids is not None else list(dataset.station_ids)
    missing = [sid for sid in wanted if sid not in climate]
    if missing:
        raise ClusteringError(
            f"{len(missing)} stations have no training cases for clustering",
            stations=missing[:10],
            target_date=target_init_time.isoformat(),
            lead=lead_time,
        )
    return [station_features(dataset.station(sid), climate[sid], errors[sid]) for sid in wanted]


# --- k-means ---


def _standardize(x: np.ndarray) -> np.ndarray:
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return (x - x.mean(axis=0)) / scale


def _sq_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((x[:, np.newaxis, :] - centroids[np.newaxis, :, :]) ** 2).sum(axis=2)


def _seed_centroids(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++: each next seed drawn with probability proportional to squared distance."""
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        closest = np.minimum(closest, ((x - x[idx]) ** 2).sum(axis=1))
    return x[chosen].copy()


def _repair_empty(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int) -> None:
    """Move the farthest point of the largest cluster into each empty cluster (in place)."""
    for empty in np.flatnonzero(np.bincount(labels, minlength=k) == 0):
        counts = np.bincount(labels, minlength=k)
        largest = int(np.argmax(counts))
        idx = np.flatnonzero(labels == largest)
        dist = ((x[idx] - centroids[largest]) ** 2).sum(axis=1)
        point = idx[int(np.argmax(dist))]
        labels[point] = empty
        centroids[empty] = x[point]


def _lloyd(x: np.ndarray, centroids: np.ndarray, k: int, max_iter: int) -> tuple[np.ndarray, np.ndarray, list[float]]:
    labels = np.full(x.shape[0], -1)
    history: list[float] = []
    for _ in range(max_iter):
        new_labels = np.argmin(_sq_distances(x, centroids), axis=1)
        _repair_empty(x, new_labels, centroids, k)
        for j in range(k):
            centroids[j] = x[new_labels == j].mean(axis=0)
        history.append(float(((x - centroids[new_labels]) ** 2).sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids, history


def kmeans_cluster(
    features: Sequence[StationFeatures],
    k: int,
    seed: int,
    *,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ClusterAssignment:
    """Lloyd k-means on standardized features; best of ``restarts`` seeded runs.

    Centroids are reported in the original feature units.
    """
    if k < 1:
        raise ClusteringError(f"k must be positive, got {k}")
    if len(features) < k:
        raise ClusteringError(f"{len(features)} stations cannot form {k} clusters", k=k, stations=len(features))
    raw = np.array([f.vector for f in features], dtype=float)
    x = _standardize(raw)
    rng = np.random.default_rng(seed)

    best: tuple[float, np.ndarray, list[float]] | None = None
    for _ in range(max(1, restarts)):
        labels, _, history = _lloyd(x, _seed_centroids(x, k, rng), k, max_iter)
        if best is None or history[-1] < best[0]:
            best = (history[-1], labels, history)
    assert best is not None
    _, labels, history = best

    centroids = np.vstack([raw[labels == j].mean(axis=0) for j in range(k)])
    logger.info("k-means: %d stations, k=%d, objective %.4f", len(features), k, history[-1])
    return ClusterAssignment(
        k=k,
        assignment={f.station_id: int(label) for f, label in zip(features, labels)},
        centroids=centroids.tolist(),
        objective_history=history,
    )


# --- CSV files ---


def write_assignment(assignment: ClusterAssignment, path: Path | str, centroids_path: Path | str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {"station_id": list(assignment.assignment), "cluster_idx": list(assignment.assignment.values())}
    )
    frame.to_csv(path, index=False)
    if centroids_path is not None:
        columns = [f"f{i}" for i in range(len(assignment.centroids[0]))]
        centroid_frame = pd.DataFrame(assignment.centroids, columns=columns)
        centroid_frame.insert(0, "cluster_idx", range(assignment.k))
        centroid_frame.to_csv(Path(centroids_path), index=False, float_format="%.17g")
    return path


def read_assignment(path: Path | str, centroids_path: Path | str | None = None) -> ClusterAssignment:
    path = Path(path)
    frame = pd.read_csv(path, dtype={"station_id": str})
    if list(frame.columns) != ["station_id", "cluster_idx"]:
        raise DatasetError(f"expected columns station_id,cluster_idx, got {','.join(frame.columns)}", path=path)
    assignment = {str(sid): int(idx) for sid, idx in zip(frame["station_id"], frame["cluster_idx"])}
    k = max(assignment.values()) + 1 if assignment else 0
    if centroids_path is not None:
        cframe = pd.read_csv(Path(centroids_path)).sort_values("cluster_idx")
        centroids = cframe.drop(columns="cluster_idx").to_numpy(dtype=float).tolist()
        k = len(centroids)
    else:
        centroids = [[0.0] * FEATURE_LENGTH for _ in range(k)]
    try:
        return ClusterAssignment(k=k, assignment=assignment, centroids=centroids)
    except ValueError as exc:
        raise DatasetError(f"invalid cluster assignment: {exc}", path=path) from exc


__all__ = [
    "FEATURE_LEVELS",
    "station_features",
    "dataset_features",
    "kmeans_cluster",
    "write_assignment",
    "read_assignment",
]
