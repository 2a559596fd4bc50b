"""Diebold-Mariano tests and stationary block-bootstrap intervals for score series."""

from __future__ import annotations

import logging
import math
from typing import Literal, Mapping

import numpy as np
import pandas as pd
from arch.bootstrap import optimal_block_length as arch_optimal_block_length
from scipy.stats import norm

from ..errors import EmosKitError, SeriesAlignmentError
from ..schemas.inference import MIN_DM_LENGTH, BootstrapCi, BootstrapStatistic, DmFlag, DmResult, ScoreSeries

logger = logging.getLogger(__name__)

MIN_BOOTSTRAP_LENGTH = 5
MIN_REPLICATES = 100
MIN_STATION_PAIRS = 20
# replicates drawn from one spawned random stream
REPLICATE_CHUNK = 250


def _check_aligned(a: ScoreSeries, b: ScoreSeries) -> None:
    if a.dates != b.dates:
        raise SeriesAlignmentError(
            f"series {a.label!r} and {b.label!r} cover different dates", left=len(a), right=len(b)
        )


def align(a: ScoreSeries, b: ScoreSeries) -> tuple[ScoreSeries, ScoreSeries]:
    """Restrict both series to their common dates."""
    common = sorted(set(a.dates) & set(b.dates))
    return a.restrict(common), b.restrict(common)


def autocovariances(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocovariances 0..max_lag with divisor n."""
    n = x.size
    eps = x - x.mean()
    return np.array([eps[lag:] @ eps[: n - lag] / n for lag in range(min(max_lag, n - 1) + 1)])


def default_max_lag(lead_days: int) -> int:
    return max(int(lead_days) - 1, 0)


# --- Diebold-Mariano ---


def dm_test(series_a: ScoreSeries, series_b: ScoreSeries, max_lag: int = 0) -> DmResult:
    """Two-sided test of equal mean score; positive statistic means ``series_a`` scores higher."""
    _check_aligned(series_a, series_b)
    if max_lag < 0:
        raise EmosKitError(f"max_lag must be nonnegative, got {max_lag}")
    n = len(series_a)
    if n < MIN_DM_LENGTH:
        raise SeriesAlignmentError(f"DM test needs at least {MIN_DM_LENGTH} pairs, got {n}", n=n)

    d = series_a.values - series_b.values
    d_mean = float(d.mean())
    if np.all(d == 0):
        return DmResult(statistic=0.0, p_value=1.0, n=n, max_lag=max_lag, mean_difference=0.0,
                        flag=DmFlag.DEGENERATE_ZERO_VARIANCE)

    gamma = autocovariances(d, max_lag)
    long_run = gamma[0] + 2.0 * gamma[1:].sum()
    if long_run <= 0:
        long_run = gamma[0]
    if long_run <= 0:
        statistic = math.copysign(math.inf, d_mean) if d_mean != 0 else 0.0
        return DmResult(
            statistic=statistic,
            p_value=0.0 if d_mean != 0 else 1.0,
            n=n,
            max_lag=max_lag,
            mean_difference=d_mean,
            flag=DmFlag.DEGENERATE_ZERO_VARIANCE,
        )

    statistic = math.sqrt(n) * d_mean / math.sqrt(long_run)
    p_value = float(min(1.0, 2.0 * norm.sf(abs(statistic))))
    return DmResult(statistic=statistic, p_value=p_value, n=n, max_lag=max_lag, mean_difference=d_mean)


def significance_matrix(
    score_series_by_config: Mapping[str, Mapping[str, ScoreSeries]],
    level: float = 0.05,
    *,
    max_lag: int = 0,
    min_pairs: int = MIN_STATION_PAIRS,
) -> pd.DataFrame:
    """Share of stations whose DM test rejects equal mean score, per configuration pair.

    ``score_series_by_config`` maps configuration -> station -> daily series.
    Stations with fewer than ``min_pairs`` common days (never fewer than the
    DM minimum) are left out.
    """
    configs = list(score_series_by_config)
    if not configs:
        raise SeriesAlignmentError("no configurations to compare")
    min_pairs = max(min_pairs, MIN_DM_LENGTH)
    stations = set(score_series_by_config[configs[0]])
    for name in configs[1:]:
        if set(score_series_by_config[name]) != stations:
            raise SeriesAlignmentError(
                f"configuration {name!r} covers a different station set than {configs[0]!r}", config=name
            )
    ordered_stations = sorted(stations)

    matrix = pd.DataFrame(0.0, index=configs, columns=configs)
    for i, left in enumerate(configs):
        for right in configs[i + 1 :]:
            rejected = used = 0
            for sid in ordered_stations:
                a, b = align(score_series_by_config[left][sid], score_series_by_config[right][sid])
                if len(a) < min_pairs:
                    continue
                used += 1
                if dm_test(a, b, max_lag).rejects(level):
                    rejected += 1
            dropped = len(ordered_stations) - used
            if dropped:
                logger.warning("%s vs %s: %d stations with fewer than %d pairs left out", left, right, dropped, min_pairs)
            share = rejected / used if used else math.nan
            matrix.loc[left, right] = share
            matrix.loc[right, left] = share
    return matrix


# --- stationary bootstrap ---


def optimal_block_length(x: np.ndarray) -> float:
    """Automatic mean block length for the stationary bootstrap, at least 1."""
    x = np.asarray(x, dtype=float)
    if x.size < 3 or np.ptp(x) == 0:
        return 1.0
    block = float(arch_optimal_block_length(x)["stationary"].iloc[0])
    return block if math.isfinite(block) and block > 1.0 else 1.0


def default_block_length(n: int) -> float:
    return float(math.ceil(n ** (1.0 / 3.0)))


def stationary_bootstrap_indices(n: int, replicates: int, mean_block_length: float, rng: np.random.Generator) -> np.ndarray:
    """(replicates, n) index array: each step starts a new block with probability 1/L, else continues circularly."""
    p = 1.0 / mean_block_length
    starts = rng.integers(n, size=(replicates, n))
    u = rng.random((replicates, n))
    indices = np.empty((replicates, n), dtype=np.int64)
    indices[:, 0] = starts[:, 0]
    for t in range(1, n):
        carry = (indices[:, t - 1] + 1) % n
        indices[:, t] = np.where(u[:, t] < p, starts[:, t], carry)
    return indices


def _statistic(kind: BootstrapStatistic, a: np.ndarray, b: np.ndarray | None) -> np.ndarray:
    """Statistic along the last axis; ``a``/``b`` hold per-day scores (squared errors for RMSE)."""
    if kind is BootstrapStatistic.MEAN:
        return a.mean(axis=-1)
    if kind is BootstrapStatistic.RMSE:
        return np.sqrt(a.mean(axis=-1))
    assert b is not None
    if kind is BootstrapStatistic.MEAN_DIFFERENCE:
        return a.mean(axis=-1) - b.mean(axis=-1)
    if kind is BootstrapStatistic.RMSE_DIFFERENCE:
        return np.sqrt(a.mean(axis=-1)) - np.sqrt(b.mean(axis=-1))
    ref = b.mean(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 - a.mean(axis=-1) / ref


def stationary_bootstrap_ci(
    series: ScoreSeries,
    statistic: BootstrapStatistic | str = BootstrapStatistic.MEAN,
    replicates: int = 2000,
    mean_block_length: float | Literal["auto"] | None = None,
    level: float = 0.95,
    seed: int = 0,
    *,
    reference: ScoreSeries | None = None,
) -> BootstrapCi:
    """Percentile interval from stationary block-bootstrap replicates.

    Paired statistics resample ``series`` and ``reference`` with the same
    indices. Replicates are drawn in fixed chunks from streams spawned off
    ``seed``, so results do not depend on how chunks are scheduled.
    """
    kind = BootstrapStatistic(statistic)
    n = len(series)
    if n < MIN_BOOTSTRAP_LENGTH:
        raise SeriesAlignmentError(f"bootstrap needs at least {MIN_BOOTSTRAP_LENGTH} values, got {n}", n=n)
    if replicates < MIN_REPLICATES:
        raise EmosKitError(f"at least {MIN_REPLICATES} bootstrap replicates required, got {replicates}")
    if not (0.0 < level < 1.0):
        raise EmosKitError(f"confidence level must lie in (0, 1), got {level}")
    if kind.paired:
        if reference is None:
            raise EmosKitError(f"statistic {kind.value} needs a reference series")
        _check_aligned(series, reference)

    a = series.values
    b = reference.values if reference is not None else None
    if mean_block_length is None:
        block = default_block_length(n)
    elif mean_block_length == "auto":
        block = optimal_block_length(a - b if b is not None else a)
    else:
        block = float(mean_block_length)
    if block < 1.0:
        raise EmosKitError(f"mean block length must be at least 1, got {block}")

    point = float(_statistic(kind, a, b))
    if not math.isfinite(point):
        raise EmosKitError(f"{kind.value} is undefined for series {series.label!r}")

    n_chunks = math.ceil(replicates / REPLICATE_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    values = np.empty(replicates)
    for chunk, stream in enumerate(streams):
        lo = chunk * REPLICATE_CHUNK
        size = min(REPLICATE_CHUNK, replicates - lo)
        idx = stationary_bootstrap_indices(n, size, block, np.random.default_rng(stream))
        values[lo : lo + size] = _statistic(kind, a[idx], b[idx] if b is not None else None)

    values = values[np.isfinite(values)]
    if values.size == 0:
        raise EmosKitError(f"{kind.value} is undefined on every replicate of {series.label!r}")
    alpha = 1.0 - level
    lower, upper = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
    return BootstrapCi(
        point=point,
        lower=float(lower),
        upper=float(upper),
        level=level,
        replicates=replicates,
        mean_block_length=block,
        statistic=kind,
    )


__all__ = [
    "align",
    "autocovariances",
    "default_max_lag",
    "dm_test",
    "significance_matrix",
    "optimal_block_length",
    "default_block_length",
    "stationary_bootstrap_indices",
    "stationary_bootstrap_ci",
]
