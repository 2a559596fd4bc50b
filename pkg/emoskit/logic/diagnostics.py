"""Per-station comparison of two member groups at equal ensemble size."""

from __future__ import annotations

import logging
import math

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import EmosKitError
from ..schemas.dataset import Dataset

logger = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = [
    "station_id",
    "n_cases",
    "mean_diff",
    "variance_diff",
    "rmse_diff",
    "levene_p",
    "ks_p",
]


def station_diagnostics(
    dataset: Dataset,
    group_pair: tuple[str, str],
    equal_size: int,
    *,
    lead_time: int | None = None,
) -> pd.DataFrame:
    """High-minus-low differences per station after cutting both groups to ``equal_size`` members.

    ``group_pair`` is (high, low). ``mean_diff`` is the mean difference of the
    ensemble means, ``variance_diff`` of the ensemble variances and
    ``rmse_diff`` of the ensemble-mean RMSE (NaN without observations).
    ``levene_p`` tests equal spread of the member anomalies around their case
    mean; ``ks_p`` compares the pooled member distributions.
    """
    high, low = group_pair
    if high == low:
        raise EmosKitError("diagnostics need two distinct groups", groups=list(group_pair))
    if equal_size < 2:
        raise EmosKitError(f"equal_size must be at least 2, got {equal_size}")

    per_station: dict[str, dict[str, list]] = {}
    for fc in dataset.forecasts:
        if lead_time is not None and fc.lead_time != lead_time:
            continue
        members = []
        for label in (high, low):
            values = fc.group(label)
            size = 0 if values is None else values.size
            if size < equal_size:
                raise EmosKitError(
                    f"group {label!r} has {size} members, {equal_size} needed",
                    station=fc.station_id,
                    init_time=fc.init_time.isoformat(),
                    group=label,
                )
            members.append(values[:equal_size])
        acc = per_station.setdefault(fc.station_id, {"h": [], "l": [], "obs": []})
        acc["h"].append(members[0])
        acc["l"].append(members[1])
        obs = dataset.observation(fc.station_id, fc.valid_time)
        acc["obs"].append(math.nan if obs is None else obs.value)

    rows = []
    for sid in dataset.station_ids:
        acc = per_station.get(sid)
        if acc is None:
            continue
        h = np.vstack(acc["h"])
        l = np.vstack(acc["l"])
        y = np.asarray(acc["obs"], dtype=float)
        h_mean, l_mean = h.mean(axis=1), l.mean(axis=1)
        seen = ~np.isnan(y)
        if seen.any():
            rmse_h = math.sqrt(np.mean((h_mean[seen] - y[seen]) ** 2))
            rmse_l = math.sqrt(np.mean((l_mean[seen] - y[seen]) ** 2))
            rmse_diff = rmse_h - rmse_l
        else:
            rmse_diff = math.nan
        h_anom = (h - h_mean[:, np.newaxis]).ravel()
        l_anom = (l - l_mean[:, np.newaxis]).ravel()
        if np.ptp(h_anom) == 0 and np.ptp(l_anom) == 0:
            levene_p = 1.0
        else:
            levene_p = float(stats.levene(h_anom, l_anom).pvalue)
        rows.append(
            {
                "station_id": sid,
                "n_cases": int(h.shape[0]),
                "mean_diff": float(np.mean(h_mean - l_mean)),
                "variance_diff": float(np.mean(h.var(axis=1, ddof=1) - l.var(axis=1, ddof=1))),
                "rmse_diff": rmse_diff,
                "levene_p": levene_p,
                "ks_p": float(stats.ks_2samp(h.ravel(), l.ravel()).pvalue),
            }
        )
    logger.info("Diagnostics for %s vs %s on %d stations (%d members each)", high, low, len(rows), equal_size)
    return pd.DataFrame(rows, columns=DIAGNOSTIC_COLUMNS)


__all__ = ["DIAGNOSTIC_COLUMNS", "station_diagnostics"]
