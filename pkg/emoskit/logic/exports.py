from __future__ import annotations

import logging
import math
from pathlib import Path

import pandas as pd

from ..errors import DatasetError, ExperimentError
from ..schemas.experiment import ScoreTable
from ..schemas.scoring import level_name
from ..services.emos import write_parameters
from .utils import ensure_output_dir, write_csv

logger = logging.getLogger(__name__)

KEY = ["configuration", "forecast", "lead_days"]
FORECAST_ORDER = {"raw": 0, "emos": 1}

SCORES_FILE = "scores.csv"
SUMMARY_FILE = "summary.csv"
DAILY_FILE = "daily_scores.csv"
CRPS_FILE = "crps_vs_lead.csv"
CRPS_DIFF_FILE = "crps_diff_vs_lead.csv"
BSS_FILE = "bss.csv"
QSS_FILE = "qss.csv"
RMSE_DIFF_FILE = "rmse_diff.csv"
PARAMETERS_FILE = "parameters.jsonl"


def _column(metric: str, level: float | None) -> str:
    return metric if level is None or math.isnan(level) else level_name(metric, level)


def _ordered(frame: pd.DataFrame, configurations: list[str]) -> pd.DataFrame:
    rank = {name: i for i, name in enumerate(configurations)}
    keys = pd.DataFrame(
        {
            "c": frame["configuration"].map(lambda c: rank.get(c, len(rank))),
            "f": frame["forecast"].map(lambda f: FORECAST_ORDER.get(f, len(FORECAST_ORDER))),
            "l": frame["lead_days"],
        }
    )
    order = keys.sort_values(["c", "f", "l"], kind="mergesort").index
    return frame.loc[order].reset_index(drop=True)


def export_scores_table(table: ScoreTable) -> pd.DataFrame:
    """Wide layout: one row per (configuration, forecast, lead), one column group per score.

    Each score ``x`` gets ``x``, ``x_lower``, ``x_upper`` and ``x_skill``;
    level-dependent scores are named like ``qs2`` or ``bs90``.
    """
    rows: dict[tuple[str, str, int], dict[str, object]] = {}
    columns: list[str] = []
    for rec in table.summary.itertuples(index=False):
        key = (rec.configuration, rec.forecast, int(rec.lead_days))
        row = rows.setdefault(key, dict(zip(KEY, key)))
        name = _column(rec.metric, rec.level)
        if name not in columns:
            columns.append(name)
        row[name] = rec.mean
        row[f"{name}_lower"] = rec.ci_lower
        row[f"{name}_upper"] = rec.ci_upper
        row[f"{name}_skill"] = rec.skill
    ordered = KEY + [f"{name}{suffix}" for name in columns for suffix in ("", "_lower", "_upper", "_skill")]
    frame = pd.DataFrame(list(rows.values()), columns=ordered)
    value_columns = ordered[len(KEY) :]
    frame[value_columns] = frame[value_columns].astype(float)
    return _ordered(frame, table.configurations)


def _metric_frame(table: ScoreTable, metric: str, columns: list[str], rename: dict[str, str] | None = None) -> pd.DataFrame:
    s = table.summary
    frame = s.loc[s["metric"] == metric, columns]
    frame = _ordered(frame.reset_index(drop=True), table.configurations)
    return frame.rename(columns=rename or {})


def export_crps_vs_lead(table: ScoreTable) -> pd.DataFrame:
    return _metric_frame(table, "crps", KEY + ["mean", "ci_lower", "ci_upper", "n_days", "n_cases"], {"mean": "crps"})


def export_crps_diff_vs_lead(table: ScoreTable) -> pd.DataFrame:
    """CRPS difference from the reference configuration with its paired interval and DM test."""
    return _metric_frame(
        table,
        "crps",
        KEY + ["diff", "diff_lower", "diff_upper", "dm_statistic", "dm_p_value"],
        {"diff": "crps_diff"},
    )


def export_level_skill(table: ScoreTable, metric: str) -> pd.DataFrame:
    """Per threshold/level score and its skill against the reference (BSS or QSS)."""
    columns = KEY + ["level", "mean", "ci_lower", "ci_upper", "skill", "diff", "diff_lower", "diff_upper", "dm_p_value"]
    return _metric_frame(table, metric, columns, {"mean": metric, "skill": f"{metric}s"})


def export_rmse_diff(table: ScoreTable) -> pd.DataFrame:
    return _metric_frame(
        table,
        "rmse",
        KEY + ["mean", "diff", "diff_lower", "diff_upper", "dm_p_value"],
        {"mean": "rmse", "diff": "rmse_diff"},
    )


def emit_reports(table: ScoreTable, outdir: Path | str) -> dict[str, Path]:
    """Write every report CSV (and the fitted parameters, if any) into ``outdir``."""
    if table.summary.empty:
        raise ExperimentError("score table is empty; nothing to report")
    directory = ensure_output_dir(outdir)
    written: dict[str, Path] = {}

    frames = {
        SCORES_FILE: export_scores_table(table),
        SUMMARY_FILE: table.summary,
        DAILY_FILE: table.daily,
        CRPS_FILE: export_crps_vs_lead(table),
        CRPS_DIFF_FILE: export_crps_diff_vs_lead(table),
        BSS_FILE: export_level_skill(table, "bs"),
        QSS_FILE: export_level_skill(table, "qs"),
        RMSE_DIFF_FILE: export_rmse_diff(table),
    }
    for lead, matrix in sorted(table.significance.items()):
        frames[f"significance_matrix_lead{lead}.csv"] = matrix.rename_axis("configuration").reset_index()

    for name, frame in frames.items():
        written[name] = write_csv(frame, directory / name)
    if table.fits:
        written[PARAMETERS_FILE] = write_parameters(table.fits, directory / PARAMETERS_FILE)

    logger.info("Wrote %d report files to %s", len(written), directory)
    return written


def read_scores_csv(path: Path | str) -> pd.DataFrame:
    """Read ``scores.csv`` back; floats are parsed exactly as written."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip", dtype={"configuration": str, "forecast": str})
    except (OSError, pd.errors.ParserError) as exc:
        raise DatasetError(f"cannot read scores: {exc}", path=path) from exc
    missing = [c for c in KEY if c not in frame.columns]
    if missing:
        raise DatasetError(f"missing columns {missing}", path=path, line=1)
    value_columns = [c for c in frame.columns if c not in KEY]
    frame[value_columns] = frame[value_columns].astype(float)
    return frame


__all__ = [
    "emit_reports",
    "export_scores_table",
    "export_crps_vs_lead",
    "export_crps_diff_vs_lead",
    "export_level_skill",
    "export_rmse_diff",
    "read_scores_csv",
]
