import math

import pandas as pd
import pytest

from emoskit.errors import DatasetError, ExperimentError
from emoskit.logic.exports import (
    emit_reports,
    export_crps_diff_vs_lead,
    export_level_skill,
    export_scores_table,
    read_scores_csv,
)
from emoskit.services.emos import read_parameters


def test_scores_table_layout(experiment_table) -> None:
    frame = export_scores_table(experiment_table)
    assert list(frame.columns[:3]) == ["configuration", "forecast", "lead_days"]
    assert {"crps", "crps_lower", "crps_upper", "crps_skill", "bs50", "qs2", "qs98"} <= set(frame.columns)
    # configurations keep their declared order, raw before emos
    assert list(frame["configuration"]) == ["(0,10)", "(0,10)", "(8,8)", "(8,8)", "(20,5)", "(20,5)"]
    assert list(frame["forecast"][:2]) == ["raw", "emos"]
    assert frame.loc[frame["forecast"] == "raw", "logs"].isna().all()


def test_scores_csv_round_trip(experiment_table, tmp_path) -> None:
    written = emit_reports(experiment_table, tmp_path)
    again = read_scores_csv(written["scores.csv"])
    pd.testing.assert_frame_equal(again, export_scores_table(experiment_table))


def test_emit_reports_files(experiment_table, tmp_path) -> None:
    written = emit_reports(experiment_table, tmp_path / "out")
    assert set(written) == {
        "scores.csv",
        "summary.csv",
        "daily_scores.csv",
        "crps_vs_lead.csv",
        "crps_diff_vs_lead.csv",
        "bss.csv",
        "qss.csv",
        "rmse_diff.csv",
        "significance_matrix_lead1.csv",
        "parameters.jsonl",
    }
    assert all(path.is_file() for path in written.values())
    assert len(read_parameters(written["parameters.jsonl"])) == len(experiment_table.fits)


def test_diff_and_skill_exports(experiment_table) -> None:
    diff = export_crps_diff_vs_lead(experiment_table)
    reference = diff[(diff["configuration"] == "(0,10)") & (diff["forecast"] == "emos")].iloc[0]
    assert reference["crps_diff"] == 0.0

    bss = export_level_skill(experiment_table, "bs")
    assert sorted(set(bss["level"])) == [0.1, 0.5, 0.9]
    assert "bss" in bss.columns
    assert not math.isnan(bss.loc[bss["configuration"] == "(8,8)", "bss"].iloc[0])


def test_empty_table_is_rejected(experiment_table, tmp_path) -> None:
    empty = type(experiment_table)(
        cases=experiment_table.cases,
        daily=experiment_table.daily,
        summary=experiment_table.summary.iloc[0:0],
        reference=experiment_table.reference,
    )
    with pytest.raises(ExperimentError):
        emit_reports(empty, tmp_path)


def test_read_scores_csv_errors(tmp_path) -> None:
    path = tmp_path / "scores.csv"
    path.write_text("configuration,crps\n(0,10),0.5\n", encoding="utf-8")
    with pytest.raises(DatasetError) as exc_info:
        read_scores_csv(path)
    assert exc_info.value.line == 1
    with pytest.raises(DatasetError):
        read_scores_csv(tmp_path / "missing.csv")
