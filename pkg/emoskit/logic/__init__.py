"""Orchestration: experiment pipeline, report exports and group diagnostics."""

from .diagnostics import station_diagnostics
from .experiment import (
    ExperimentPlan,
    build_score_table,
    calibrate,
    plan_experiment,
    run_experiment,
    verify,
)
from .exports import emit_reports, export_scores_table, read_scores_csv

__all__ = [
    "station_diagnostics",
    "ExperimentPlan",
    "build_score_table",
    "calibrate",
    "plan_experiment",
    "run_experiment",
    "verify",
    "emit_reports",
    "export_scores_table",
    "read_scores_csv",
]
