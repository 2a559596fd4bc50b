# =========================
# EMOSKIT/SCHEMAS/__INIT__.PY
# =========================
"""
Domain types, one module per concern.

Input and configuration models are pydantic v2 with ``extra="forbid"``;
bulk records (observations, forecasts, windows, summaries, score series)
are frozen dataclasses validated once on construction.
"""

from .dataset import (
    Dataset,
    GroupedEnsembleForecast,
    Observation,
    StationMeta,
    TrainingCase,
    TrainingWindow,
)
from .emos import EmosParameters, EmosVariant, EnsembleSummary, FitRecord, WindowDescriptor
from .experiment import ExperimentConfig, Mixture, ScoreTable
from .inference import BootstrapCi, BootstrapStatistic, DmFlag, DmResult, ScoreSeries
from .scoring import EmpiricalPredictive, GaussianPredictive, ScoreConfig
from .selection import ClusterAssignment, ScopeMode, StationFeatures, TrainingScope
from .synth import ExactEmosSpec, GroundTruthParams, GroupSpec, SynthConfig

__all__ = [
    "StationMeta",
    "Observation",
    "GroupedEnsembleForecast",
    "TrainingCase",
    "TrainingWindow",
    "Dataset",
    "EmosVariant",
    "EmosParameters",
    "EnsembleSummary",
    "FitRecord",
    "WindowDescriptor",
    "ExperimentConfig",
    "Mixture",
    "ScoreTable",
    "ScoreSeries",
    "DmFlag",
    "DmResult",
    "BootstrapCi",
    "BootstrapStatistic",
    "GaussianPredictive",
    "EmpiricalPredictive",
    "ScoreConfig",
    "ScopeMode",
    "TrainingScope",
    "StationFeatures",
    "ClusterAssignment",
    "GroupSpec",
    "ExactEmosSpec",
    "GroundTruthParams",
    "SynthConfig",
]
