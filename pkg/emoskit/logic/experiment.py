"""Calibrate/verify pipeline over member mixtures, lead times and rolling windows.

The unit of parallel work is one (mixture, lead) task. A task walks the
verification days in order, so warm starts chain from day to day exactly as
in a serial run and ``jobs=1`` and ``jobs=N`` give identical tables.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Literal, Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm

from ..env import env_int
from ..errors import ConfigError, EmosKitError, EmptyWindowError, ExperimentError, UndefinedSkillError
from ..schemas.dataset import Dataset, GroupedEnsembleForecast, Observation
from ..schemas.emos import EmosParameters, EmosVariant, EnsembleSummary, FitRecord
from ..schemas.experiment import SUMMARY_COLUMNS, ExperimentConfig, Mixture, ScoreTable
from ..schemas.inference import BootstrapStatistic, ScoreSeries
from ..schemas.scoring import level_name
from ..schemas.selection import ClusterAssignment, ScopeMode, TrainingScope
from ..services.clustering import dataset_features, kmeans_cluster
from ..services.dataset import apply_orographic_correction, load_dataset
from ..services.emos import fit, predictive_arrays, summarize
from ..services.inference import MIN_DM_LENGTH, align, dm_test, significance_matrix, stationary_bootstrap_ci
from ..services.scoring import (
    brier_score_empirical_array,
    brier_score_gaussian_array,
    climatology_thresholds,
    crps_empirical_array,
    crps_gaussian_array,
    empirical_quantiles,
    log_score_gaussian_array,
    quantile_score_array,
    skill_score,
)
from ..services.selection import assemble_scope_window, scope_stations, scopes_for
from .utils import stable_seed

logger = logging.getLogger(__name__)

FORECAST_RAW = "raw"
FORECAST_EMOS = "emos"
KEY_COLUMNS = ["configuration", "forecast", "lead_days", "date"]

Stage = Literal["calibrate", "verify", "run"]


# =========================
# PLAN
# =========================


@dataclass(frozen=True)
class ExperimentPlan:
    config: ExperimentConfig
    dataset: Dataset
    mixtures: tuple[Mixture, ...]
    lead_times: tuple[int, ...]
    verification_days: tuple[date, ...]
    thresholds: dict[str, np.ndarray]
    k_clusters: int
    assignments: dict[int, ClusterAssignment] = field(default_factory=dict)

    @property
    def reference(self) -> str:
        return self.config.scenario.reference_mixture.name

    @property
    def configurations(self) -> list[str]:
        return [m.name for m in self.mixtures]


def load_experiment_dataset(config: ExperimentConfig) -> Dataset:
    try:
        observations, forecasts, stations = config.data.paths()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return load_dataset(observations, forecasts, stations)


def high_resolution_only(dataset: Dataset, high_label: str) -> Dataset:
    """Dataset reduced to the full high-resolution group (the clustering source)."""
    if high_label not in dataset.group_labels:
        return dataset
    forecasts = tuple(
        fc.subset({high_label: fc.group(high_label).size})
        for fc in dataset.forecasts
        if fc.group(high_label) is not None
    )
    return Dataset(dataset.stations, dataset.observations, forecasts)


def cluster_stations(source: Dataset, day: date, lead: int, n_days: int, k: int, seed: int) -> ClusterAssignment:
    features = dataset_features(source, day, lead, n_days)
    return kmeans_cluster(features, k, seed)


def _station_thresholds(dataset: Dataset, levels: Sequence[float], first: date, last: date) -> dict[str, np.ndarray]:
    """Per-station climatological quantiles of the observations valid in [first, last]."""
    thresholds: dict[str, np.ndarray] = {}
    for sid in dataset.station_ids:
        series = dataset.observations_for(sid)
        values = [o.value for o in series if first <= o.valid_time.date() <= last]
        if not values:
            values = [o.value for o in series]
        if values:
            thresholds[sid] = np.asarray(climatology_thresholds(values, levels))
        else:
            thresholds[sid] = np.full(len(levels), np.nan)
    return thresholds


def plan_experiment(config: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentPlan:
    if dataset is None:
        dataset = load_experiment_dataset(config)
    if config.data.orographic_correction:
        dataset = apply_orographic_correction(dataset)

    scenario = config.scenario
    present = set(dataset.group_labels)
    for mixture in scenario.mixtures:
        for label, size in mixture.sizes(scenario.low_label, scenario.high_label).items():
            if size > 0 and label not in present:
                raise ConfigError(
                    f"mixture {mixture.name} needs group {label!r}, data has {sorted(present)}",
                    mixture=mixture.name,
                )

    available = dataset.lead_times
    leads = tuple(config.training.lead_times or available)
    missing = [lead for lead in leads if lead not in available]
    if missing:
        raise ConfigError(f"lead times {missing} not in the data (available {list(available)})")

    init_dates = dataset.init_dates
    if not init_dates:
        raise ConfigError("dataset holds no forecasts")
    n_days = config.training.n_days
    earliest = init_dates[0] + timedelta(days=n_days)
    start = config.verification.start or earliest
    end = config.verification.end or init_dates[-1]
    if start < earliest:
        raise ConfigError(
            f"verification start {start} precedes data start {init_dates[0]} + {n_days} training days",
            start=start.isoformat(),
        )
    days = tuple(d for d in init_dates if start <= d <= end)
    if not days:
        raise ConfigError(f"no forecasts initialized between {start} and {end}")

    thresholds = _station_thresholds(
        dataset, config.scores.bs_threshold_levels, start, end + timedelta(days=max(leads))
    )

    k = config.training.k_clusters
    n_stations = len(dataset.station_ids)
    if config.training.mode is ScopeMode.SEMI_LOCAL and k > n_stations:
        logger.warning("k=%d clusters requested for %d stations; using k=%d", k, n_stations, n_stations)
        k = n_stations

    assignments: dict[int, ClusterAssignment] = {}
    training = config.training
    if training.mode is ScopeMode.SEMI_LOCAL and not (training.cluster_per_configuration or training.recluster_each_window):
        source = high_resolution_only(dataset, scenario.high_label)
        for lead in leads:
            assignments[lead] = cluster_stations(source, days[0], lead, n_days, k, training.seed)

    logger.info(
        "Experiment: %d mixtures, leads %s, %d verification days (%s to %s), %s training over %d days",
        len(scenario.mixtures),
        list(leads),
        len(days),
        days[0],
        days[-1],
        training.mode.value,
        n_days,
    )
    return ExperimentPlan(
        config=config,
        dataset=dataset,
        mixtures=tuple(scenario.mixtures),
        lead_times=leads,
        verification_days=days,
        thresholds=thresholds,
        k_clusters=k,
        assignments=assignments,
    )


# =========================
# SCORING
# =========================


def _score_columns(config: ExperimentConfig) -> list[str]:
    bs = [level_name("bs", lvl) for lvl in config.scores.bs_threshold_levels]
    qs = [level_name("qs", lvl) for lvl in config.scores.qs_levels]
    return ["crps", "abs_error", "sq_error", "logs", *bs, *qs]


def raw_scores(
    members: Sequence[np.ndarray],
    obs: np.ndarray,
    thresholds: np.ndarray,
    bs_levels: Sequence[float],
    qs_levels: Sequence[float],
) -> dict[str, np.ndarray]:
    """Empirical scores of raw ensembles; the point forecast is the median for MAE, the mean for RMSE."""
    n = len(members)
    out = {name: np.full(n, np.nan) for name in ("crps", "abs_error", "sq_error", "logs")}
    bs = np.full((n, len(bs_levels)), np.nan)
    qs = np.full((n, len(qs_levels)), np.nan)
    sizes = np.array([m.size for m in members])
    for size in np.unique(sizes):
        idx = np.flatnonzero(sizes == size)
        x = np.vstack([members[i] for i in idx])
        y = obs[idx]
        out["crps"][idx] = crps_empirical_array(x, y)
        median = empirical_quantiles(x, [0.5])[:, 0]
        out["abs_error"][idx] = np.abs(median - y)
        out["sq_error"][idx] = (x.mean(axis=1) - y) ** 2
        bs[idx] = brier_score_empirical_array(x, y, thresholds[idx])
        quantiles = empirical_quantiles(x, qs_levels)
        for j, tau in enumerate(qs_levels):
            qs[idx, j] = quantile_score_array(quantiles[:, j], y, tau)
    for j, lvl in enumerate(bs_levels):
        out[level_name("bs", lvl)] = bs[:, j]
    for j, tau in enumerate(qs_levels):
        out[level_name("qs", tau)] = qs[:, j]
    return out


def gaussian_scores(
    mean: np.ndarray,
    variance: np.ndarray,
    obs: np.ndarray,
    thresholds: np.ndarray,
    bs_levels: Sequence[float],
    qs_levels: Sequence[float],
) -> dict[str, np.ndarray]:
    sd = np.sqrt(variance)
    out = {
        "crps": crps_gaussian_array(mean, variance, obs),
        "abs_error": np.abs(mean - obs),
        "sq_error": (mean - obs) ** 2,
        "logs": log_score_gaussian_array(mean, variance, obs),
    }
    bs = brier_score_gaussian_array(mean, variance, obs, thresholds)
    for j, lvl in enumerate(bs_levels):
        out[level_name("bs", lvl)] = bs[:, j]
    z = norm.ppf(np.asarray(qs_levels, dtype=float))
    for j, tau in enumerate(qs_levels):
        out[level_name("qs", tau)] = quantile_score_array(mean + sd * z[j], obs, tau)
    return out


# =========================
# TASKS
# =========================


@dataclass(frozen=True)
class _Task:
    mixture: Mixture
    lead: int


@dataclass
class _TaskResult:
    fits: list[FitRecord]
    cases: pd.DataFrame


FitKey = tuple[str, str, int, date]

_STATE: dict[str, object] = {}


def _init_worker(plan: ExperimentPlan, stage: Stage, fits: dict[FitKey, EmosParameters]) -> None:
    _STATE["plan"] = plan
    _STATE["stage"] = stage
    _STATE["fits"] = fits


def _model_labels(variant: EmosVariant, mixture: Mixture, high: str, low: str) -> list[str]:
    if variant is EmosVariant.NON_EXCHANGEABLE:
        return [f"{high}:{i}" for i in range(mixture.high)] + [f"{low}:{i}" for i in range(mixture.low)]
    return [high, low]


class _TaskRunner:
    def __init__(self, plan: ExperimentPlan, task: _Task, stage: Stage, fits: dict[FitKey, EmosParameters]) -> None:
        config = plan.config
        scenario = config.scenario
        self.plan = plan
        self.config = config
        self.task = task
        self.stage = stage
        self.known_fits = fits
        self.name = task.mixture.name
        self.lead = task.lead
        self.labels = _model_labels(config.emos.variant, task.mixture, scenario.high_label, scenario.low_label)

        sizes = task.mixture.sizes(scenario.low_label, scenario.high_label)
        rng = None
        if scenario.random_subset:
            rng = np.random.default_rng(stable_seed(config.training.seed, self.name, self.lead))
        lead_forecasts = [fc for fc in plan.dataset.forecasts if fc.lead_time == self.lead]
        self.data = Dataset(plan.dataset.stations, plan.dataset.observations, tuple(fc.subset(sizes, rng) for fc in lead_forecasts))

        self._summaries: dict[tuple[str, date], EnsembleSummary] = {}
        self._previous: dict[str, EmosParameters] = {}
        self._cluster_source: Dataset | None = None
        self._fixed_assignment = plan.assignments.get(self.lead)
        self.fits: list[FitRecord] = []
        self.frames: list[pd.DataFrame] = []

    def summary(self, fc: GroupedEnsembleForecast) -> EnsembleSummary:
        key = (fc.station_id, fc.init_date)
        cached = self._summaries.get(key)
        if cached is None:
            cached = self._summaries[key] = summarize(fc)
        return cached

    def assignment(self, day: date) -> ClusterAssignment | None:
        training = self.config.training
        if training.mode is not ScopeMode.SEMI_LOCAL:
            return None
        if self._fixed_assignment is not None and not training.recluster_each_window:
            return self._fixed_assignment
        if self._cluster_source is None:
            if training.cluster_per_configuration:
                self._cluster_source = self.data
            else:
                lead_only = Dataset(
                    self.plan.dataset.stations,
                    self.plan.dataset.observations,
                    tuple(fc for fc in self.plan.dataset.forecasts if fc.lead_time == self.lead),
                )
                self._cluster_source = high_resolution_only(lead_only, self.config.scenario.high_label)
        cluster_day = day if training.recluster_each_window else self.plan.verification_days[0]
        assignment = cluster_stations(
            self._cluster_source, cluster_day, self.lead, training.n_days, self.plan.k_clusters, training.seed
        )
        if not training.recluster_each_window:
            self._fixed_assignment = assignment
        return assignment

    def parameters(self, scope: TrainingScope, assignment: ClusterAssignment | None, day: date) -> EmosParameters | None:
        if self.stage == "verify":
            # calibrate writes no record for an empty training window
            known = self.known_fits.get((self.name, scope.scope_id, self.lead, day))
            if known is None:
                logger.warning("%s lead %d %s: no fitted parameters for scope %s", self.name, self.lead, day, scope.scope_id)
            return known

        emos = self.config.emos
        try:
            window = assemble_scope_window(self.data, scope, assignment, day, self.lead, self.config.training.n_days)
        except EmptyWindowError:
            logger.warning("%s lead %d %s: empty training window for scope %s", self.name, self.lead, day, scope.scope_id)
            return None
        init = self._previous.get(scope.scope_id) if emos.warm_start else None
        params = fit(
            window,
            emos.variant,
            init,
            labels=self.labels,
            summaries=[self.summary(case.forecast) for case in window.cases],
            nonnegative_b=emos.nonnegative_b,
            refine=emos.refine,
            max_iter=emos.max_iter,
        )
        self._previous[scope.scope_id] = params
        self.fits.append(
            FitRecord(configuration=self.name, scope_id=scope.scope_id, lead_days=self.lead, target_date=day, parameters=params)
        )
        return params

    def score(self, day: date, scope_id: str, targets: list[tuple[GroupedEnsembleForecast, Observation]], params: EmosParameters) -> None:
        scores_cfg = self.config.scores
        obs = np.array([o.value for _, o in targets])
        thresholds = np.vstack([self.plan.thresholds[fc.station_id] for fc, _ in targets])
        station_ids = [fc.station_id for fc, _ in targets]
        mean, variance = predictive_arrays(params, [self.summary(fc) for fc, _ in targets])
        kinds = {
            FORECAST_RAW: raw_scores(
                [fc.all_members() for fc, _ in targets], obs, thresholds, scores_cfg.bs_threshold_levels, scores_cfg.qs_levels
            ),
            FORECAST_EMOS: gaussian_scores(
                mean, variance, obs, thresholds, scores_cfg.bs_threshold_levels, scores_cfg.qs_levels
            ),
        }
        for kind, values in kinds.items():
            frame = pd.DataFrame(values)
            frame.insert(0, "scope_id", scope_id)
            frame.insert(0, "station_id", station_ids)
            frame.insert(0, "date", day)
            frame.insert(0, "lead_days", self.lead)
            frame.insert(0, "forecast", kind)
            frame.insert(0, "configuration", self.name)
            self.frames.append(frame)

    def run_day(self, day: date) -> None:
        assignment = self.assignment(day)
        targets: dict[str, tuple[GroupedEnsembleForecast, Observation]] = {}
        for fc in self.data.forecasts_for(day, self.lead):
            obs = self.data.observation(fc.station_id, fc.valid_time)
            if obs is not None:
                targets[fc.station_id] = (fc, obs)
        for scope in scopes_for(self.data, self.config.training.mode, assignment):
            params = self.parameters(scope, assignment, day)
            if params is None or self.stage == "calibrate":
                continue
            stations = scope_stations(self.data, scope, assignment)
            chosen = [targets[sid] for sid in stations if sid in targets]
            if chosen:
                self.score(day, scope.scope_id, chosen, params)

    def run(self) -> _TaskResult:
        logger.info("%s lead %d: %s over %d days", self.name, self.lead, self.stage, len(self.plan.verification_days))
        for day in self.plan.verification_days:
            try:
                self.run_day(day)
            except ExperimentError:
                raise
            except EmosKitError as exc:
                context = {**exc.context, "configuration": self.name, "lead": self.lead, "day": day.isoformat()}
                raise ExperimentError(str(exc), **context) from exc
        cases = pd.concat(self.frames, ignore_index=True) if self.frames else pd.DataFrame()
        return _TaskResult(self.fits, cases)


def _run_task(task: _Task) -> _TaskResult:
    plan = _STATE["plan"]
    assert isinstance(plan, ExperimentPlan)
    return _TaskRunner(plan, task, _STATE["stage"], _STATE["fits"]).run()  # type: ignore[arg-type]


def _execute(plan: ExperimentPlan, stage: Stage, fits: dict[FitKey, EmosParameters], jobs: int | None) -> list[_TaskResult]:
    tasks = [_Task(mixture, lead) for mixture in plan.mixtures for lead in plan.lead_times]
    workers = jobs if jobs is not None else env_int("EMOSKIT_JOBS", 1)
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        _init_worker(plan, stage, fits)
        try:
            return [_run_task(task) for task in tasks]
        finally:
            _STATE.clear()
    logger.info("Running %d tasks on %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(plan, stage, fits)) as pool:
        return list(pool.map(_run_task, tasks))


# =========================
# AGGREGATION
# =========================


def _metric_specs(config: ExperimentConfig) -> list[tuple[str, str, float | None]]:
    specs: list[tuple[str, str, float | None]] = [
        ("crps", "crps", None),
        ("mae", "abs_error", None),
        ("rmse", "sq_error", None),
        ("logs", "logs", None),
    ]
    specs += [("bs", level_name("bs", lvl), lvl) for lvl in config.scores.bs_threshold_levels]
    specs += [("qs", level_name("qs", lvl), lvl) for lvl in config.scores.qs_levels]
    return specs


def _headline(block: pd.DataFrame, column: str, metric: str, station_equal: bool) -> float:
    if station_equal:
        value = float(block.groupby("station_id", sort=True)[column].mean().mean())
    else:
        value = float(block[column].mean())
    return math.sqrt(value) if metric == "rmse" else value


def _interval(
    series: ScoreSeries,
    statistic: BootstrapStatistic,
    config: ExperimentConfig,
    reference: ScoreSeries | None = None,
) -> tuple[float, float]:
    inference = config.inference
    try:
        ci = stationary_bootstrap_ci(
            series,
            statistic,
            replicates=inference.replicates,
            mean_block_length=inference.mean_block_length,
            level=inference.level,
            seed=config.training.seed,
            reference=reference,
        )
    except EmosKitError as exc:
        logger.debug("no interval for %s: %s", series.label, exc)
        return math.nan, math.nan
    return ci.lower, ci.upper


def _daily_series(label: str, daily: pd.DataFrame, column: str) -> ScoreSeries:
    # days whose score is undefined (no climatology threshold) are skipped
    valid = daily[["date", column]].dropna()
    return ScoreSeries(label, valid[column].to_numpy(), tuple(valid["date"]))


def daily_means(cases: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    grouped = cases.groupby(KEY_COLUMNS, sort=True)
    daily = grouped[list(columns)].mean()
    daily["n_cases"] = grouped.size()
    return daily.reset_index()


def significance_matrices(
    cases: pd.DataFrame,
    configurations: Sequence[str],
    lead_times: Iterable[int],
    config: ExperimentConfig,
    forecast: str = FORECAST_EMOS,
) -> dict[int, pd.DataFrame]:
    """Per lead: share of stations with significantly different mean CRPS for each configuration pair."""
    inference = config.inference
    matrices: dict[int, pd.DataFrame] = {}
    for lead in lead_times:
        subset = cases[(cases["forecast"] == forecast) & (cases["lead_days"] == lead)]
        by_config: dict[str, dict[str, ScoreSeries]] = {}
        for name in configurations:
            block = subset[subset["configuration"] == name]
            by_config[name] = {
                sid: ScoreSeries(name, g["crps"].to_numpy(), tuple(g["date"]))
                for sid, g in block.sort_values("date").groupby("station_id", sort=True)
            }
        common = set.intersection(*(set(s) for s in by_config.values())) if by_config else set()
        by_config = {name: {sid: s for sid, s in series.items() if sid in common} for name, series in by_config.items()}
        max_lag = inference.dm_max_lag if inference.dm_max_lag is not None else max(lead - 1, 0)
        matrices[lead] = significance_matrix(
            by_config,
            inference.significance_level,
            max_lag=max_lag,
            min_pairs=inference.min_station_pairs,
        )
    return matrices


def build_score_table(
    cases: pd.DataFrame,
    config: ExperimentConfig,
    configurations: Sequence[str],
    lead_times: Sequence[int],
    fits: Sequence[FitRecord] = (),
) -> ScoreTable:
    reference = config.scenario.reference_mixture.name
    if cases.empty:
        raise ExperimentError("no verification cases were scored")
    columns = _score_columns(config)
    cases = cases.sort_values(KEY_COLUMNS + ["station_id"], kind="mergesort").reset_index(drop=True)
    daily = daily_means(cases, columns)
    station_equal = config.verification.station_equal
    inference = config.inference
    rows: list[dict[str, object]] = []

    case_groups = {key: block for key, block in cases.groupby(["configuration", "forecast", "lead_days"], sort=True)}
    daily_groups = {key: block for key, block in daily.groupby(["configuration", "forecast", "lead_days"], sort=True)}

    for (name, kind, lead), block in daily_groups.items():
        case_block = case_groups[(name, kind, lead)]
        ref_daily = daily_groups.get((reference, kind, lead))
        ref_cases = case_groups.get((reference, kind, lead))
        max_lag = inference.dm_max_lag if inference.dm_max_lag is not None else max(int(lead) - 1, 0)

        for metric, column, level in _metric_specs(config):
            if case_block[column].isna().all():
                continue
            stat = BootstrapStatistic.RMSE if metric == "rmse" else BootstrapStatistic.MEAN
            diff_stat = BootstrapStatistic.RMSE_DIFFERENCE if metric == "rmse" else BootstrapStatistic.MEAN_DIFFERENCE
            headline = _headline(case_block, column, metric, station_equal)
            series = _daily_series(name, block, column)
            lower, upper = _interval(series, stat, config)

            row: dict[str, object] = {
                "configuration": name,
                "forecast": kind,
                "lead_days": int(lead),
                "metric": metric,
                "level": level if level is not None else math.nan,
                "mean": headline,
                "ci_lower": lower,
                "ci_upper": upper,
                "skill": math.nan,
                "diff": math.nan,
                "diff_lower": math.nan,
                "diff_upper": math.nan,
                "dm_statistic": math.nan,
                "dm_p_value": math.nan,
                "n_days": len(block),
                "n_cases": int(block["n_cases"].sum()),
            }
            if ref_daily is not None and ref_cases is not None:
                ref_headline = _headline(ref_cases, column, metric, station_equal)
                try:
                    row["skill"] = skill_score(headline, ref_headline)
                except UndefinedSkillError:
                    pass
                row["diff"] = headline - ref_headline
                a, b = align(series, _daily_series(reference, ref_daily, column))
                row["diff_lower"], row["diff_upper"] = _interval(a, diff_stat, config, reference=b)
                if len(a) >= MIN_DM_LENGTH:
                    dm = dm_test(a, b, max_lag)
                    row["dm_statistic"], row["dm_p_value"] = dm.statistic, dm.p_value
            rows.append(row)

    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    significance = significance_matrices(cases, configurations, lead_times, config)
    return ScoreTable(
        cases=cases,
        daily=daily,
        summary=summary,
        reference=reference,
        configurations=list(configurations),
        lead_times=[int(lead) for lead in lead_times],
        fits=list(fits),
        significance=significance,
    )


# =========================
# ENTRY POINTS
# =========================


def _collect(results: Sequence[_TaskResult]) -> tuple[list[FitRecord], pd.DataFrame]:
    fits = [record for result in results for record in result.fits]
    frames = [result.cases for result in results if not result.cases.empty]
    cases = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    return fits, cases


def calibrate(config: ExperimentConfig, dataset: Dataset | None = None, *, jobs: int | None = None) -> list[FitRecord]:
    """Fit every (mixture, lead, day, scope); no scoring."""
    plan = plan_experiment(config, dataset)
    fits, _ = _collect(_execute(plan, "calibrate", {}, jobs))
    logger.info("Calibrated %d parameter sets", len(fits))
    return fits


def verify(
    config: ExperimentConfig,
    fits: Sequence[FitRecord],
    dataset: Dataset | None = None,
    *,
    jobs: int | None = None,
) -> ScoreTable:
    """Score held-out cases with previously fitted parameters."""
    plan = plan_experiment(config, dataset)
    index: dict[FitKey, EmosParameters] = {}
    for record in fits:
        index[(record.configuration, record.scope_id, record.lead_days, record.target_date)] = record.parameters
    _, cases = _collect(_execute(plan, "verify", index, jobs))
    return build_score_table(cases, config, plan.configurations, plan.lead_times, fits)


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None, *, jobs: int | None = None) -> ScoreTable:
    plan = plan_experiment(config, dataset)
    fits, cases = _collect(_execute(plan, "run", {}, jobs))
    table = build_score_table(cases, config, plan.configurations, plan.lead_times, fits)
    logger.info("Scored %d cases, %d summary rows", len(table.cases), len(table.summary))
    return table


__all__ = [
    "FORECAST_RAW",
    "FORECAST_EMOS",
    "ExperimentPlan",
    "load_experiment_dataset",
    "high_resolution_only",
    "cluster_stations",
    "plan_experiment",
    "raw_scores",
    "gaussian_scores",
    "daily_means",
    "significance_matrices",
    "build_score_table",
    "calibrate",
    "verify",
    "run_experiment",
]
