"""Proper scoring rules and point-error measures.

Scalar functions take the predictive types from ``schemas.scoring``; the
``*_array`` variants score many cases at once and are what the experiment
runner uses. Empirical quantiles follow the inverse-CDF rule: the tau-quantile
of M sorted values is the ceil(tau*M)-th smallest.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm

from ..errors import UndefinedSkillError
from ..schemas.scoring import EmpiricalPredictive, GaussianPredictive

_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

CdfEvaluator = Callable[[float], float]
QuantileEvaluator = Callable[[float], float]


def _std_normal_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite input: {v}")


# --- CRPS ---


def crps_gaussian_array(mean, variance, obs) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.asarray(variance, dtype=float))
    z = (np.asarray(obs, dtype=float) - mean) / sd
    return sd * (z * (2.0 * ndtr(z) - 1.0) + 2.0 * _std_normal_pdf(z) - _INV_SQRT_PI)


def crps_gaussian_gradient(mean, sd, obs) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the Gaussian CRPS with respect to mean and standard deviation."""
    z = (np.asarray(obs, dtype=float) - np.asarray(mean, dtype=float)) / np.asarray(sd, dtype=float)
    d_mean = -(2.0 * ndtr(z) - 1.0)
    d_sd = 2.0 * _std_normal_pdf(z) - _INV_SQRT_PI
    return d_mean, d_sd


def crps_gaussian(pred: GaussianPredictive, obs: float) -> float:
    _check_finite(obs)
    return float(crps_gaussian_array(pred.mean, pred.variance, obs))


def crps_empirical_array(members, obs) -> np.ndarray:
    """CRPS of ensembles ``members`` (cases x M) via the sorted-member form of E|X-x| - E|X-X'|/2."""
    x = np.sort(np.atleast_2d(np.asarray(members, dtype=float)), axis=1)
    y = np.asarray(obs, dtype=float).reshape(-1, 1)
    m = x.shape[1]
    weights = (2.0 * np.arange(1, m + 1) - m - 1.0) / (m * m)
    return np.mean(np.abs(x - y), axis=1) - x @ weights


def crps_empirical(pred: EmpiricalPredictive, obs: float) -> float:
    _check_finite(obs)
    return float(crps_empirical_array(pred.members[np.newaxis, :], [obs])[0])


# --- logarithmic score ---


def log_score_gaussian_array(mean, variance, obs) -> np.ndarray:
    variance = np.asarray(variance, dtype=float)
    resid = np.asarray(obs, dtype=float) - np.asarray(mean, dtype=float)
    return _HALF_LOG_2PI + 0.5 * np.log(variance) + resid * resid / (2.0 * variance)


def log_score_gaussian(pred: GaussianPredictive, obs: float) -> float:
    _check_finite(obs)
    return float(log_score_gaussian_array(pred.mean, pred.variance, obs))


# --- CDF and quantile evaluators ---


def empirical_quantile_index(tau, m: int) -> np.ndarray:
    """Zero-based order-statistic index ceil(tau*m) - 1, robust to float noise in tau*m."""
    k = np.ceil(np.round(np.asarray(tau, dtype=float) * m, 9)).astype(int)
    return np.clip(k, 1, m) - 1


def empirical_quantiles(values, levels) -> np.ndarray:
    """Type-1 quantiles along the last axis of ``values``."""
    x = np.sort(np.asarray(values, dtype=float), axis=-1)
    idx = empirical_quantile_index(levels, x.shape[-1])
    return np.take(x, idx, axis=-1)


def gaussian_cdf(pred: GaussianPredictive) -> CdfEvaluator:
    return lambda y: float(norm.cdf(y, loc=pred.mean, scale=pred.sd))


def empirical_cdf(pred: EmpiricalPredictive) -> CdfEvaluator:
    members = np.sort(pred.members)
    m = members.size
    return lambda y: float(np.searchsorted(members, y, side="right") / m)


def gaussian_quantile(pred: GaussianPredictive) -> QuantileEvaluator:
    return lambda tau: float(norm.ppf(tau, loc=pred.mean, scale=pred.sd))


def empirical_quantile(pred: EmpiricalPredictive) -> QuantileEvaluator:
    members = np.sort(pred.members)
    return lambda tau: float(members[int(empirical_quantile_index(tau, members.size))])


# --- Brier score ---


def brier_score(F: CdfEvaluator, obs: float, threshold: float) -> float:
    """(F(y) - 1{obs <= y})^2 for the event "observation at or below threshold y"."""
    _check_finite(obs, threshold)
    indicator = 1.0 if obs <= threshold else 0.0
    p = float(F(threshold))
    return (p - indicator) ** 2


def brier_score_gaussian_array(mean, variance, obs, thresholds) -> np.ndarray:
    """Brier scores, cases x thresholds; ``thresholds`` is (cases, T) or (T,)."""
    mean = np.asarray(mean, dtype=float).reshape(-1, 1)
    sd = np.sqrt(np.asarray(variance, dtype=float)).reshape(-1, 1)
    y = np.asarray(thresholds, dtype=float)
    p = ndtr((y - mean) / sd)
    indicator = (np.asarray(obs, dtype=float).reshape(-1, 1) <= y).astype(float)
    return (p - indicator) ** 2


def brier_score_empirical_array(members, obs, thresholds) -> np.ndarray:
    x = np.atleast_2d(np.asarray(members, dtype=float))
    y = np.asarray(thresholds, dtype=float)
    if y.ndim == 1:
        y = np.broadcast_to(y, (x.shape[0], y.size))
    p = np.mean(x[:, :, np.newaxis] <= y[:, np.newaxis, :], axis=1)
    indicator = (np.asarray(obs, dtype=float).reshape(-1, 1) <= y).astype(float)
    return (p - indicator) ** 2


# --- quantile score ---


def quantile_loss(u, tau) -> np.ndarray:
    """Pinball loss: tau*|u| for u >= 0, (1 - tau)*|u| otherwise."""
    u = np.asarray(u, dtype=float)
    return np.where(u >= 0, tau * np.abs(u), (1.0 - tau) * np.abs(u))


def _check_tau(tau: float) -> None:
    if not (0.0 < tau < 1.0):
        raise ValueError(f"quantile level must lie in (0, 1), got {tau}")


def quantile_score(F: QuantileEvaluator, obs: float, tau: float) -> float:
    _check_tau(tau)
    _check_finite(obs)
    return float(quantile_loss(obs - F(tau), tau))


def quantile_score_array(quantiles, obs, tau: float) -> np.ndarray:
    _check_tau(tau)
    return quantile_loss(np.asarray(obs, dtype=float) - np.asarray(quantiles, dtype=float), tau)


# --- skill and point errors ---


def skill_score(score: float, score_ref: float) -> float:
    """1 - score/score_ref, applied to mean scores over a case set."""
    if score_ref == 0:
        if score == 0:
            return 0.0
        raise UndefinedSkillError("reference score is zero; skill undefined", score=score)
    return 1.0 - score / score_ref


def point_errors(point_forecasts: Sequence[float], obs: Sequence[float]) -> tuple[float, float]:
    p = np.asarray(point_forecasts, dtype=float)
    o = np.asarray(obs, dtype=float)
    if p.shape != o.shape:
        raise ValueError(f"length mismatch: {p.size} forecasts, {o.size} observations")
    if p.size == 0:
        raise ValueError("point_errors needs at least one case")
    err = p - o
    return float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err * err)))


def climatology_thresholds(obs_series: Sequence[float], levels: Sequence[float]) -> list[float]:
    series = np.asarray(obs_series, dtype=float)
    if series.size == 0:
        raise ValueError("climatology needs a nonempty observation series")
    levels_arr = np.asarray(levels, dtype=float)
    if np.any(np.diff(levels_arr) < 0):
        raise ValueError("levels must be sorted")
    return [float(v) for v in empirical_quantiles(series, levels_arr)]


__all__ = [
    "crps_gaussian",
    "crps_gaussian_array",
    "crps_gaussian_gradient",
    "crps_empirical",
    "crps_empirical_array",
    "log_score_gaussian",
    "log_score_gaussian_array",
    "empirical_quantile_index",
    "empirical_quantiles",
    "gaussian_cdf",
    "empirical_cdf",
    "gaussian_quantile",
    "empirical_quantile",
    "brier_score",
    "brier_score_gaussian_array",
    "brier_score_empirical_array",
    "quantile_loss",
    "quantile_score",
    "quantile_score_array",
    "skill_score",
    "point_errors",
    "climatology_thresholds",
]
