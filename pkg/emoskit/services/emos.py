"""EMOS predictive models and minimum-CRPS estimation.

The optimizer works on an unconstrained vector: c = gamma^2 + floor and
d = delta^2 (d_k = delta_k^2 for the split-variance variant), optionally
b = beta^2 for nonnegative mean coefficients. The variance floor is folded
into the returned ``c``, so ``predictive`` reproduces the optimized model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.optimize import minimize

from ..errors import DatasetError, EmosKitError, EmptyWindowError, NonPositiveVarianceError
from ..schemas.dataset import GroupedEnsembleForecast, TrainingWindow
from ..schemas.emos import EmosParameters, EmosVariant, EnsembleSummary, FitRecord, WindowDescriptor
from ..schemas.scoring import GaussianPredictive
from .scoring import crps_gaussian_array, crps_gaussian_gradient

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-4
DEFAULT_MAX_ITER = 500
DEFAULT_FATOL = 1e-8
DEFAULT_XATOL = 1e-4

# initial simplex edge lengths: intercept, mean coefficients, gamma/delta
_STEP_A = 1.0
_STEP_B = 0.1
_STEP_SCALE = 0.5


def summarize(forecast: GroupedEnsembleForecast) -> EnsembleSummary:
    members = forecast.all_members()
    if members.size < 2:
        raise EmosKitError(
            "ensemble variance needs at least two members",
            station=forecast.station_id,
            init_time=str(forecast.init_time),
        )
    means = np.array([arr.mean() for _, arr in forecast.groups])
    variances = np.array([arr.var(ddof=1) if arr.size > 1 else 0.0 for _, arr in forecast.groups])
    return EnsembleSummary(
        labels=forecast.labels,
        group_sizes=tuple(arr.size for _, arr in forecast.groups),
        group_means=means,
        group_variances=variances,
        pooled_mean=float(members.mean()),
        pooled_variance=float(members.var(ddof=1)),
        members=members,
    )


def member_labels(summary: EnsembleSummary) -> list[str]:
    """Per-member labels ``group:index`` used by the non-exchangeable variant."""
    return [f"{label}:{i}" for label, size in zip(summary.labels, summary.group_sizes) for i in range(size)]


# --- design arrays ---


@dataclass(frozen=True, slots=True)
class _Design:
    labels: tuple[str, ...]
    means: np.ndarray
    pooled_variance: np.ndarray
    group_variance: np.ndarray
    present: np.ndarray
    spread_defined: np.ndarray


def _design(
    summaries: Sequence[EnsembleSummary],
    variant: EmosVariant,
    labels: Sequence[str],
    *,
    strict: bool,
) -> _Design:
    n, p = len(summaries), len(labels)
    column = {label: j for j, label in enumerate(labels)}
    means = np.zeros((n, p))
    group_var = np.zeros((n, p))
    pooled = np.empty(n)
    present = np.zeros(p, dtype=bool)
    spread_defined = np.zeros(p, dtype=bool)

    for i, summary in enumerate(summaries):
        pooled[i] = summary.pooled_variance
        if variant is EmosVariant.NON_EXCHANGEABLE:
            names: Iterable[str] = member_labels(summary)
            values: Iterable[float] = summary.members
            sizes: Iterable[int] = [1] * summary.members.size
            variances: Iterable[float] = [0.0] * summary.members.size
        else:
            names, values = summary.labels, summary.group_means
            sizes, variances = summary.group_sizes, summary.group_variances
        for name, value, size, variance in zip(names, values, sizes, variances):
            j = column.get(name)
            if j is None:
                if strict:
                    raise EmosKitError(f"ensemble label {name!r} is not among the model labels", labels=list(labels))
                continue
            means[i, j] = value
            group_var[i, j] = variance
            present[j] = True
            if size > 1:
                spread_defined[j] = True

    return _Design(tuple(labels), means, pooled, group_var, present, spread_defined)


def _variance(params: EmosParameters, design: _Design) -> np.ndarray:
    if params.variant is EmosVariant.DUAL_SPLIT_VARIANCE:
        d = np.array([params.variance_coefficient(label) for label in design.labels])
        return params.c + design.group_variance @ d
    return params.c + params.d * design.pooled_variance


def _moments(params: EmosParameters, summaries: Sequence[EnsembleSummary]) -> tuple[np.ndarray, np.ndarray]:
    design = _design(summaries, params.variant, params.labels, strict=False)
    mean = params.a + design.means @ np.asarray(params.b, dtype=float)
    variance = _variance(params, design)
    bad = ~(variance > 0) | ~np.isfinite(variance)
    if np.any(bad):
        raise NonPositiveVarianceError(
            "predictive variance is not positive",
            variant=params.variant.value,
            variance=float(variance[bad][0]),
        )
    return mean, variance


def predictive(params: EmosParameters, summary: EnsembleSummary) -> GaussianPredictive:
    """N(a + sum b_k f_k, c + d S^2); labels absent from the ensemble contribute nothing."""
    mean, variance = _moments(params, [summary])
    return GaussianPredictive(mean=float(mean[0]), variance=float(variance[0]))


def predictive_arrays(params: EmosParameters, summaries: Sequence[EnsembleSummary]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``predictive``: (means, variances) for many cases."""
    return _moments(params, summaries)


def _summaries(window: TrainingWindow, summaries: Sequence[EnsembleSummary] | None) -> list[EnsembleSummary]:
    if summaries is not None:
        if len(summaries) != len(window.cases):
            raise EmosKitError("summaries do not match the window's cases", n_cases=len(window.cases))
        return list(summaries)
    return [summarize(case.forecast) for case in window.cases]


def mean_crps_objective(
    params: EmosParameters,
    window: TrainingWindow,
    summaries: Sequence[EnsembleSummary] | None = None,
) -> float:
    if len(window) == 0:
        raise EmptyWindowError("objective over an empty window", scope=window.scope_id or None)
    mean, variance = _moments(params, _summaries(window, summaries))
    return float(np.mean(crps_gaussian_array(mean, variance, window.observations)))


# --- estimation ---


@dataclass(frozen=True)
class _Packing:
    """Maps the free optimizer vector to model coefficients."""

    variant: EmosVariant
    free_b: np.ndarray
    free_d: np.ndarray
    nonnegative_b: bool

    @property
    def split(self) -> bool:
        return self.variant is EmosVariant.DUAL_SPLIT_VARIANCE

    def unpack(self, theta: np.ndarray) -> tuple[float, np.ndarray, float, np.ndarray]:
        nb = int(self.free_b.sum())
        beta = np.zeros(self.free_b.size)
        beta[self.free_b] = theta[1 : 1 + nb]
        gamma = float(theta[1 + nb])
        if self.split:
            delta = np.zeros(self.free_d.size)
            delta[self.free_d] = theta[2 + nb :]
        else:
            delta = theta[2 + nb :]
        return float(theta[0]), beta, gamma, delta

    def pack(self, a: float, beta: np.ndarray, gamma: float, delta: np.ndarray) -> np.ndarray:
        tail = delta[self.free_d] if self.split else delta
        return np.concatenate([[a], beta[self.free_b], [gamma], tail])

    def simplex(self, x0: np.ndarray) -> np.ndarray:
        nb = int(self.free_b.sum())
        steps = np.concatenate([[_STEP_A], np.full(nb, _STEP_B), np.full(x0.size - 1 - nb, _STEP_SCALE)])
        return np.vstack([x0, x0 + np.diag(steps)])


def _evaluate(theta: np.ndarray, design: _Design, y: np.ndarray, packing: _Packing) -> tuple[float, np.ndarray]:
    a, beta, gamma, delta = packing.unpack(theta)
    b = beta * beta if packing.nonnegative_b else beta
    mu = a + design.means @ b
    if packing.split:
        spread = design.group_variance @ (delta * delta)
    else:
        spread = float(delta[0] ** 2) * design.pooled_variance
    variance = gamma * gamma + VARIANCE_FLOOR + spread
    sd = np.sqrt(variance)
    value = float(np.mean(crps_gaussian_array(mu, variance, y)))

    n = y.size
    d_mean, d_sd = crps_gaussian_gradient(mu, sd, y)
    d_var = d_sd / (2.0 * sd)
    g_b = design.means.T @ d_mean / n
    if packing.nonnegative_b:
        g_b = g_b * 2.0 * beta
    g_gamma = 2.0 * gamma * float(np.mean(d_var))
    if packing.split:
        g_delta = (design.group_variance.T @ d_var / n * 2.0 * delta)[packing.free_d]
    else:
        g_delta = np.array([2.0 * float(delta[0]) * float(np.mean(d_var * design.pooled_variance))])
    grad = np.concatenate([[float(np.mean(d_mean))], g_b[packing.free_b], [g_gamma], g_delta])
    return value, grad


def _default_labels(summaries: Sequence[EnsembleSummary], variant: EmosVariant) -> list[str]:
    if variant is EmosVariant.NON_EXCHANGEABLE:
        return member_labels(summaries[0])
    seen: dict[str, None] = {}
    for summary in summaries:
        for label in summary.labels:
            seen.setdefault(label, None)
    return list(seen)


def _cold_start(summaries: Sequence[EnsembleSummary], design: _Design, variant: EmosVariant) -> np.ndarray:
    """Equal pooled weight per member: b_k = M_k / M for the groups present."""
    if variant is EmosVariant.NON_EXCHANGEABLE:
        weights = design.present.astype(float)
    else:
        sizes = {label: size for s in summaries for label, size in zip(s.labels, s.group_sizes)}
        weights = np.array([float(sizes.get(label, 0)) if present else 0.0
                            for label, present in zip(design.labels, design.present)])
    total = weights.sum()
    return weights / total if total > 0 else weights


def _start(
    init: EmosParameters | None,
    summaries: Sequence[EnsembleSummary],
    design: _Design,
    packing: _Packing,
) -> np.ndarray:
    labels = design.labels
    if init is None:
        b = _cold_start(summaries, design, packing.variant)
        gamma = 1.0
        delta = np.ones(len(labels) if packing.split else 1)
        a = 0.0
    else:
        a = init.a
        b = np.array([init.coefficient(label) for label in labels])
        gamma = math.sqrt(max(init.c - VARIANCE_FLOOR, 0.0))
        if packing.split:
            delta = np.sqrt(np.maximum([init.variance_coefficient(label) for label in labels], 0.0))
        else:
            delta = np.array([math.sqrt(max(init.d, 0.0))])
    b = np.where(packing.free_b, b, 0.0)
    beta = np.sqrt(np.maximum(b, 0.0)) if packing.nonnegative_b else b
    return packing.pack(a, beta, gamma, delta)


def _parameters(
    theta: np.ndarray,
    value: float,
    packing: _Packing,
    labels: Sequence[str],
    converged: bool,
    trained_on: WindowDescriptor,
) -> EmosParameters:
    a, beta, gamma, delta = packing.unpack(theta)
    b = beta * beta if packing.nonnegative_b else beta
    c = gamma * gamma + VARIANCE_FLOOR
    if packing.split:
        d, d_groups = 0.0, [float(x * x) for x in delta]
    else:
        d, d_groups = float(delta[0] ** 2), None
    return EmosParameters(
        variant=packing.variant,
        labels=list(labels),
        a=a,
        b=[float(x) for x in b],
        c=c,
        d=d,
        d_groups=d_groups,
        converged=converged,
        objective=value,
        trained_on=trained_on,
    )


def fit(
    window: TrainingWindow,
    variant: EmosVariant,
    init: EmosParameters | None = None,
    *,
    labels: Sequence[str] | None = None,
    summaries: Sequence[EnsembleSummary] | None = None,
    nonnegative_b: bool = False,
    refine: bool = True,
    max_iter: int = DEFAULT_MAX_ITER,
    fatol: float = DEFAULT_FATOL,
    xatol: float = DEFAULT_XATOL,
) -> EmosParameters:
    """Minimum mean CRPS fit over ``window``.

    Nelder-Mead from ``init`` (cold start when None), then L-BFGS-B with the
    analytic gradient when ``refine``. The best of start, simplex and refined
    points is returned, so the objective never exceeds the starting value.

    ``labels`` fixes the model's groups (member labels for NON_EXCHANGEABLE);
    a label with no members in the window keeps b = 0 and, for the split
    variant, d_k = 0. Groups that are singletons throughout have d_k = 0.
    """
    if len(window) == 0:
        raise EmptyWindowError(
            "cannot fit on an empty training window",
            scope=window.scope_id or None,
            target_date=window.target_init_time.isoformat(),
            lead=window.lead_time,
        )
    cases = _summaries(window, summaries)
    model_labels = list(labels) if labels is not None else _default_labels(cases, variant)
    if variant.is_dual and len(model_labels) != 2:
        raise EmosKitError(f"{variant.value} needs exactly two groups", labels=model_labels)
    if not model_labels:
        raise EmosKitError(f"{variant.value} needs at least one group")

    design = _design(cases, variant, model_labels, strict=True)
    y = window.observations
    packing = _Packing(
        variant=variant,
        free_b=design.present.copy(),
        free_d=design.present & design.spread_defined,
        nonnegative_b=nonnegative_b,
    )

    def objective(theta: np.ndarray) -> float:
        return _evaluate(theta, design, y, packing)[0]

    x0 = _start(init, cases, design, packing)
    candidates = [(objective(x0), x0)]

    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": packing.simplex(x0),
            "maxiter": max_iter,
            "fatol": fatol,
            "xatol": xatol,
        },
    )
    candidates.append((float(result.fun), np.asarray(result.x)))
    converged = bool(result.success)

    if refine:
        refined = minimize(
            _evaluate,
            result.x,
            args=(design, y, packing),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iter},
        )
        if np.all(np.isfinite(refined.x)) and math.isfinite(refined.fun):
            candidates.append((float(refined.fun), np.asarray(refined.x)))
            converged = converged or bool(refined.success)

    value, theta = min(candidates, key=lambda item: item[0])
    if not converged:
        logger.warning(
            "EMOS fit did not converge (%s, scope=%s, target=%s, lead=%d): %s",
            variant.value,
            window.scope_id or "-",
            window.target_init_time,
            window.lead_time,
            result.message,
        )
    logger.debug("fit %s scope=%s n=%d crps=%.5f nit=%d", variant.value, window.scope_id, len(window), value, result.nit)
    return _parameters(theta, value, packing, model_labels, converged, WindowDescriptor(**window.describe()))


# --- parameter files ---


def write_parameters(records: Iterable[FitRecord], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.model_dump_json())
            fh.write("\n")
    return path


def read_parameters(path: Path | str) -> list[FitRecord]:
    path = Path(path)
    records: list[FitRecord] = []
    if not path.is_file():
        raise DatasetError("parameters file not found", path=path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(FitRecord.model_validate_json(line))
            except ValidationError as exc:
                raise DatasetError(f"invalid parameter record: {exc.errors()[0]['msg']}", path=path, line=line_no) from exc
    return records


__all__ = [
    "VARIANCE_FLOOR",
    "summarize",
    "member_labels",
    "predictive",
    "predictive_arrays",
    "mean_crps_objective",
    "fit",
    "write_parameters",
    "read_parameters",
]
