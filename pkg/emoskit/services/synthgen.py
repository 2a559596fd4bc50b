"""Synthetic dual-resolution ensembles with known ground truth.

The truth at each station is an AR(1) anomaly around a station climate.
Each group's ensemble centre is truth + group bias + station bias + an error
whose components are correlated across groups; members scatter around the
centre with a per-case spread multiplier shared by the groups. Raw members
carry the lapse-rate offset of the station/model elevation mismatch, so the
orographic correction recovers the simulated forecast.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime, time, timedelta
from pathlib import Path

import numpy as np

from ..errors import EmosKitError
from ..schemas.dataset import Dataset, GroupedEnsembleForecast, Observation, StationMeta
from ..schemas.synth import GroundTruthParams, SynthConfig
from .dataset import LAPSE_RATE_K_PER_M, write_dataset

logger = logging.getLogger(__name__)

MAX_ENSEMBLE_MEMBERS = 254

# (cost ratio, budget in low-resolution member units, (M_L, M_H) mixtures)
SCENARIOS: dict[str, tuple[float, int, list[tuple[int, int]]]] = {
    "LHPC_4": (4.0, 200, [(0, 50), (40, 40), (120, 20), (160, 10), (200, 0)]),
    "SHPC_4": (4.0, 32, [(0, 8), (8, 6), (16, 4), (24, 2), (28, 1), (32, 0)]),
    "LHPC_16": (16.0, 256, [(0, 16), (16, 15), (32, 14), (64, 12), (128, 8), (254, 0)]),
    "SHPC_16": (16.0, 128, [(0, 8), (16, 7), (32, 6), (64, 4), (128, 0)]),
}


@dataclass(frozen=True)
class SyntheticData:
    dataset: Dataset
    truth: GroundTruthParams | None
    config: SynthConfig

    @property
    def stations(self) -> tuple[StationMeta, ...]:
        return self.dataset.stations

    @property
    def observations(self) -> tuple[Observation, ...]:
        return self.dataset.observations

    @property
    def forecasts(self) -> tuple[GroupedEnsembleForecast, ...]:
        return self.dataset.forecasts

    def write(self, directory: Path | str) -> tuple[Path, Path, Path]:
        return write_dataset(self.dataset, directory)


def _stations(config: SynthConfig, rng: np.random.Generator) -> list[StationMeta]:
    lat = rng.uniform(35.0, 65.0, config.n_stations)
    lon = rng.uniform(-10.0, 30.0, config.n_stations)
    elevation = rng.uniform(0.0, 1500.0, config.n_stations)
    offset = rng.normal(0.0, config.elevation_difference_sd, config.n_stations)
    return [
        StationMeta(
            station_id=f"S{i:04d}",
            latitude=float(lat[i]),
            longitude=float(lon[i]),
            station_elevation=float(elevation[i]),
            model_elevation=float(elevation[i] - offset[i]),
        )
        for i in range(config.n_stations)
    ]


def _truth(config: SynthConfig, rng: np.random.Generator, n_valid: int) -> np.ndarray:
    """(stations, days) temperatures: station climate plus a stationary AR(1) anomaly."""
    phi = config.truth_ar1_coefficient
    climate = config.climate_mean + config.climate_station_sd * rng.standard_normal(config.n_stations)
    innovation_sd = config.anomaly_sd * math.sqrt(1.0 - phi * phi)
    anomaly = np.empty((config.n_stations, n_valid))
    anomaly[:, 0] = config.anomaly_sd * rng.standard_normal(config.n_stations)
    for t in range(1, n_valid):
        anomaly[:, t] = phi * anomaly[:, t - 1] + innovation_sd * rng.standard_normal(config.n_stations)
    return climate[:, np.newaxis] + anomaly


def generate(config: SynthConfig) -> SyntheticData:
    rng = np.random.default_rng(config.seed)
    stations = _stations(config, rng)
    max_lead = max(config.lead_times)
    n_valid = config.n_days + max_lead
    truth = _truth(config, rng, n_valid)
    groups = [g for g in config.groups if g.n_members > 0]
    station_bias = rng.normal(0.0, config.station_bias_spread, (config.n_stations, len(groups)))
    lapse_offset = np.array([LAPSE_RATE_K_PER_M * s.elevation_difference for s in stations])
    rho = config.error_correlation
    exact = config.exact_emos
    origin = datetime.combine(config.start_date, time())

    forecasts: list[GroupedEnsembleForecast] = []
    exact_obs: dict[tuple[int, int], float] = {}
    for day in range(config.n_days):
        init_time = origin + timedelta(days=day)
        for lead in config.lead_times:
            valid = day + lead
            growth = 1.0 + config.lead_growth * (lead - 1)
            common = rng.standard_normal(config.n_stations)
            own = rng.standard_normal((config.n_stations, len(groups)))
            errors = rho * common[:, np.newaxis] + math.sqrt(1.0 - rho * rho) * own
            multiplier = rng.lognormal(0.0, config.spread_variability, config.n_stations)

            members_by_group = []
            for k, spec in enumerate(groups):
                centre = truth[:, valid] + spec.bias + station_bias[:, k] + spec.error_sd * growth * errors[:, k]
                noise = rng.standard_normal((config.n_stations, spec.n_members))
                scatter = (spec.spread_sd * growth * multiplier)[:, np.newaxis]
                members_by_group.append(centre[:, np.newaxis] + scatter * noise)

            if exact is not None:
                pooled = np.concatenate(members_by_group, axis=1)
                mean = exact.a + sum(
                    exact.b.get(spec.label, 0.0) * members.mean(axis=1) for spec, members in zip(groups, members_by_group)
                )
                variance = exact.c + exact.d * pooled.var(axis=1, ddof=1)
                draws = mean + np.sqrt(variance) * rng.standard_normal(config.n_stations)
                for s in range(config.n_stations):
                    exact_obs[(s, valid)] = float(draws[s])

            for s, station in enumerate(stations):
                forecasts.append(
                    GroupedEnsembleForecast(
                        station_id=station.station_id,
                        init_time=init_time,
                        lead_time=lead,
                        groups=tuple(
                            (spec.label, members[s] + lapse_offset[s])
                            for spec, members in zip(groups, members_by_group)
                        ),
                    )
                )

    observations: list[Observation] = []
    for s, station in enumerate(stations):
        for t in range(n_valid):
            if exact is not None:
                if (s, t) not in exact_obs:
                    continue
                value = exact_obs[(s, t)]
            else:
                value = float(truth[s, t])
            observations.append(Observation(station.station_id, origin + timedelta(days=t), value))

    ground_truth = None
    if exact is not None:
        ground_truth = GroundTruthParams(a=exact.a, b=dict(exact.b), c=exact.c, d=exact.d)
    logger.info(
        "Generated %d stations x %d days, leads %s, groups %s",
        config.n_stations,
        config.n_days,
        config.lead_times,
        ",".join(f"{g.label}={g.n_members}" for g in groups),
    )
    return SyntheticData(Dataset.build(stations, observations, forecasts), ground_truth, config)


def _high_low(config: SynthConfig):
    if len(config.groups) != 2:
        raise EmosKitError("a cost-equivalent sweep needs exactly two groups", groups=len(config.groups))
    low, high = sorted(config.groups, key=lambda g: g.cost_per_member)
    return high, low


def cost_equivalent_sweep(
    config: SynthConfig,
    total_budget: float,
    *,
    max_members: int = MAX_ENSEMBLE_MEMBERS,
) -> list[tuple[int, int]]:
    """Mixtures (M_L, M_H) that fill ``total_budget``, from pure high to pure low resolution.

    For each M_H the low-resolution group gets the remaining budget, capped
    at ``max_members``; every mixture costs at most the budget.
    """
    high, low = _high_low(config)
    if total_budget < low.cost_per_member:
        raise EmosKitError(
            f"budget {total_budget} is below the cost of one member ({low.cost_per_member})",
            budget=total_budget,
        )
    top = min(int(math.floor(total_budget / high.cost_per_member + 1e-9)), max_members)
    mixtures: list[tuple[int, int]] = []
    for m_high in range(top, -1, -1):
        remaining = total_budget - m_high * high.cost_per_member
        m_low = min(int(math.floor(remaining / low.cost_per_member + 1e-9)), max_members)
        if m_low == 0 and m_high == 0:
            continue
        mixtures.append((m_low, m_high))
    return mixtures


def scenario_mixtures(name: str) -> tuple[float, int, list[tuple[int, int]]]:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise EmosKitError(f"unknown scenario {name!r}", known=sorted(SCENARIOS)) from None


__all__ = [
    "MAX_ENSEMBLE_MEMBERS",
    "SCENARIOS",
    "SyntheticData",
    "generate",
    "cost_equivalent_sweep",
    "scenario_mixtures",
]
