import os
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from emoskit.schemas.dataset import Dataset, GroupedEnsembleForecast, Observation, StationMeta  # noqa: E402
from emoskit.schemas.synth import GroupSpec, SynthConfig  # noqa: E402
from emoskit.services.synthgen import generate  # noqa: E402


def pytest_collection_modifyitems(config, items):
    if os.getenv("EMOSKIT_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="full-size run; set EMOSKIT_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def small_synth_config(**overrides) -> SynthConfig:
    """8 stations, H with 10 members at 4 units, L with 20 members at 1 unit."""
    base = dict(
        n_stations=8,
        n_days=40,
        lead_times=[1],
        groups=[
            GroupSpec(label="H", n_members=10, bias=1.0, error_sd=1.5, spread_sd=0.75, cost_per_member=4.0),
            GroupSpec(label="L", n_members=20, bias=1.0, error_sd=1.56, spread_sd=0.68, cost_per_member=1.0),
        ],
        seed=7,
    )
    base.update(overrides)
    return SynthConfig(**base)


@pytest.fixture(scope="session")
def small_synth():
    return generate(small_synth_config())


@pytest.fixture
def tiny_dataset() -> Dataset:
    """Two stations, five daily inits, lead 1; H has 2 members, L has 3."""
    stations = [
        StationMeta(station_id="A", latitude=47.0, longitude=11.0, station_elevation=600.0, model_elevation=500.0),
        StationMeta(station_id="B", latitude=48.0, longitude=12.0, station_elevation=200.0, model_elevation=200.0),
    ]
    origin = datetime(2021, 7, 1)
    forecasts = []
    observations = []
    for day in range(5):
        init = origin + timedelta(days=day)
        for k, sid in enumerate(("A", "B")):
            base = 290.0 + day + k
            forecasts.append(
                GroupedEnsembleForecast(
                    station_id=sid,
                    init_time=init,
                    lead_time=1,
                    groups=(("H", np.array([base, base + 1.0])), ("L", np.array([base - 1.0, base, base + 2.0]))),
                )
            )
    for day in range(1, 6):
        for k, sid in enumerate(("A", "B")):
            if sid == "B" and day == 3:
                continue
            observations.append(Observation(sid, origin + timedelta(days=day), 290.5 + day + k))
    return Dataset.build(stations, observations, forecasts)


def small_experiment_config(**sections) -> "ExperimentConfig":
    """Regional DUAL experiment on ``small_synth``: 15 training days, three 4:1 mixtures."""
    from emoskit.schemas.experiment import ExperimentConfig

    base = dict(
        scenario={"mixtures": [{"low": 0, "high": 10}, {"low": 8, "high": 8}, {"low": 20, "high": 5}]},
        training={"mode": "regional", "n_days": 15, "lead_times": [1], "seed": 3},
        emos={"max_iter": 200},
        scores={"bs_threshold_levels": [10, 50, 90], "qs_levels": [2, 50, 98]},
        inference={"replicates": 200, "min_station_pairs": 10},
    )
    for name, values in sections.items():
        base[name] = {**base.get(name, {}), **values}
    return ExperimentConfig.model_validate(base)


@pytest.fixture(scope="session")
def experiment_synth():
    return generate(small_synth_config(n_days=35))


@pytest.fixture(scope="session")
def experiment_table(experiment_synth):
    from emoskit.logic.experiment import run_experiment

    return run_experiment(small_experiment_config(), experiment_synth.dataset, jobs=1)
