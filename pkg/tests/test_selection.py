from datetime import date

import pytest

from emoskit.errors import EmosKitError, UnknownStationError
from emoskit.schemas.selection import ClusterAssignment, ScopeMode, TrainingScope
from emoskit.services.clustering import dataset_features, kmeans_cluster
from emoskit.services.selection import assemble_scope_window, scope_of_station, scope_stations, scopes_for

TARGET = date(2020, 7, 1)


def _assignment(dataset, k: int) -> ClusterAssignment:
    return kmeans_cluster(dataset_features(dataset, TARGET, 1, 30), k, seed=0)


def test_scope_ids() -> None:
    assert TrainingScope.local("S0001").scope_id == "S0001"
    assert TrainingScope.regional().scope_id == "global"
    assert TrainingScope.cluster(3).cluster_index == 3
    assert ScopeMode("semi_local") is ScopeMode.SEMI_LOCAL
    with pytest.raises(ValueError):
        TrainingScope(mode=ScopeMode.REGIONAL, scope_id="all")
    with pytest.raises(ValueError):
        TrainingScope(mode=ScopeMode.SEMI_LOCAL, scope_id="north")


def test_window_sizes_by_mode(small_synth) -> None:
    dataset = small_synth.dataset
    n_stations = len(dataset.station_ids)
    local = assemble_scope_window(dataset, TrainingScope.local("S0000"), None, TARGET, 1, 30)
    regional = assemble_scope_window(dataset, TrainingScope.regional(), None, TARGET, 1, 30)
    assert len(local) == 30
    assert set(local.station_ids) == {"S0000"}
    assert len(regional) == 30 * n_stations
    assert regional.scope_id == "global"

    assignment = _assignment(dataset, 3)
    sizes = [
        len(assemble_scope_window(dataset, scope, assignment, TARGET, 1, 30))
        for scope in scopes_for(dataset, ScopeMode.SEMI_LOCAL, assignment)
    ]
    assert sizes == [30 * len(assignment.members(j)) for j in range(3)]
    assert sum(sizes) == len(regional)


@pytest.mark.parametrize("mode", [ScopeMode.LOCAL, ScopeMode.REGIONAL, ScopeMode.SEMI_LOCAL])
def test_scopes_partition_stations(small_synth, mode) -> None:
    dataset = small_synth.dataset
    assignment = _assignment(dataset, 3) if mode is ScopeMode.SEMI_LOCAL else None
    stations = [sid for scope in scopes_for(dataset, mode, assignment) for sid in scope_stations(dataset, scope, assignment)]
    assert sorted(stations) == sorted(dataset.station_ids)
    for sid in dataset.station_ids:
        scope = scope_of_station(sid, mode, assignment)
        assert sid in scope_stations(dataset, scope, assignment)


def test_single_cluster_equals_regional(small_synth) -> None:
    dataset = small_synth.dataset
    assignment = _assignment(dataset, 1)
    semi = assemble_scope_window(dataset, TrainingScope.cluster(0), assignment, TARGET, 1, 10)
    regional = assemble_scope_window(dataset, TrainingScope.regional(), None, TARGET, 1, 10)
    assert semi.cases == regional.cases


def test_semi_local_needs_assignment(tiny_dataset) -> None:
    with pytest.raises(EmosKitError):
        scope_stations(tiny_dataset, TrainingScope.cluster(0))
    with pytest.raises(EmosKitError):
        scopes_for(tiny_dataset, ScopeMode.SEMI_LOCAL)
    assignment = ClusterAssignment(k=1, assignment={"A": 0, "B": 0}, centroids=[[0.0]])
    with pytest.raises(EmosKitError):
        scope_stations(tiny_dataset, TrainingScope.cluster(4), assignment)


def test_local_scope_unknown_station(tiny_dataset) -> None:
    with pytest.raises(UnknownStationError):
        scope_stations(tiny_dataset, TrainingScope.local("Z"))


def test_local_window_drops_missing_observation(tiny_dataset) -> None:
    window = assemble_scope_window(tiny_dataset, TrainingScope.local("B"), None, date(2021, 7, 5), 1, 4)
    assert len(window) == 3
    assert window.dropped_cases == 1
