"""Training-window assembly for local, regional and semi-local estimation."""

from __future__ import annotations

import logging
from datetime import date

from ..errors import EmosKitError
from ..schemas.dataset import Dataset, TrainingWindow
from ..schemas.selection import ClusterAssignment, ScopeMode, TrainingScope
from .dataset import build_training_window

logger = logging.getLogger(__name__)


def scope_stations(dataset: Dataset, scope: TrainingScope, assignment: ClusterAssignment | None = None) -> list[str]:
    if scope.mode is ScopeMode.LOCAL:
        dataset.station(scope.scope_id)
        return [scope.scope_id]
    if scope.mode is ScopeMode.REGIONAL:
        return list(dataset.station_ids)
    if assignment is None:
        raise EmosKitError("semi-local training needs a cluster assignment", scope=scope.scope_id)
    index = scope.cluster_index
    if index is None or index >= assignment.k:
        raise EmosKitError(f"cluster {scope.scope_id} outside k={assignment.k}", scope=scope.scope_id)
    return assignment.members(index)


def scopes_for(dataset: Dataset, mode: ScopeMode, assignment: ClusterAssignment | None = None) -> list[TrainingScope]:
    """Every scope of one mode; together their station sets partition the dataset."""
    if mode is ScopeMode.LOCAL:
        return [TrainingScope.local(sid) for sid in dataset.station_ids]
    if mode is ScopeMode.REGIONAL:
        return [TrainingScope.regional()]
    if assignment is None:
        raise EmosKitError("semi-local training needs a cluster assignment")
    return [TrainingScope.cluster(j) for j in range(assignment.k)]


def scope_of_station(station_id: str, mode: ScopeMode, assignment: ClusterAssignment | None = None) -> TrainingScope:
    if mode is ScopeMode.LOCAL:
        return TrainingScope.local(station_id)
    if mode is ScopeMode.REGIONAL:
        return TrainingScope.regional()
    if assignment is None:
        raise EmosKitError("semi-local training needs a cluster assignment")
    return TrainingScope.cluster(assignment.cluster_of(station_id))


def assemble_scope_window(
    dataset: Dataset,
    scope: TrainingScope,
    assignment: ClusterAssignment | None,
    target_init_time: date,
    lead_time: int,
    n: int,
) -> TrainingWindow:
    stations = scope_stations(dataset, scope, assignment)
    return build_training_window(
        dataset,
        target_init_time,
        lead_time,
        n,
        station_ids=stations,
        scope_id=scope.scope_id,
    )


__all__ = ["scope_stations", "scopes_for", "scope_of_station", "assemble_scope_window"]
