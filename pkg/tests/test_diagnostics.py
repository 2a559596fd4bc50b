import pytest

from emoskit.errors import EmosKitError
from emoskit.logic.diagnostics import DIAGNOSTIC_COLUMNS, station_diagnostics
from emoskit.schemas.dataset import Dataset, GroupedEnsembleForecast


def test_identical_groups(tiny_dataset) -> None:
    forecasts = tuple(
        GroupedEnsembleForecast(
            station_id=fc.station_id,
            init_time=fc.init_time,
            lead_time=fc.lead_time,
            groups=(("H", fc.group("H")), ("L", fc.group("H").copy())),
        )
        for fc in tiny_dataset.forecasts
    )
    dataset = Dataset(tiny_dataset.stations, tiny_dataset.observations, forecasts)
    frame = station_diagnostics(dataset, ("H", "L"), 2)
    assert list(frame.columns) == DIAGNOSTIC_COLUMNS
    assert list(frame["station_id"]) == ["A", "B"]
    assert (frame[["mean_diff", "variance_diff", "rmse_diff"]] == 0.0).all().all()
    assert (frame["ks_p"] == 1.0).all()
    assert list(frame["n_cases"]) == [5, 5]


def test_shifted_low_group(tiny_dataset) -> None:
    # first two members of L are H - 1
    frame = station_diagnostics(tiny_dataset, ("H", "L"), 2)
    assert frame["mean_diff"].tolist() == pytest.approx([1.0, 1.0])
    assert frame["variance_diff"].tolist() == pytest.approx([0.0, 0.0])

    reverse = station_diagnostics(tiny_dataset, ("L", "H"), 2)
    assert reverse["mean_diff"].tolist() == pytest.approx([-1.0, -1.0])


def test_lead_filter(tiny_dataset) -> None:
    assert station_diagnostics(tiny_dataset, ("H", "L"), 2, lead_time=3).empty


def test_diagnostics_errors(tiny_dataset) -> None:
    with pytest.raises(EmosKitError):
        station_diagnostics(tiny_dataset, ("H", "L"), 3)
    with pytest.raises(EmosKitError):
        station_diagnostics(tiny_dataset, ("H", "H"), 2)
    with pytest.raises(EmosKitError):
        station_diagnostics(tiny_dataset, ("H", "L"), 1)
