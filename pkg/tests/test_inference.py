import math
from datetime import date, timedelta

import numpy as np
import pytest
from arch.bootstrap import optimal_block_length as arch_optimal_block_length

from emoskit.errors import EmosKitError, SeriesAlignmentError
from emoskit.schemas.inference import BootstrapCi, BootstrapStatistic, DmFlag, ScoreSeries
from emoskit.services.inference import (
    align,
    autocovariances,
    default_block_length,
    default_max_lag,
    dm_test,
    optimal_block_length,
    significance_matrix,
    stationary_bootstrap_ci,
    stationary_bootstrap_indices,
)

START = date(2016, 7, 1)


def _series(label: str, values, start: date = START) -> ScoreSeries:
    values = np.asarray(values, dtype=float)
    return ScoreSeries(label, values, tuple(start + timedelta(days=i) for i in range(values.size)))


def _ar1(rng: np.random.Generator, n: int, phi: float) -> np.ndarray:
    x = np.empty(n)
    x[0] = rng.normal() / math.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + rng.normal()
    return x


def test_score_series_validation() -> None:
    with pytest.raises(SeriesAlignmentError):
        ScoreSeries("a", np.array([1.0, 2.0]), (START, START))
    with pytest.raises(SeriesAlignmentError):
        _series("a", [1.0, float("nan")])
    with pytest.raises(SeriesAlignmentError):
        ScoreSeries("a", np.array([1.0]), (START, START + timedelta(days=1)))
    gappy = ScoreSeries("a", np.array([1.0, 2.0]), (START, START + timedelta(days=3)))
    assert gappy.has_gaps
    assert not _series("a", [1.0, 2.0]).has_gaps


def test_from_pairs_sorts_by_date() -> None:
    series = ScoreSeries.from_pairs("a", [(START + timedelta(days=1), 2.0), (START, 1.0)])
    assert series.dates == (START, START + timedelta(days=1))
    assert series.values.tolist() == [1.0, 2.0]


def test_align_keeps_common_dates() -> None:
    a = _series("a", np.arange(10.0))
    b = _series("b", np.arange(10.0), start=START + timedelta(days=4))
    left, right = align(a, b)
    assert left.dates == right.dates
    assert len(left) == 6
    assert left.values[0] == 4.0 and right.values[0] == 0.0


def test_autocovariances_use_divisor_n() -> None:
    x = np.array([1.0, -1.0, 1.0, -1.0])
    np.testing.assert_allclose(autocovariances(x, 2), [1.0, -0.75, 0.5])
    assert default_max_lag(1) == 0
    assert default_max_lag(5) == 4


def test_dm_identical_series() -> None:
    a = _series("a", np.linspace(0.8, 1.2, 30))
    result = dm_test(a, a, max_lag=2)
    assert result.statistic == 0.0
    assert result.p_value == 1.0
    assert result.flag is DmFlag.DEGENERATE_ZERO_VARIANCE


def test_dm_alternating_differences() -> None:
    a = _series("a", [1.0, 0.0] * 10)
    b = _series("b", [0.0, 1.0] * 10)
    result = dm_test(a, b)
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(1.0)
    assert result.flag is DmFlag.OK


def test_dm_antisymmetric_and_detects_offset() -> None:
    rng = np.random.default_rng(0)
    base = rng.gamma(4.0, 0.25, 62)
    a = _series("a", base + 0.3 + rng.normal(0.0, 0.1, 62))
    b = _series("b", base)
    ab, ba = dm_test(a, b, 2), dm_test(b, a, 2)
    assert ab.statistic == pytest.approx(-ba.statistic)
    assert ab.p_value == pytest.approx(ba.p_value)
    assert ab.statistic > 0
    assert ab.rejects(0.05)
    assert ab.mean_difference == pytest.approx(0.3, abs=0.05)


def test_dm_constant_offset_is_degenerate_but_significant() -> None:
    a = _series("a", np.full(20, 2.0))
    b = _series("b", np.full(20, 1.0))
    result = dm_test(a, b)
    assert result.flag is DmFlag.DEGENERATE_ZERO_VARIANCE
    assert result.p_value == 0.0
    assert result.statistic == math.inf


def test_dm_preconditions() -> None:
    with pytest.raises(SeriesAlignmentError):
        dm_test(_series("a", np.ones(12)), _series("b", np.ones(12), start=START + timedelta(days=1)))
    with pytest.raises(SeriesAlignmentError):
        dm_test(_series("a", np.ones(9)), _series("b", np.zeros(9)))
    with pytest.raises(EmosKitError):
        dm_test(_series("a", np.ones(12)), _series("b", np.zeros(12)), max_lag=-1)


@pytest.mark.slow
def test_dm_size_under_the_null() -> None:
    rng = np.random.default_rng(2016)
    trials = 10_000
    rejected = 0
    for _ in range(trials):
        a = _series("a", rng.normal(1.0, 0.3, 62))
        b = _series("b", rng.normal(1.0, 0.3, 62))
        rejected += dm_test(a, b).rejects(0.05)
    assert 0.03 <= rejected / trials <= 0.07


def test_significance_matrix_single_configuration() -> None:
    series = {"(0,50)": {"S1": _series("a", np.linspace(1, 2, 25))}}
    matrix = significance_matrix(series)
    assert matrix.shape == (1, 1)
    assert matrix.loc["(0,50)", "(0,50)"] == 0.0


def test_significance_matrix_forced_rejection() -> None:
    rng = np.random.default_rng(1)
    by_config: dict[str, dict[str, ScoreSeries]] = {"A": {}, "B": {}, "C": {}}
    for s in range(30):
        base = rng.gamma(4.0, 0.25, 40)
        sid = f"S{s:02d}"
        by_config["A"][sid] = _series("A", base)
        by_config["B"][sid] = _series("B", base + 1.0 + rng.normal(0.0, 1e-3, 40))
        by_config["C"][sid] = _series("C", base)
    matrix = significance_matrix(by_config, 0.05)
    assert matrix.loc["A", "B"] == 1.0
    assert matrix.loc["B", "A"] == 1.0
    assert matrix.loc["A", "C"] == 0.0
    assert all(matrix.loc[c, c] == 0.0 for c in "ABC")
    assert ((matrix >= 0.0) & (matrix <= 1.0)).all().all()


def test_significance_matrix_drops_short_stations() -> None:
    by_config = {
        "A": {"S1": _series("A", np.linspace(1, 2, 15))},
        "B": {"S1": _series("B", np.linspace(2, 3, 15))},
    }
    matrix = significance_matrix(by_config, min_pairs=20)
    assert math.isnan(matrix.loc["A", "B"])


def test_significance_matrix_requires_same_stations() -> None:
    by_config = {
        "A": {"S1": _series("A", np.ones(25))},
        "B": {"S2": _series("B", np.ones(25))},
    }
    with pytest.raises(SeriesAlignmentError):
        significance_matrix(by_config)
    with pytest.raises(SeriesAlignmentError):
        significance_matrix({})


def test_bootstrap_indices_shape_and_limits() -> None:
    idx = stationary_bootstrap_indices(62, 300, 4.0, np.random.default_rng(0))
    assert idx.shape == (300, 62)
    assert idx.min() >= 0 and idx.max() < 62

    # mean block length 1 is the iid bootstrap: every position is a fresh start
    iid = stationary_bootstrap_indices(20, 50, 1.0, np.random.default_rng(5))
    np.testing.assert_array_equal(iid, np.random.default_rng(5).integers(20, size=(50, 20)))

    # a very long block wraps around circularly
    long = stationary_bootstrap_indices(10, 5, 1e12, np.random.default_rng(1))
    np.testing.assert_array_equal(long, (long[:, :1] + np.arange(10)) % 10)


def test_bootstrap_constant_series() -> None:
    ci = stationary_bootstrap_ci(_series("a", np.full(30, 0.9)), replicates=200, seed=1)
    assert ci.lower == pytest.approx(0.9) and ci.upper == pytest.approx(0.9)
    assert ci.upper - ci.lower < 1e-12


def test_bootstrap_reproducible_and_nested() -> None:
    series = _series("a", _ar1(np.random.default_rng(3), 62, 0.5) + 5.0)
    first = stationary_bootstrap_ci(series, replicates=600, seed=42)
    again = stationary_bootstrap_ci(series, replicates=600, seed=42)
    assert first == again
    assert first.lower <= first.point <= first.upper
    assert first.mean_block_length == default_block_length(62) == 4.0

    wide = stationary_bootstrap_ci(series, replicates=600, level=0.99, seed=42)
    assert wide.lower <= first.lower and wide.upper >= first.upper

    other = stationary_bootstrap_ci(series, replicates=600, seed=43)
    assert (other.lower, other.upper) != (first.lower, first.upper)


def test_bootstrap_paired_statistics() -> None:
    rng = np.random.default_rng(4)
    ref = _series("ref", rng.gamma(4.0, 0.25, 40))
    better = _series("new", ref.values * 0.8)
    skill = stationary_bootstrap_ci(better, BootstrapStatistic.SKILL, replicates=300, seed=0, reference=ref)
    assert skill.point == pytest.approx(0.2)
    assert skill.lower == pytest.approx(0.2) and skill.upper == pytest.approx(0.2)

    diff = stationary_bootstrap_ci(better, "mean_difference", replicates=300, seed=0, reference=ref)
    assert diff.point == pytest.approx(float(np.mean(better.values - ref.values)))
    assert diff.upper < 0

    with pytest.raises(EmosKitError):
        stationary_bootstrap_ci(better, BootstrapStatistic.MEAN_DIFFERENCE, replicates=300)
    with pytest.raises(SeriesAlignmentError):
        stationary_bootstrap_ci(
            better,
            BootstrapStatistic.MEAN_DIFFERENCE,
            replicates=300,
            reference=_series("x", ref.values, start=START + timedelta(days=1)),
        )


def test_bootstrap_rmse_statistic() -> None:
    squared = _series("sq", [1.0, 4.0, 9.0, 16.0, 25.0, 36.0])
    ci = stationary_bootstrap_ci(squared, BootstrapStatistic.RMSE, replicates=200, seed=0)
    assert ci.point == pytest.approx(math.sqrt(91.0 / 6.0))
    assert 1.0 <= ci.lower <= ci.upper <= 6.0


def test_bootstrap_preconditions() -> None:
    with pytest.raises(SeriesAlignmentError):
        stationary_bootstrap_ci(_series("a", np.ones(4)), replicates=200)
    with pytest.raises(EmosKitError):
        stationary_bootstrap_ci(_series("a", np.ones(10)), replicates=99)
    with pytest.raises(EmosKitError):
        stationary_bootstrap_ci(_series("a", np.ones(10)), replicates=200, mean_block_length=0.5)


def test_automatic_block_length() -> None:
    rng = np.random.default_rng(6)
    persistent = _ar1(rng, 200, 0.8)
    white = rng.normal(size=200)
    assert optimal_block_length(persistent) > optimal_block_length(white) >= 1.0
    ci = stationary_bootstrap_ci(_series("a", persistent), replicates=200, mean_block_length="auto", seed=0)
    assert ci.mean_block_length >= 1.0
    expected = arch_optimal_block_length(persistent)["stationary"].iloc[0]
    assert ci.mean_block_length == pytest.approx(expected)
    assert optimal_block_length(np.full(40, 2.0)) == 1.0


@pytest.mark.slow
def test_bootstrap_coverage() -> None:
    rng = np.random.default_rng(62)
    trials = 10_000
    covered = 0
    for trial in range(trials):
        series = _series("a", rng.normal(0.0, 1.0, 62))
        ci = stationary_bootstrap_ci(series, replicates=2000, seed=trial)
        covered += ci.lower <= 0.0 <= ci.upper
    assert 0.92 <= covered / trials <= 0.98


def test_bootstrap_coverage_on_iid_series() -> None:
    rng = np.random.default_rng(2024)
    trials = 2000
    covered = 0
    for trial in range(trials):
        series = _series("a", rng.normal(0.0, 1.0, 62))
        ci = stationary_bootstrap_ci(series, replicates=2000, seed=trial)
        covered += ci.lower <= 0.0 <= ci.upper
    assert 0.92 <= covered / trials <= 0.98



@pytest.mark.slow
def test_longer_blocks_cover_persistent_series_better() -> None:
    rng = np.random.default_rng(7)
    trials = 2000
    hits = {1.0: 0, 16.0: 0}
    for trial in range(trials):
        series = _series("a", _ar1(rng, 62, 0.7))
        for block in hits:
            ci = stationary_bootstrap_ci(series, replicates=500, mean_block_length=block, seed=trial)
            hits[block] += ci.lower <= 0.0 <= ci.upper
    assert hits[16.0] > hits[1.0]
    assert hits[16.0] / trials >= 0.85


def test_interval_keeps_raw_percentiles() -> None:
    # a skewed replicate distribution may leave the point estimate outside
    ci = BootstrapCi(point=1.0, lower=1.2, upper=1.5, mean_block_length=4.0)
    assert ci.lower > ci.point
    with pytest.raises(ValueError):
        BootstrapCi(point=1.0, lower=1.5, upper=1.2, mean_block_length=4.0)

    rng = np.random.default_rng(11)
    skewed = _series("a", rng.lognormal(0.0, 1.5, 40))
    ci = stationary_bootstrap_ci(skewed, replicates=500, seed=0)
    values = skewed.values
    assert ci.point == pytest.approx(values.mean())
    assert ci.lower < ci.upper


def test_significance_matrix_never_runs_dm_below_its_minimum() -> None:
    by_config = {
        "A": {"S1": _series("A", np.linspace(1, 2, 8))},
        "B": {"S1": _series("B", np.linspace(2, 3, 8))},
    }
    matrix = significance_matrix(by_config, min_pairs=3)
    assert math.isnan(matrix.loc["A", "B"])
