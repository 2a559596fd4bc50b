import math

import numpy as np
import pytest
from scipy.integrate import simpson, trapezoid
from scipy.stats import norm

from emoskit.errors import UndefinedSkillError
from emoskit.schemas.scoring import EmpiricalPredictive, GaussianPredictive, ScoreConfig, level_name
from emoskit.services.scoring import (
    brier_score,
    brier_score_empirical_array,
    brier_score_gaussian_array,
    climatology_thresholds,
    crps_empirical,
    crps_empirical_array,
    crps_gaussian,
    crps_gaussian_array,
    crps_gaussian_gradient,
    empirical_cdf,
    empirical_quantile,
    empirical_quantiles,
    gaussian_cdf,
    gaussian_quantile,
    log_score_gaussian,
    point_errors,
    quantile_score,
    quantile_score_array,
    skill_score,
)


def test_crps_gaussian_standard_normal_at_mode() -> None:
    assert crps_gaussian(GaussianPredictive(0.0, 1.0), 0.0) == pytest.approx(0.233695, abs=1e-6)


def test_crps_gaussian_degenerate_limit() -> None:
    assert crps_gaussian(GaussianPredictive(2.0, 1e-18), 5.0) == pytest.approx(3.0, abs=1e-8)


def test_crps_gaussian_symmetry() -> None:
    pred = GaussianPredictive(0.0, 1.0)
    assert crps_gaussian(pred, 1.0) == pytest.approx(crps_gaussian(pred, -1.0))


def test_crps_gaussian_matches_quadrature() -> None:
    rng = np.random.default_rng(1000)
    n = 1000
    mean = rng.uniform(-20.0, 300.0, n)
    sd = rng.uniform(0.1, 10.0, n)
    obs = mean + rng.uniform(-5.0, 5.0, n) * sd

    # integrate each side of the observation separately; Simpson on 4001 nodes
    t = np.linspace(0.0, 1.0, 4001)
    lo, hi = mean - 12.0 * sd, mean + 12.0 * sd
    below = lo[:, None] + (obs - lo)[:, None] * t
    above = obs[:, None] + (hi - obs)[:, None] * t
    z_below = (below - mean[:, None]) / sd[:, None]
    z_above = (above - mean[:, None]) / sd[:, None]
    expected = simpson(norm.cdf(z_below) ** 2, x=below, axis=-1) + simpson(norm.sf(z_above) ** 2, x=above, axis=-1)

    scores = np.array([crps_gaussian(GaussianPredictive(m, s * s), x) for m, s, x in zip(mean, sd, obs)])
    np.testing.assert_allclose(scores, expected, rtol=0.0, atol=1e-6)
    np.testing.assert_allclose(crps_gaussian_array(mean, sd * sd, obs), scores, rtol=1e-12, atol=1e-12)


def test_crps_gaussian_rejects_nonfinite_obs() -> None:
    with pytest.raises(ValueError):
        crps_gaussian(GaussianPredictive(0.0, 1.0), float("nan"))


def test_gaussian_predictive_rejects_nonpositive_variance() -> None:
    with pytest.raises(ValueError):
        GaussianPredictive(0.0, 0.0)


def test_crps_gradient_matches_finite_differences() -> None:
    mean, sd, obs = 1.2, 0.8, 2.1
    h = 1e-6
    d_mean, d_sd = crps_gaussian_gradient(mean, sd, obs)
    fd_mean = (crps_gaussian_array(mean + h, sd**2, obs) - crps_gaussian_array(mean - h, sd**2, obs)) / (2 * h)
    fd_sd = (crps_gaussian_array(mean, (sd + h) ** 2, obs) - crps_gaussian_array(mean, (sd - h) ** 2, obs)) / (2 * h)
    assert float(d_mean) == pytest.approx(float(fd_mean), rel=1e-4)
    assert float(d_sd) == pytest.approx(float(fd_sd), rel=1e-4)


def test_crps_empirical_examples() -> None:
    assert crps_empirical(EmpiricalPredictive(np.array([3.0])), 5.0) == pytest.approx(2.0)
    assert crps_empirical(EmpiricalPredictive(np.array([0.0, 2.0])), 1.0) == pytest.approx(0.5)
    assert crps_empirical(EmpiricalPredictive(np.array([1.0, 1.0, 1.0])), 1.0) == pytest.approx(0.0)


def test_crps_empirical_matches_pairwise_and_integral() -> None:
    rng = np.random.default_rng(11)
    for _ in range(500):
        m = int(rng.integers(1, 51))
        members = rng.normal(280.0, 3.0, size=m)
        obs = float(rng.normal(280.0, 3.0))
        pairwise = np.mean(np.abs(members - obs)) - 0.5 * np.mean(np.abs(members[:, None] - members[None, :]))
        score = crps_empirical(EmpiricalPredictive(members), obs)
        assert score == pytest.approx(pairwise, abs=1e-10)

        # the squared CDF deviation is piecewise constant between sorted knots
        knots = np.sort(np.append(members, obs))
        mids = 0.5 * (knots[:-1] + knots[1:])
        cdf = np.searchsorted(np.sort(members), mids, side="right") / m
        exact = float(np.sum((cdf - (mids >= obs)) ** 2 * np.diff(knots)))
        assert score == pytest.approx(exact, abs=1e-10)


def test_crps_empirical_array_scores_each_case() -> None:
    members = np.array([[3.0, 3.0], [0.0, 2.0]])
    np.testing.assert_allclose(crps_empirical_array(members, [5.0, 1.0]), [2.0, 0.5])


def test_log_score_examples() -> None:
    half_log_2pi = 0.5 * math.log(2 * math.pi)
    pred = GaussianPredictive(0.0, 1.0)
    assert log_score_gaussian(pred, 0.0) == pytest.approx(half_log_2pi)
    assert log_score_gaussian(pred, 2.0) == pytest.approx(half_log_2pi + 2.0)
    assert log_score_gaussian(pred, 1.0) < log_score_gaussian(pred, 2.0)


def test_brier_score_examples() -> None:
    assert brier_score(lambda y: 1.0, 280.0, 281.0) == 0.0
    assert brier_score(lambda y: 0.3, 280.0, 281.0) == pytest.approx(0.49)
    assert brier_score(lambda y: 0.3, 282.0, 281.0) == pytest.approx(0.09)


def test_brier_integral_approximates_crps() -> None:
    pred = GaussianPredictive(1.0, 2.0)
    obs = 2.3
    y = np.linspace(1.0 - 30.0, 1.0 + 30.0, 60_001)
    bs = brier_score_gaussian_array(np.full(1, pred.mean), np.full(1, pred.variance), [obs], y)[0]
    assert float(trapezoid(bs, y)) == pytest.approx(crps_gaussian(pred, obs), abs=1e-3)

    ens = EmpiricalPredictive(np.array([0.0, 0.5, 2.0, 3.5]))
    y = np.linspace(-5.0, 8.0, 130_001)
    bs = brier_score_empirical_array(ens.members, [1.0], y)[0]
    assert float(trapezoid(bs, y)) == pytest.approx(crps_empirical(ens, 1.0), abs=1e-3)


def test_brier_arrays_agree_with_scalar() -> None:
    pred = GaussianPredictive(0.0, 4.0)
    thresholds = [-1.0, 0.0, 2.5]
    array = brier_score_gaussian_array([0.0], [4.0], [0.5], thresholds)[0]
    scalar = [brier_score(gaussian_cdf(pred), 0.5, y) for y in thresholds]
    np.testing.assert_allclose(array, scalar)

    ens = EmpiricalPredictive(np.array([1.0, 2.0, 3.0, 4.0]))
    array = brier_score_empirical_array(ens.members, [2.0], [2.0, 3.5])[0]
    scalar = [brier_score(empirical_cdf(ens), 2.0, y) for y in (2.0, 3.5)]
    np.testing.assert_allclose(array, scalar)
    assert scalar == pytest.approx([0.25, 0.0625])


def test_quantile_score_examples() -> None:
    pred = GaussianPredictive(0.0, 1.0)
    q98 = gaussian_quantile(pred)(0.98)
    assert quantile_score(gaussian_quantile(pred), q98 - 1.0, 0.98) == pytest.approx(0.02)
    for tau in (0.1, 0.5, 0.9):
        assert quantile_score(gaussian_quantile(pred), gaussian_quantile(pred)(tau), tau) == pytest.approx(0.0, abs=1e-12)


def test_quantile_score_rejects_levels_outside_unit_interval() -> None:
    with pytest.raises(ValueError):
        quantile_score(lambda tau: 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        quantile_score_array([0.0], [1.0], 0.0)


def test_empirical_quantile_follows_inverse_cdf() -> None:
    ens = EmpiricalPredictive(np.array([5.0, 1.0, 3.0, 2.0, 4.0]))
    q = empirical_quantile(ens)
    assert q(0.2) == 1.0
    assert q(0.21) == 2.0
    assert q(0.5) == 3.0
    assert q(0.98) == 5.0


def test_median_quantile_score_is_half_mae() -> None:
    rng = np.random.default_rng(5)
    for _ in range(100):
        n_cases = int(rng.integers(1, 200))
        members = rng.normal(0.0, 1.0, size=(n_cases, int(rng.integers(1, 51))))
        obs = rng.normal(0.0, 1.5, size=n_cases)
        medians = empirical_quantiles(members, [0.5])[:, 0]
        mae, _ = point_errors(medians, obs)
        assert float(np.mean(quantile_score_array(medians, obs, 0.5))) == pytest.approx(mae / 2, rel=1e-12, abs=1e-15)


def test_skill_score_examples() -> None:
    assert skill_score(0.08, 0.08) == 0.0
    assert skill_score(0.0, 0.08) == 1.0
    assert skill_score(0.06, 0.08) == pytest.approx(0.25)
    assert skill_score(0.0, 0.0) == 0.0
    with pytest.raises(UndefinedSkillError):
        skill_score(0.1, 0.0)


def test_point_errors_examples() -> None:
    assert point_errors([1.0, 2.0], [1.0, 2.0]) == (0.0, 0.0)
    assert point_errors([1.0, -1.0], [0.0, 0.0]) == pytest.approx((1.0, 1.0))
    assert point_errors([0.0, 2.0], [0.0, 0.0]) == pytest.approx((1.0, math.sqrt(2)))
    with pytest.raises(ValueError):
        point_errors([1.0], [1.0, 2.0])


def test_climatology_thresholds() -> None:
    assert climatology_thresholds([290.0] * 20, [0.05, 0.5, 0.95]) == [290.0, 290.0, 290.0]
    series = np.arange(1.0, 101.0)
    assert climatology_thresholds(series, [0.5]) == [50.0]
    t5, t10, t90, t95 = climatology_thresholds(series[::-1], [0.05, 0.10, 0.90, 0.95])
    assert t5 <= t10 <= t90 <= t95
    with pytest.raises(ValueError):
        climatology_thresholds([], [0.5])


def test_score_config_accepts_percentages() -> None:
    config = ScoreConfig(bs_threshold_levels=[10, 50, 90], qs_levels=[2, 98])
    assert config.bs_threshold_levels == [0.1, 0.5, 0.9]
    assert config.qs_levels == [0.02, 0.98]
    assert len(ScoreConfig().bs_threshold_levels) == 19
    with pytest.raises(ValueError):
        ScoreConfig(qs_levels=[0.5, 0.2])


def test_level_names() -> None:
    assert level_name("qs", 0.02) == "qs2"
    assert level_name("bs", 0.5) == "bs50"
    assert level_name("qs", 0.025) == "qs2p5"
