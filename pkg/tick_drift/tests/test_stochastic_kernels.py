import math

import numpy as np
import pytest
from pydantic import ValidationError

from tick_drift.errors import DomainError
from tick_drift.inference import hill_estimator, ks_critical_value, two_sample_distance
from tick_drift.stochastic_kernels import (
    FgnSpec,
    InnovationSpec,
    RandomStream,
    fgn_autocovariance,
    fractional_difference,
    fractional_weights,
    sample_fgn,
    sample_innovations,
    sample_stable_skewed,
)


# --- RandomStream ---

def test_same_stream_same_draws():
    a = RandomStream(7, 3).generator("fgn").standard_normal(5)
    b = RandomStream(7, 3).generator("fgn").standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_purposes_and_streams_are_distinct():
    base = RandomStream(7, 3)
    draws = [
        base.generator("fgn").standard_normal(5),
        base.generator("innovations").standard_normal(5),
        base.spawn(4).generator("fgn").standard_normal(5),
        base.retry(1).generator("fgn").standard_normal(5),
    ]
    for i in range(len(draws)):
        for j in range(i + 1, len(draws)):
            assert not np.array_equal(draws[i], draws[j])


def test_stream_rejects_out_of_range_seed():
    with pytest.raises(DomainError):
        RandomStream(-1)
    with pytest.raises(DomainError):
        RandomStream(2**64)


# --- Innovations ---

@pytest.mark.parametrize(
    "spec",
    [InnovationSpec.exponential(), InnovationSpec.pareto(1.5), InnovationSpec.pareto(3.0), InnovationSpec.lognormal(0.7)],
)
def test_innovation_population_mean_is_one(spec):
    assert spec.distribution().mean() == pytest.approx(1.0, rel=1e-12)


def test_innovation_second_moments():
    assert InnovationSpec.exponential().second_moment() == 2.0
    assert InnovationSpec.pareto(3.0).second_moment() == pytest.approx(4.0 / 3.0)
    assert math.isinf(InnovationSpec.pareto(1.5).second_moment())
    assert InnovationSpec.lognormal(0.5).second_moment() == pytest.approx(math.exp(0.25))
    assert not InnovationSpec.pareto(2.0).has_finite_variance


def test_innovation_validation():
    with pytest.raises(ValidationError):
        InnovationSpec(family="unit_pareto", tail_index=0.8)
    with pytest.raises(ValidationError):
        InnovationSpec(family="unit_exponential", tail_index=2.0)
    with pytest.raises(ValidationError):
        InnovationSpec(family="unit_lognormal")


def test_exponential_sample_mean(stream):
    x = sample_innovations(InnovationSpec.exponential(), 1_000_000, stream)
    assert np.all(x >= 0)
    assert abs(x.mean() - 1.0) < 0.005


def test_lognormal_sample_mean(stream):
    x = sample_innovations(InnovationSpec.lognormal(0.5), 200_000, stream)
    assert abs(x.mean() - 1.0) < 0.01


def test_pareto_tail_index_by_hill(stream):
    x = sample_innovations(InnovationSpec.pareto(1.5), 100_000, stream)
    assert x.min() >= InnovationSpec.pareto(1.5).pareto_scale
    assert hill_estimator(x, 1000).value == pytest.approx(1.5, abs=0.15)


def test_degenerate_lognormal_is_exactly_one(stream):
    x = sample_innovations(InnovationSpec.lognormal(0.0), 100, stream)
    np.testing.assert_array_equal(x, np.ones(100))


def test_sample_innovations_rejects_empty(stream):
    with pytest.raises(DomainError):
        sample_innovations(InnovationSpec.exponential(), 0, stream)


# --- Fractional Gaussian noise ---

def test_fgn_autocovariance_closed_form():
    assert fgn_autocovariance(0.9, 0) == 1.0
    assert fgn_autocovariance(0.9, 1) == pytest.approx(0.5 * (2**1.8 - 2), abs=1e-12)
    assert fgn_autocovariance(0.9, 1) == pytest.approx(0.74110, abs=1e-5)
    lag = 10_000
    asymptote = 0.75 * 0.5 * lag ** (-0.5)
    assert fgn_autocovariance(0.75, lag) / asymptote == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("hurst", [0.5, 1.0, 0.3])
def test_fgn_rejects_hurst_outside_range(hurst):
    with pytest.raises(DomainError):
        fgn_autocovariance(hurst, 1)
    with pytest.raises(DomainError):
        FgnSpec(hurst, 16)


def test_fgn_sample_is_reproducible(stream):
    spec = FgnSpec(0.8, 1000)
    np.testing.assert_array_equal(sample_fgn(spec, stream), sample_fgn(spec, stream))
    assert sample_fgn(spec, stream).shape == (1000,)


def test_fgn_pooled_autocovariance(stream):
    length, series, lags = 2048, 100, 6
    pooled = np.zeros(lags)
    for r in range(series):
        y = sample_fgn(FgnSpec(0.75, length), stream.spawn(r))
        pooled += [np.mean(y[: length - k] * y[k:]) for k in range(lags)]
    pooled /= series
    np.testing.assert_allclose(pooled, fgn_autocovariance(0.75, np.arange(lags)), atol=0.05)


def test_fgn_partial_sum_variance_scales_as_2h(stream):
    hurst, length, series = 0.8, 4096, 300
    m = 2 ** np.arange(4, 13)
    second = np.zeros(m.size)
    for r in range(series):
        partial = np.cumsum(sample_fgn(FgnSpec(hurst, length), stream.spawn(r)))
        second += partial[m - 1] ** 2
    slope = np.polyfit(np.log(m), np.log(second / series), 1)[0]
    assert slope == pytest.approx(2 * hurst, abs=0.08)


@pytest.mark.slow
@pytest.mark.parametrize("hurst", [0.6, 0.75, 0.9])
def test_fgn_exactness_long_series(hurst, stream):
    length, series, lags = 2**14, 2000, 51
    pooled = np.zeros(lags)
    for r in range(series):
        y = sample_fgn(FgnSpec(hurst, length), stream.spawn(r))
        pooled += [np.mean(y[: length - k] * y[k:]) for k in range(lags)]
    pooled /= series
    np.testing.assert_allclose(pooled, fgn_autocovariance(hurst, np.arange(lags)), atol=0.02)


# --- Stable variates ---

def test_stable_index_two_is_gaussian(stream):
    x = sample_stable_skewed(2.0, 1.0, 1_000_000, stream)
    assert np.var(x) == pytest.approx(2.0, abs=0.02)


def test_stable_is_skewed_right(stream):
    x = sample_stable_skewed(1.5, 1.0, 200_000, stream)
    assert np.isfinite(np.median(x))
    assert np.mean(x > 10) > 10 * np.mean(x < -10)


def test_stable_sums_are_stable(stream):
    index, block, size = 1.5, 8, 20_000
    sums = sample_stable_skewed(index, 1.0, block * size, stream.spawn(1)).reshape(size, block).sum(axis=1)
    fresh = sample_stable_skewed(index, 1.0, size, stream.spawn(2))
    distance = two_sample_distance(sums / block ** (1 / index), fresh)
    assert distance < ks_critical_value(size, size)


@pytest.mark.parametrize("index", [1.0, 0.5, 2.5])
def test_stable_rejects_index_outside_range(index, stream):
    with pytest.raises(DomainError):
        sample_stable_skewed(index, 1.0, 10, stream)


# --- Fractional differencing ---

def test_fractional_weights():
    np.testing.assert_allclose(fractional_weights(0.7, 2), [1.0, -0.7, -0.105])
    np.testing.assert_allclose(fractional_weights(1.0, 3), [1.0, -1.0, 0.0, 0.0])


def test_integer_differencing_is_exact():
    y = np.array([1.0, 4.0, 9.0, 16.0, 25.0])
    np.testing.assert_array_equal(fractional_difference(y, 1.0), np.diff(y))
    np.testing.assert_array_equal(fractional_difference(y, 2.0), np.diff(y, n=2))
    np.testing.assert_array_equal(fractional_difference(y, 0.0), y)


def test_fractional_difference_truncates_history():
    x = np.arange(1.0, 31.0)
    out = fractional_difference(x, 0.3, truncation=10)
    assert out.size == 20
    weights = fractional_weights(0.3, 10)
    assert out[0] == pytest.approx(np.dot(weights, x[10::-1]))


def test_fractional_difference_is_linear(stream):
    rng = stream.generator("test")
    x, y = rng.standard_normal(200), rng.standard_normal(200)
    left = fractional_difference(2.0 * x + 3.0 * y, 0.4, truncation=50)
    right = 2.0 * fractional_difference(x, 0.4, truncation=50) + 3.0 * fractional_difference(y, 0.4, truncation=50)
    np.testing.assert_allclose(left, right, atol=1e-10)


def test_long_window_matches_direct_sum(stream):
    x = stream.generator("test").standard_normal(6000)
    out = fractional_difference(x, 0.7, truncation=4096)
    weights = fractional_weights(0.7, 4096)
    for j in (0, 900, out.size - 1):
        assert out[j] == pytest.approx(np.dot(weights, x[j + 4096 :: -1][: 4097]), abs=1e-9)


def test_fractional_difference_errors():
    with pytest.raises(DomainError):
        fractional_difference([], 0.5)
    with pytest.raises(DomainError):
        fractional_difference(np.ones(10), 0.5, truncation=10)
    with pytest.raises(DomainError):
        fractional_difference(np.ones(10), -0.5)
