import numpy as np
import pytest
from pydantic import ValidationError

from tick_drift.duration_models import (
    AcdParams,
    DurationSample,
    LmsdParams,
    PoissonParams,
    SigmaFunction,
    simulate_lmsd,
    simulate_poisson_durations,
)
from tick_drift.errors import DomainError, HorizonError
from tick_drift.price_process import (
    MicrostructureSpec,
    build_ticks,
    calendar_returns,
    counting_process,
    log_price,
    returns_frame,
    simulate_ticks,
    ticks_covering,
    ticks_frame,
)


@pytest.fixture
def toy_ticks(stream):
    durations = DurationSample(np.array([0.5, 0.5, 1.0]), "poisson", 1.0)
    return build_ticks(durations, mu=1.0, sigma_e=0.0, micro=MicrostructureSpec.none(), stream=stream)


def test_build_ticks_deterministic(toy_ticks):
    np.testing.assert_array_equal(toy_ticks.event_times, [0.5, 1.0, 2.0])
    np.testing.assert_array_equal(toy_ticks.jumps, [1.0, 1.0, 1.0])


def test_counting_process(toy_ticks):
    assert counting_process(toy_ticks, 0.0) == 0
    assert counting_process(toy_ticks, 0.4) == 0
    assert counting_process(toy_ticks, 1.0) == 2
    np.testing.assert_array_equal(counting_process(toy_ticks, [0.5, 1.5, 5.0]), [1, 2, 3])
    with pytest.raises(DomainError):
        counting_process(toy_ticks, -1.0)


def test_log_price(toy_ticks):
    assert log_price(toy_ticks, 2.0) == 3.0
    assert log_price(toy_ticks, 0.49) == 0.0
    assert log_price(toy_ticks, 0.0) == 0.0


def test_calendar_returns(toy_ticks):
    np.testing.assert_array_equal(calendar_returns(toy_ticks, 1.0, 2), [2.0, 1.0])
    with pytest.raises(HorizonError):
        calendar_returns(toy_ticks, 1.0, 3)


def test_returns_telescope(stream):
    ticks = simulate_ticks(PoissonParams(rate=1.0), 5000, 0.05, 0.1, MicrostructureSpec.iid_noise(0.05), stream)
    returns = calendar_returns(ticks, 0.7, 4000)
    assert returns.sum() == pytest.approx(log_price(ticks, 0.7 * 4000), abs=1e-9)


def test_log_price_is_constant_between_events(stream):
    ticks = simulate_ticks(LmsdParams(hurst=0.8), 2000, 0.05, 0.1, MicrostructureSpec.none(), stream)
    rng = stream.generator("queries")
    k = rng.integers(0, len(ticks) - 1, 200)
    left, right = ticks.event_times[k], ticks.event_times[k + 1]
    inside = left + rng.uniform(0.0, 1.0, 200) * (right - left)
    inside = np.minimum(inside, np.nextafter(right, left))
    np.testing.assert_array_equal(log_price(ticks, inside), log_price(ticks, left))


def test_shock_mean(stream):
    durations = simulate_poisson_durations(1.0, 1_000_000, stream)
    ticks = build_ticks(durations, 0.0, 1.0, MicrostructureSpec.none(), stream)
    assert abs(ticks.jumps.mean()) < 0.004


def test_poisson_counting_rate(stream):
    ticks = simulate_ticks(PoissonParams(rate=1.0), 12_000, 0.0, 0.1, MicrostructureSpec.none(), stream)
    assert counting_process(ticks, 1e4) / 1e4 == pytest.approx(1.0, abs=0.03)


def test_drift_per_unit_time(stream):
    ticks = ticks_covering(PoissonParams(rate=1.0), 1e5, 0.01, 0.1, MicrostructureSpec.none(), stream)
    assert log_price(ticks, 1e5) / 1e5 == pytest.approx(0.01, abs=0.002)


def test_return_mean_equals_rate_times_drift(stream):
    ticks = ticks_covering(PoissonParams(rate=1.0), 1e5, 0.05, 0.1, MicrostructureSpec.none(), stream)
    assert calendar_returns(ticks, 1.0, 100_000).mean() == pytest.approx(0.05, abs=0.004)


def test_unit_leverage_is_first_difference(stream):
    micro = MicrostructureSpec.fractional_leverage(1.0)
    durations = simulate_lmsd(LmsdParams(hurst=0.8), 500, stream, presample=micro.history_length())
    ticks = build_ticks(durations, 0.0, 0.1, micro, stream)
    np.testing.assert_allclose(ticks.noise, np.diff(durations.gaussian_path), atol=0)


def test_leverage_needs_lmsd_path(stream):
    micro = MicrostructureSpec.fractional_leverage(1.0)
    with pytest.raises(DomainError):
        build_ticks(simulate_poisson_durations(1.0, 100, stream), 0.0, 0.1, micro, stream)


def test_leverage_path_length_must_match(stream):
    micro = MicrostructureSpec.fractional_leverage(1.0)
    durations = simulate_lmsd(LmsdParams(hurst=0.8), 100, stream)
    with pytest.raises(DomainError, match="Gaussian path"):
        build_ticks(durations, 0.0, 0.1, micro, stream)


def test_leverage_delta_must_exceed_memory(stream):
    micro = MicrostructureSpec.fractional_leverage(0.2, truncation=64)
    durations = simulate_lmsd(LmsdParams(hurst=0.8), 100, stream, presample=64)
    with pytest.raises(DomainError, match="memory parameter"):
        build_ticks(durations, 0.0, 0.1, micro, stream)


def test_unit_leverage_partial_sums_stay_bounded(stream):
    micro = MicrostructureSpec.fractional_leverage(1.0)
    sums = []
    for r in range(200):
        ticks = simulate_ticks(LmsdParams(hurst=0.9), 1024, 0.0, 0.1, micro, stream.spawn(r))
        sums.append(np.cumsum(ticks.noise)[[63, 255, 1023]])
    assert np.var(np.array(sums), axis=0, ddof=1).max() <= 4.0


def test_sub_ulp_durations_tie_event_times(stream):
    durations = DurationSample(np.array([1.0, 1e-20, 1.0]), "poisson", 1.0)
    ticks = build_ticks(durations, 1.0, 0.0, MicrostructureSpec.none(), stream)
    np.testing.assert_array_equal(ticks.event_times, [1.0, 1.0, 2.0])
    assert counting_process(ticks, 1.0) == 2
    assert log_price(ticks, 1.5) == 2.0
    np.testing.assert_array_equal(calendar_returns(ticks, 1.0, 2), [2.0, 1.0])


def test_square_sigma_paths_simulate_over_many_seeds(stream):
    model = LmsdParams(hurst=0.6, sigma_fn=SigmaFunction(kind="square"))
    for r in range(200):
        ticks = simulate_ticks(model, 2**15, 0.05, 0.1, MicrostructureSpec.none(), stream.spawn(r))
        assert len(ticks) == 2**15
        assert np.all(np.diff(ticks.event_times) >= 0)
        assert counting_process(ticks, ticks.span) == 2**15


def test_microstructure_validation():
    with pytest.raises(ValidationError):
        MicrostructureSpec(kind="iid_noise")
    with pytest.raises(ValidationError):
        MicrostructureSpec(kind="none", delta=0.5)
    assert MicrostructureSpec.fractional_leverage(0.7, truncation=100).history_length() == 100
    assert MicrostructureSpec.fractional_leverage(2.0).history_length() == 2


def test_ticks_covering_reaches_horizon(stream):
    ticks = ticks_covering(LmsdParams(hurst=0.9), 5000.0, 0.05, 0.1, MicrostructureSpec.none(), stream)
    assert ticks.span >= 5000.0
    again = ticks_covering(LmsdParams(hurst=0.9), 5000.0, 0.05, 0.1, MicrostructureSpec.none(), stream)
    np.testing.assert_array_equal(ticks.event_times, again.event_times)


def test_frames(toy_ticks):
    frame = ticks_frame(toy_ticks)
    assert list(frame.columns) == ["k", "t_k", "jump_k"]
    assert frame["k"].tolist() == [1, 2, 3]
    returns = returns_frame(calendar_returns(toy_ticks, 1.0, 2))
    assert list(returns.columns) == ["j", "r_j"]
    assert returns["r_j"].tolist() == [2.0, 1.0]


@pytest.mark.slow
@pytest.mark.parametrize(
    "model",
    [
        AcdParams(omega=0.2, alpha=0.1, beta=0.8),
        LmsdParams(hurst=0.7),
        LmsdParams(hurst=0.6, sigma_fn=SigmaFunction(kind="square")),
    ],
    ids=["acd", "lmsd_exp", "lmsd_square"],
)
def test_drift_identity_across_models(model, stream):
    horizon, mu = 2e4, 0.05
    slopes = []
    for r in range(200):
        ticks = ticks_covering(model, horizon, mu, 0.1, MicrostructureSpec.none(), stream.spawn(r))
        slopes.append(log_price(ticks, horizon) / horizon)
    target = mu / model.stationary_mean()
    pooled_se = np.std(slopes, ddof=1) / np.sqrt(len(slopes))
    assert abs(np.mean(slopes) - target) <= 4.0 * pooled_se
