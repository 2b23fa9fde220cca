"""
Estimators and test statistics on returns and duration partial sums.

Scaling exponents are fitted to median absolute partial sums so the fit stays
meaningful when durations have infinite variance.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats

from tick_drift.duration_models import DurationSample
from tick_drift.errors import DegenerateSampleError, DomainError
from tick_drift.price_process import TickSeries, log_price
from tick_drift.stochastic_kernels import RandomStream

logger = logging.getLogger(__name__)

CRITICAL_VALUE = 1.96
DEFAULT_BOOTSTRAP = 200
MIN_GRID_POINTS = 4
MIN_REPLICATES = 100


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    replicates: int

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError(f"std_error must be >= 0, got {self.std_error}")
        if self.replicates < 1:
            raise DomainError(f"replicates must be >= 1, got {self.replicates}")


# --- Return statistics ---

def _as_vector(values, name: str, min_size: int = 1) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size < min_size:
        raise DomainError(f"{name} needs at least {min_size} value(s), got {x.size}")
    return x


def mean_return(returns) -> float:
    return float(np.mean(_as_vector(returns, "mean_return")))


def sample_variance_s2(returns) -> float:
    r = _as_vector(returns, "sample_variance_s2", min_size=2)
    if np.ptp(r) == 0:
        return 0.0
    return float(np.var(r, ddof=1))


def t_statistic(returns, mu0_star: float) -> float:
    """sqrt(n) (mean - mu0_star) / s_n."""
    r = _as_vector(returns, "t_statistic", min_size=2)
    s2 = sample_variance_s2(r)
    if s2 == 0:
        raise DegenerateSampleError("t-statistic undefined: returns have zero sample variance")
    return float(math.sqrt(r.size) * (np.mean(r) - mu0_star) / math.sqrt(s2))


def excess_returns(returns, risk_free_rate: float, spacing: float = 1.0) -> np.ndarray:
    return _as_vector(returns, "excess_returns") - risk_free_rate * spacing


def rejection_rate(t_values, critical: float = CRITICAL_VALUE) -> EstimateWithError:
    """Share of |t| > critical with its binomial standard error."""
    t = _as_vector(t_values, "rejection_rate")
    p = float(np.mean(np.abs(t) > critical))
    return EstimateWithError(p, math.sqrt(p * (1.0 - p) / t.size), t.size)


# --- Partial sums and scaling ---

def normalized_partial_sum(
    durations: DurationSample, gamma: float, centering: Literal["known", "plug_in"] = "known"
) -> float:
    tau = durations.durations
    n = tau.size
    if centering == "known":
        total = np.sum(tau - durations.theoretical_mean)
    elif centering == "plug_in":
        # the full plug-in sum is identically zero, so evaluate the bridge at n/2
        total = np.sum(tau[: n // 2] - tau.mean())
    else:
        raise DomainError(f"unknown centering {centering!r}")
    return float(total / n**gamma)


def normalized_log_price(ticks: TickSeries, horizon: float, gamma: float, rate: float) -> float:
    """horizon^-gamma (y(horizon) - rate mu horizon)."""
    return float((log_price(ticks, horizon) - rate * ticks.mu * horizon) / horizon**gamma)


def _centered_sums(sampler, grid: np.ndarray, stream: RandomStream) -> np.ndarray:
    sample = sampler(int(grid[-1]), stream)
    partial = np.cumsum(sample.durations - sample.theoretical_mean)
    return partial[grid - 1]


def partial_sum_table(
    sampler, n_grid, replicates: int, stream: RandomStream, threads: int = 1
) -> np.ndarray:
    """
    Centered duration partial sums S_n, one row per replicate and one column per n.

    Each replicate simulates a single path of length max(n_grid) on its own
    substream, so rows are independent and the table does not depend on the
    number of worker threads.
    """
    grid = np.asarray(n_grid, dtype=np.int64)
    if replicates < 1:
        raise DomainError(f"replicates must be >= 1, got {replicates}")

    def run(r: int) -> np.ndarray:
        return _centered_sums(sampler, grid, stream.spawn(r))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(run, range(replicates)))
    return np.vstack(rows)


def loglog_slope(x, y) -> EstimateWithError:
    """Least-squares slope of log(y) on log(x) with its OLS standard error."""
    x = _as_vector(x, "loglog_slope", min_size=2)
    y = _as_vector(y, "loglog_slope", min_size=2)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DegenerateSampleError("log-log fit needs strictly positive values")
    fit = stats.linregress(np.log(x), np.log(y))
    return EstimateWithError(float(fit.slope), float(fit.stderr), x.size)


def _median_abs(table: np.ndarray) -> np.ndarray:
    return np.median(np.abs(table), axis=0)


def fit_scaling_exponent(
    table: np.ndarray, n_grid, stream: RandomStream, bootstrap: int = DEFAULT_BOOTSTRAP
) -> EstimateWithError:
    """Slope of log median |S_n| on log n; std_error by resampling replicate rows."""
    grid = np.asarray(n_grid, dtype=float)
    medians = _median_abs(table)
    if np.any(medians == 0):
        raise DegenerateSampleError("median |partial sum| is zero at some n")
    slope = loglog_slope(grid, medians).value

    rng = stream.generator("bootstrap")
    replicates = table.shape[0]
    slopes = np.empty(bootstrap)
    log_n = np.log(grid)
    for b in range(bootstrap):
        resampled = _median_abs(table[rng.integers(0, replicates, replicates)])
        slopes[b] = np.polyfit(log_n, np.log(np.maximum(resampled, np.finfo(float).tiny)), 1)[0]
    std_error = float(np.std(slopes, ddof=1)) if bootstrap > 1 else 0.0
    return EstimateWithError(slope, std_error, replicates)


def check_grid(n_grid) -> np.ndarray:
    grid = np.asarray(n_grid, dtype=np.int64)
    if grid.ndim != 1 or grid.size < MIN_GRID_POINTS:
        raise DomainError(f"n_grid needs at least {MIN_GRID_POINTS} points")
    if grid[0] < 1 or np.any(np.diff(grid) <= 0):
        raise DomainError("n_grid must be positive and strictly increasing")
    if grid[-1] < 4 * grid[0]:
        raise DomainError("n_grid must span at least two octaves")
    return grid


def scaling_exponent(
    sampler,
    n_grid,
    replicates: int,
    stream: RandomStream,
    threads: int = 1,
    bootstrap: int = DEFAULT_BOOTSTRAP,
) -> EstimateWithError:
    grid = check_grid(n_grid)
    if replicates < MIN_REPLICATES:
        raise DomainError(f"scaling_exponent needs >= {MIN_REPLICATES} replicates, got {replicates}")
    table = partial_sum_table(sampler, grid, replicates, stream, threads=threads)
    return fit_scaling_exponent(table, grid, stream, bootstrap=bootstrap)


# --- Tails and distributions ---

def hill_estimator(sample, top_k: int) -> EstimateWithError:
    """Hill tail index from the top_k largest order statistics; std_error = value / sqrt(top_k)."""
    x = _as_vector(sample, "hill_estimator")
    if np.any(x <= 0):
        raise DomainError("Hill estimator needs strictly positive values")
    if top_k < 10 or top_k >= x.size:
        raise DomainError(f"top_k must lie in [10, {x.size}), got {top_k}")
    ordered = np.sort(x)[::-1]
    excess = np.mean(np.log(ordered[:top_k]) - math.log(ordered[top_k]))
    if excess == 0:
        raise DegenerateSampleError("top order statistics are tied")
    value = 1.0 / excess
    return EstimateWithError(float(value), float(value / math.sqrt(top_k)), top_k)


def two_sample_distance(a, b) -> float:
    """Kolmogorov-Smirnov sup distance between the two empirical CDFs."""
    a = _as_vector(a, "two_sample_distance")
    b = _as_vector(b, "two_sample_distance")
    return float(stats.ks_2samp(a, b).statistic)


def ks_critical_value(n: int, m: int, level: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value; c(0.01) = 1.628."""
    if n < 1 or m < 1 or not 0 < level < 1:
        raise DomainError("need n, m >= 1 and level in (0, 1)")
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    return c * math.sqrt((n + m) / (n * m))
