"""
Monte Carlo suites wiring duration models, price paths and estimators into
long-format reports, plus the run manifest that makes every CSV reproducible.
"""

import functools
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from tick_drift import settings
from tick_drift.duration_models import (
    DEFAULT_ACD_BURNIN,
    DurationModel,
    DurationSampler,
    LimitFamily,
    TheoreticalLimit,
    acd_second_moment_condition,
    acd_tail_index,
    classify_limit,
    describe_model,
    hermite_rank,
    simulate_lmsd,
)
from tick_drift.errors import ClassificationError, ConfigError, DomainError, HermiteRankError, TailIndexError
from tick_drift.inference import (
    DEFAULT_BOOTSTRAP,
    EstimateWithError,
    check_grid,
    fit_scaling_exponent,
    hill_estimator,
    ks_critical_value,
    loglog_slope,
    mean_return,
    partial_sum_table,
    rejection_rate,
    sample_variance_s2,
    t_statistic,
    two_sample_distance,
)
from tick_drift.price_process import (
    MicrostructureSpec,
    build_ticks,
    calendar_returns,
    counting_process,
    returns_frame,
    simulate_ticks,
    ticks_covering,
    ticks_frame,
)
from tick_drift.stochastic_kernels import RandomStream, sample_stable_skewed

logger = logging.getLogger(__name__)

DEFAULT_GRID = [2**10, 2**11, 2**12, 2**13, 2**14]
REPORT_COLUMNS = ["scenario_id", "master_seed", "n", "metric", "value", "std_error", "replicates"]
FLOAT_FORMAT = "%.12g"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario_id: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    model: DurationModel
    mu: float = 0.0
    sigma_e: float = Field(0.1, ge=0)
    micro: MicrostructureSpec = MicrostructureSpec()
    n_grid: list[int] = Field(default_factory=lambda: list(DEFAULT_GRID), min_length=1)
    replicates: int = Field(500, ge=1)
    master_seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0, le=2**64 - 1)
    outputs: Path = Field(default_factory=lambda: settings.OUTPUT_DIR)
    spacing: float = Field(1.0, gt=0)
    burnin: int = Field(DEFAULT_ACD_BURNIN, ge=0)
    mu0_star: float | None = None
    bootstrap: int = Field(DEFAULT_BOOTSTRAP, ge=2)
    hill_top_k: int | None = Field(None, ge=10)
    threads: int = Field(default_factory=lambda: settings.THREADS, ge=1)

    @field_validator("n_grid")
    @classmethod
    def _increasing(cls, grid: list[int]) -> list[int]:
        if grid[0] < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing counts >= 2")
        return grid

    @property
    def rate(self) -> float:
        return 1.0 / self.model.stationary_mean()

    @property
    def n_max(self) -> int:
        return self.n_grid[-1]

    def null_mean(self) -> float:
        """Hypothesized mean return: mu0_star if set, else lambda * mu * T."""
        if self.mu0_star is not None:
            return self.mu0_star
        return self.rate * self.mu * self.spacing


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON config; keyword overrides that are not None replace file values."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    raw.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config {path}:\n{exc}") from exc


# --- Reports ---

@dataclass
class ExperimentReport:
    config: ExperimentConfig
    kind: str
    rows: list[dict] = field(default_factory=list)
    summary: dict[str, str] = field(default_factory=dict)
    frames: dict[str, pd.DataFrame] = field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, metric: str, value: float, n: int | None = None, std_error: float = 0.0, replicates: int = 1):
        self.rows.append(
            {
                "scenario_id": self.config.scenario_id,
                "master_seed": self.config.master_seed,
                "n": n,
                "metric": metric,
                "value": float(value),
                "std_error": float(std_error),
                "replicates": int(replicates),
            }
        )

    def add_estimate(self, metric: str, estimate: EstimateWithError, n: int | None = None):
        self.add(metric, estimate.value, n=n, std_error=estimate.std_error, replicates=estimate.replicates)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=REPORT_COLUMNS)
        frame["n"] = frame["n"].astype("Int64")
        frame["master_seed"] = frame["master_seed"].astype("uint64")
        return frame

    def value(self, metric: str, n: int | None = None) -> float:
        for row in self.rows:
            if row["metric"] == metric and row["n"] == n:
                return row["value"]
        raise KeyError(f"no {metric!r} row for n={n}")

    def series(self, metric: str) -> pd.Series:
        frame = self.to_frame()
        rows = frame[frame["metric"] == metric]
        return pd.Series(rows["value"].to_numpy(), index=rows["n"].to_numpy(), name=metric)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _versions() -> dict[str, str]:
    versions = {}
    for package in ("tick-drift", "numpy", "scipy", "pandas", "numba", "pydantic"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def write_outputs(report: ExperimentReport, out_dir=None) -> Path:
    """Write report/ticks/returns CSVs and manifest.json under <out>/<kind>/."""
    root = Path(out_dir or report.config.outputs) / report.kind
    root.mkdir(parents=True, exist_ok=True)
    scenario = report.config.scenario_id

    written = []
    tables = {"report": report.to_frame(), **report.frames}
    for name, frame in tables.items():
        path = root / f"{name}_{scenario}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        written.append(path)

    manifest = {
        "subcommand": report.kind,
        "scenario_id": scenario,
        "master_seed": report.config.master_seed,
        "files": [{"name": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size} for p in written],
        "summary": report.summary,
        "config": report.config.model_dump(mode="json"),
        "versions": _versions(),
        "wall_time_seconds": round(report.wall_time, 3),
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False), encoding="utf-8")
    logger.info(" > Wrote %d file(s) and manifest to %s", len(written), root)
    return manifest_path


# --- Shared simulation ---

def _map_replicates(config: ExperimentConfig, fn: Callable[[RandomStream], object]) -> list:
    stream = RandomStream(config.master_seed)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(lambda r: fn(stream.spawn(r)), range(config.replicates)))


def _replicate_returns(config: ExperimentConfig, stream: RandomStream) -> np.ndarray:
    horizon = config.n_max * config.spacing
    ticks = ticks_covering(
        config.model, horizon, config.mu, config.sigma_e, config.micro, stream, burnin=config.burnin
    )
    return calendar_returns(ticks, config.spacing, config.n_max)


def _try_classify(config: ExperimentConfig) -> TheoreticalLimit | None:
    try:
        return classify_limit(config.model)
    except ClassificationError as exc:
        logger.warning(" > No theoretical limit for %s: %s", config.scenario_id, exc)
        return None


def _timed(kind: str):
    def wrap(runner):
        @functools.wraps(runner)
        def run(config: ExperimentConfig, *args, **kwargs) -> ExperimentReport:
            logger.info("--- Running %s experiment: %s ---", kind, config.scenario_id)
            logger.info(" > model: %s, micro: %s", describe_model(config.model), config.micro.label())
            started = time.perf_counter()
            report = runner(config, *args, **kwargs)
            report.wall_time = time.perf_counter() - started
            logger.info(" > %s finished in %.1fs", kind, report.wall_time)
            return report

        return run

    return wrap


# --- Experiments ---

def _gaussian_reference_distance(normalized, stream) -> tuple[float, float]:
    spread = np.std(normalized, ddof=1)
    if spread == 0:
        raise DomainError("normalized sums are constant; no distributional check possible")
    standardized = (normalized - normalized.mean()) / spread
    reference = stream.generator("reference").standard_normal(normalized.size)
    return two_sample_distance(standardized, reference), ks_critical_value(normalized.size, reference.size)


def _stable_reference_distance(limit, normalized, stream) -> tuple[float, float]:
    reference = sample_stable_skewed(limit.index, 1.0, normalized.size, stream)
    # location/scale fitted by matching median and interquartile range
    q_ref = np.percentile(reference, [25, 50, 75])
    q_obs = np.percentile(normalized, [25, 50, 75])
    scale = (q_obs[2] - q_obs[0]) / (q_ref[2] - q_ref[0])
    fitted = q_obs[1] + scale * (reference - q_ref[1])
    return two_sample_distance(normalized, fitted), ks_critical_value(normalized.size, fitted.size)


def _hill_top_k(config: ExperimentConfig, size: int) -> int:
    return config.hill_top_k or max(10, size // 10)


@_timed("rate")
def run_rate_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Scaling exponent of duration partial sums against the classified rate."""
    limit = classify_limit(config.model)
    grid = check_grid(config.n_grid)
    report = ExperimentReport(config, "rate", summary={"limit": limit.label()})
    stream = RandomStream(config.master_seed)

    logger.info("--- 1. Simulating partial sums (%d replicates, n up to %d) ---", config.replicates, grid[-1])
    sampler = DurationSampler(config.model, burnin=config.burnin)
    table = partial_sum_table(sampler, grid, config.replicates, stream, threads=config.threads)

    logger.info("--- 2. Fitting the scaling exponent ---")
    gamma_hat = fit_scaling_exponent(table, grid, stream, bootstrap=config.bootstrap)
    report.add("gamma_theory", limit.gamma)
    report.add_estimate("gamma_hat", gamma_hat)
    report.add("gamma_error", abs(gamma_hat.value - limit.gamma))
    for j, n in enumerate(grid):
        report.add("median_abs_normalized_sum", np.median(np.abs(table[:, j])) / n**limit.gamma, n=int(n),
                   replicates=config.replicates)
    logger.info(" > gamma_theory=%.4f gamma_hat=%.4f (se %.4f)", limit.gamma, gamma_hat.value, gamma_hat.std_error)

    logger.info("--- 3. Checking the limit shape ---")
    normalized = table[:, -1] / grid[-1] ** limit.gamma
    if limit.family in (LimitFamily.GAUSSIAN, LimitFamily.FBM_INCREMENT):
        distance, critical = _gaussian_reference_distance(normalized, stream)
        report.add("ks_vs_gaussian", distance, n=int(grid[-1]), replicates=config.replicates)
        report.add("ks_critical_1pct", critical, n=int(grid[-1]))
    elif limit.family is LimitFamily.STABLE:
        distance, critical = _stable_reference_distance(limit, normalized, stream)
        report.add("ks_vs_stable", distance, n=int(grid[-1]), replicates=config.replicates)
        report.add("ks_critical_1pct", critical, n=int(grid[-1]))
        positive = normalized[normalized > 0]
        top_k = _hill_top_k(config, normalized.size)
        if top_k < positive.size:
            report.add_estimate("hill_index", hill_estimator(positive, top_k), n=int(grid[-1]))
        else:
            logger.warning(" > Only %d positive sums; Hill index skipped", positive.size)
    return report


@_timed("ttest")
def run_ttest_experiment(config: ExperimentConfig, mu0_star: float | None = None) -> ExperimentReport:
    """Rejection rate and median |t_n| of the ordinary t-test across n_grid."""
    mu0 = config.null_mean() if mu0_star is None else mu0_star
    grid = np.asarray(config.n_grid)
    report = ExperimentReport(config, "ttest", summary={"mu0_star": f"{mu0:.12g}"})
    drift = config.rate * config.mu * config.spacing

    logger.info("--- 1. Simulating %d return paths ---", config.replicates)

    def replicate(stream: RandomStream) -> tuple[np.ndarray, np.ndarray]:
        returns = _replicate_returns(config, stream)
        t_values = np.array([t_statistic(returns[:n], mu0) for n in grid])
        deviation = np.cumsum(returns)[grid - 1] - drift * grid
        return t_values, deviation

    results = _map_replicates(config, replicate)
    t_table = np.vstack([t for t, _ in results])
    deviations = np.vstack([d for _, d in results])

    logger.info("--- 2. Summarizing t-statistics ---")
    report.add("mu0_star", mu0)
    median_abs_t = np.median(np.abs(t_table), axis=0)
    for j, n in enumerate(grid):
        report.add_estimate("rejection_rate", rejection_rate(t_table[:, j]), n=int(n))
        report.add("median_abs_t", median_abs_t[j], n=int(n), replicates=config.replicates)
    if grid.size >= 2:
        report.add_estimate("t_divergence_slope", loglog_slope(grid, median_abs_t))
        report.add_estimate("price_gamma_hat", loglog_slope(grid, np.median(np.abs(deviations), axis=0)))

    limit = _try_classify(config)
    if limit is not None:
        report.summary["limit"] = limit.label()
        report.add("gamma_theory", limit.gamma)
        report.add("t_divergence_slope_theory", limit.gamma - 0.5)
    logger.info(" > rejection rate at n=%d: %.4f", grid[-1], report.value("rejection_rate", int(grid[-1])))
    return report


def poisson_s2_target(config: ExperimentConfig) -> float:
    """mu^2 Var N(T) + lambda T (sigma_e^2 + noise variance), with Var N(T) = lambda T."""
    rate_t = config.model.rate * config.spacing
    noise_var = config.micro.sd**2 if config.micro.kind == "iid_noise" else 0.0
    return config.mu**2 * rate_t + rate_t * (config.sigma_e**2 + noise_var)


@_timed("s2")
def run_s2_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Mean and spread of s_n^2 across replicates for each n."""
    grid = np.asarray(config.n_grid)
    report = ExperimentReport(config, "s2")

    logger.info("--- 1. Simulating %d return paths ---", config.replicates)

    def replicate(stream: RandomStream) -> np.ndarray:
        returns = _replicate_returns(config, stream)
        return np.array([sample_variance_s2(returns[:n]) for n in grid])

    table = np.vstack(_map_replicates(config, replicate))

    logger.info("--- 2. Summarizing s_n^2 ---")
    reps = config.replicates
    for j, n in enumerate(grid):
        spread = float(np.std(table[:, j], ddof=1)) if reps > 1 else 0.0
        report.add("s2_mean", table[:, j].mean(), n=int(n), std_error=spread / math.sqrt(reps), replicates=reps)
        report.add("s2_sd", spread, n=int(n), replicates=reps)
    if config.model.kind == "poisson":
        target = poisson_s2_target(config)
        report.add("s2_target", target)
        logger.info(" > s2 at n=%d: %.6g (target %.6g)", grid[-1], table[:, -1].mean(), target)
    return report


@_timed("leverage")
def run_leverage_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Variance growth of leverage-noise partial sums built on the LMSD Gaussian path."""
    if config.model.kind != "lmsd" or not config.micro.is_leverage:
        raise DomainError("the leverage experiment needs an LMSD model with fractional_leverage noise")
    grid = np.asarray(config.n_grid)
    micro = config.micro
    memory = config.model.hurst - 0.5
    report = ExperimentReport(config, "leverage")

    logger.info("--- 1. Simulating noise partial sums (delta=%g, d=%g) ---", micro.delta, memory)

    def replicate(stream: RandomStream) -> np.ndarray:
        durations = simulate_lmsd(config.model, config.n_max, stream, presample=micro.history_length())
        ticks = build_ticks(durations, config.mu, config.sigma_e, micro, stream)
        return np.cumsum(ticks.noise)[grid - 1]

    table = np.vstack(_map_replicates(config, replicate))
    variances = np.var(table, axis=0, ddof=1)

    logger.info("--- 2. Fitting variance growth ---")
    for j, n in enumerate(grid):
        report.add("noise_sum_var", variances[j], n=int(n), replicates=config.replicates)
    report.add("max_noise_sum_var", variances.max(), replicates=config.replicates)
    report.add_estimate("noise_var_slope", loglog_slope(grid, variances))
    report.add("noise_var_slope_theory", max(0.0, 1.0 + 2.0 * (memory - micro.delta)))
    return report


@_timed("simulate")
def run_simulate(config: ExperimentConfig) -> ExperimentReport:
    """One path of n_max events from replicate stream 0, with tick and return exports."""
    stream = RandomStream(config.master_seed)
    ticks = simulate_ticks(
        config.model, config.n_max, config.mu, config.sigma_e, config.micro, stream, burnin=config.burnin
    )
    periods = min(config.n_max, int(ticks.span // config.spacing))
    report = ExperimentReport(config, "simulate")
    report.add("n_events", len(ticks))
    report.add("span", ticks.span)
    report.add("empirical_rate", counting_process(ticks, ticks.span) / ticks.span)
    report.add("theoretical_rate", config.rate)
    report.frames["ticks"] = ticks_frame(ticks)
    if periods >= 2:
        returns = calendar_returns(ticks, config.spacing, periods)
        report.add("mean_return", mean_return(returns), n=periods)
        report.add("s2", sample_variance_s2(returns), n=periods)
        report.frames["returns"] = returns_frame(returns)
    return report


@_timed("classify")
def run_classify(config: ExperimentConfig) -> ExperimentReport:
    """Predicted rate and limit family, with the analytic quantities behind them."""
    model = config.model
    limit = classify_limit(model)
    report = ExperimentReport(config, "classify", summary={"family": limit.family.value, "limit": limit.label()})
    report.add("gamma_theory", limit.gamma)
    if limit.limit_variance is not None:
        report.add("limit_variance", limit.limit_variance)
    if model.kind == "acd":
        report.add("second_moment_margin", acd_second_moment_condition(model).margin)
        try:
            report.add("tail_index", acd_tail_index(model))
        except TailIndexError:
            logger.info(" > no finite ACD tail index in range")
    elif model.kind == "lmsd":
        try:
            report.add("hermite_rank", hermite_rank(model.sigma_fn))
        except HermiteRankError:
            logger.info(" > constant sigma, durations are i.i.d.")
    return report


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "simulate": run_simulate,
    "classify": run_classify,
    "rate": run_rate_experiment,
    "ttest": run_ttest_experiment,
    "s2": run_s2_experiment,
    "leverage": run_leverage_experiment,
}


def run_experiment(kind: str, config: ExperimentConfig) -> ExperimentReport:
    try:
        runner = RUNNERS[kind]
    except KeyError:
        raise ConfigError(f"unknown experiment {kind!r}; choose from {sorted(RUNNERS)}") from None
    return runner(config)
