"""
Pure-jump log-price paths built from durations: event times, Gaussian
efficient shocks, optional microstructure or leverage noise, and the derived
counting process and calendar-time returns.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tick_drift.duration_models import DEFAULT_ACD_BURNIN, DurationSample, simulate_durations
from tick_drift.errors import DomainError, HorizonError
from tick_drift.stochastic_kernels import DEFAULT_TRUNCATION, RandomStream, fractional_difference

logger = logging.getLogger(__name__)

MAX_COVER_ATTEMPTS = 8


class MicrostructureSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["none", "iid_noise", "fractional_leverage"] = "none"
    sd: float | None = None
    delta: float | None = None
    truncation: int = Field(DEFAULT_TRUNCATION, ge=1)

    @model_validator(mode="after")
    def _check_fields(self):
        if self.kind == "iid_noise":
            if self.sd is None or self.sd <= 0:
                raise ValueError("iid_noise requires sd > 0")
        elif self.sd is not None:
            raise ValueError("sd only applies to iid_noise")
        if self.kind == "fractional_leverage":
            if self.delta is None or self.delta <= 0:
                raise ValueError("fractional_leverage requires delta > 0")
        elif self.delta is not None:
            raise ValueError("delta only applies to fractional_leverage")
        return self

    @classmethod
    def none(cls) -> "MicrostructureSpec":
        return cls()

    @classmethod
    def iid_noise(cls, sd: float) -> "MicrostructureSpec":
        return cls(kind="iid_noise", sd=sd)

    @classmethod
    def fractional_leverage(cls, delta: float, truncation: int = DEFAULT_TRUNCATION) -> "MicrostructureSpec":
        return cls(kind="fractional_leverage", delta=delta, truncation=truncation)

    @property
    def is_leverage(self) -> bool:
        return self.kind == "fractional_leverage"

    def history_length(self) -> int:
        """Gaussian values consumed as filter history before the first event."""
        if not self.is_leverage:
            return 0
        if float(self.delta).is_integer():
            return int(self.delta)
        return self.truncation

    def label(self) -> str:
        if self.kind == "iid_noise":
            return f"iid_noise(sd={self.sd:g})"
        if self.is_leverage:
            return f"fractional_leverage(delta={self.delta:g})"
        return "none"


@dataclass(frozen=True, eq=False)
class TickSeries:
    event_times: np.ndarray
    mu: float
    shocks: np.ndarray
    noise: np.ndarray
    sigma_e: float

    def __post_init__(self):
        n = self.event_times.size
        if n < 1:
            raise DomainError("a tick series needs at least one event")
        if self.shocks.size != n or self.noise.size != n:
            raise DomainError(
                f"length mismatch: {n} events, {self.shocks.size} shocks, {self.noise.size} noise values"
            )
        # durations below ulp(t_k) leave t_k == t_{k-1} in float64; such ties count as simultaneous events
        if self.event_times[0] <= 0 or np.any(np.diff(self.event_times) < 0):
            raise DomainError("event times must be positive and non-decreasing")

    def __len__(self) -> int:
        return self.event_times.size

    @cached_property
    def jumps(self) -> np.ndarray:
        return self.mu + self.shocks + self.noise

    @cached_property
    def levels(self) -> np.ndarray:
        """levels[j] = y just after the j-th event, levels[0] = 0."""
        return np.concatenate([[0.0], np.cumsum(self.jumps)])

    @property
    def span(self) -> float:
        return float(self.event_times[-1])


def _noise(durations: DurationSample, micro: MicrostructureSpec, stream: RandomStream, gaussian_path):
    n = len(durations)
    if micro.kind == "none":
        return np.zeros(n)
    if micro.kind == "iid_noise":
        return micro.sd * stream.generator("noise").standard_normal(n)

    if durations.memory_parameter is None:
        raise DomainError("fractional_leverage needs LMSD durations")
    if micro.delta <= durations.memory_parameter:
        raise DomainError(
            f"delta={micro.delta:g} must exceed the duration memory parameter "
            f"{durations.memory_parameter:g}"
        )
    path = gaussian_path if gaussian_path is not None else durations.gaussian_path
    if path is None:
        raise DomainError("fractional_leverage needs the Gaussian path behind the durations")
    expected = n + micro.history_length()
    if path.size != expected:
        raise DomainError(
            f"Gaussian path has {path.size} values, leverage needs {expected} "
            f"({n} events + {micro.history_length()} history)"
        )
    return fractional_difference(path, micro.delta, truncation=micro.truncation)


def build_ticks(
    durations: DurationSample,
    mu: float,
    sigma_e: float,
    micro: MicrostructureSpec,
    stream: RandomStream,
    gaussian_path: np.ndarray | None = None,
) -> TickSeries:
    if sigma_e < 0:
        raise DomainError(f"sigma_e must be >= 0, got {sigma_e}")
    noise = _noise(durations, micro, stream, gaussian_path)
    event_times = np.cumsum(durations.durations)
    shocks = stream.generator("shocks").normal(0.0, sigma_e, len(durations))
    return TickSeries(event_times, float(mu), shocks, noise, float(sigma_e))


def simulate_ticks(
    model,
    n_events: int,
    mu: float,
    sigma_e: float,
    micro: MicrostructureSpec,
    stream: RandomStream,
    burnin: int = DEFAULT_ACD_BURNIN,
) -> TickSeries:
    durations = simulate_durations(model, n_events, stream, burnin=burnin, presample=micro.history_length())
    return build_ticks(durations, mu, sigma_e, micro, stream)


def ticks_covering(
    model,
    horizon: float,
    mu: float,
    sigma_e: float,
    micro: MicrostructureSpec,
    stream: RandomStream,
    burnin: int = DEFAULT_ACD_BURNIN,
) -> TickSeries:
    """Simulate until the last event passes `horizon`, doubling the event budget on each retry."""
    if horizon <= 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    budget = max(64, math.ceil(2.0 * horizon / model.stationary_mean()))
    for attempt in range(MAX_COVER_ATTEMPTS):
        ticks = simulate_ticks(model, budget, mu, sigma_e, micro, stream.retry(attempt), burnin)
        if ticks.span >= horizon:
            return ticks
        logger.debug(" > %d events end at %.4g < horizon %.4g, retrying", budget, ticks.span, horizon)
        budget *= 2
    raise HorizonError(f"{budget // 2} events still end before horizon {horizon:g}")


def counting_process(ticks: TickSeries, t):
    """N(t): number of events in (0, t]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("counting process is defined for t >= 0")
    counts = np.searchsorted(ticks.event_times, t_arr, side="right")
    return int(counts) if counts.ndim == 0 else counts


def log_price(ticks: TickSeries, t):
    """y(t) = mu N(t) + sum_{k <= N(t)} (e_k + eta_k), right-continuous."""
    values = ticks.levels[counting_process(ticks, t)]
    return float(values) if np.ndim(values) == 0 else values


def calendar_returns(ticks: TickSeries, spacing: float, count: int) -> np.ndarray:
    if spacing <= 0 or count < 1:
        raise DomainError(f"need spacing > 0 and count >= 1, got {spacing}, {count}")
    if count * spacing > ticks.span:
        raise HorizonError(
            f"horizon {count * spacing:g} exceeds simulated span {ticks.span:g}"
        )
    grid = spacing * np.arange(count + 1)
    return np.diff(log_price(ticks, grid))


def ticks_frame(ticks: TickSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "k": np.arange(1, len(ticks) + 1),
            "t_k": ticks.event_times,
            "jump_k": ticks.jumps,
        }
    )


def returns_frame(returns) -> pd.DataFrame:
    returns = np.asarray(returns, dtype=float)
    return pd.DataFrame({"j": np.arange(1, returns.size + 1), "r_j": returns})
