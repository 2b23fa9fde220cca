"""
Seeded sampling primitives: unit-mean innovations, exact fractional Gaussian
noise, totally right-skewed stable variates and truncated fractional
differencing. Every sampler is a pure function of its spec and a RandomStream.
"""

import logging
import zlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import signal, stats

from tick_drift.errors import DomainError

logger = logging.getLogger(__name__)

UINT64_MAX = 2**64 - 1
DEFAULT_TRUNCATION = 512
# Relative size of a negative circulant eigenvalue still treated as round-off.
CIRCULANT_TOL = 1e-10


@dataclass(frozen=True)
class RandomStream:
    """
    Counter-based substream identified by (master_seed, stream_id).

    Each replicate owns one stream; samplers inside a replicate ask for a
    labelled generator so fGn, innovations and shocks never share draws.
    """

    master_seed: int
    stream_id: int = 0
    # retry branch; 0 is the replicate's primary stream
    branch: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "branch"):
            value = getattr(self, name)
            if not 0 <= value <= UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self, purpose: str = "") -> np.random.Generator:
        key = (self.stream_id, zlib.crc32(purpose.encode("utf-8")))
        if self.branch:
            key += (self.branch,)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(seq))

    def spawn(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.master_seed, stream_id)

    def retry(self, attempt: int) -> "RandomStream":
        return RandomStream(self.master_seed, self.stream_id, attempt)


class InnovationSpec(BaseModel):
    """Positive i.i.d. innovation law, always normalized to mean exactly 1."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["unit_exponential", "unit_pareto", "unit_lognormal"] = "unit_exponential"
    tail_index: float | None = None
    log_sd: float | None = None

    @model_validator(mode="after")
    def _check_parameters(self):
        if self.family == "unit_pareto":
            if self.tail_index is None or self.tail_index <= 1:
                raise ValueError("unit_pareto requires tail_index > 1")
            if self.log_sd is not None:
                raise ValueError("log_sd only applies to unit_lognormal")
        elif self.family == "unit_lognormal":
            if self.log_sd is None or self.log_sd < 0:
                raise ValueError("unit_lognormal requires log_sd >= 0")
            if self.tail_index is not None:
                raise ValueError("tail_index only applies to unit_pareto")
        elif self.tail_index is not None or self.log_sd is not None:
            raise ValueError("unit_exponential takes no parameters")
        return self

    @classmethod
    def exponential(cls) -> "InnovationSpec":
        return cls(family="unit_exponential")

    @classmethod
    def pareto(cls, tail_index: float) -> "InnovationSpec":
        return cls(family="unit_pareto", tail_index=tail_index)

    @classmethod
    def lognormal(cls, log_sd: float) -> "InnovationSpec":
        return cls(family="unit_lognormal", log_sd=log_sd)

    @property
    def pareto_scale(self) -> float:
        # x_m such that the Pareto(alpha) mean alpha * x_m / (alpha - 1) equals 1
        return (self.tail_index - 1.0) / self.tail_index

    @property
    def is_degenerate(self) -> bool:
        return self.family == "unit_lognormal" and self.log_sd == 0

    @property
    def has_unbounded_support(self) -> bool:
        return not self.is_degenerate

    def second_moment(self) -> float:
        if self.family == "unit_exponential":
            return 2.0
        if self.family == "unit_pareto":
            a = self.tail_index
            if a <= 2:
                return float("inf")
            return a * self.pareto_scale**2 / (a - 2.0)
        return float(np.exp(self.log_sd**2))

    @property
    def has_finite_variance(self) -> bool:
        return np.isfinite(self.second_moment())

    def distribution(self):
        """Frozen scipy.stats law, or None for the degenerate point mass at 1."""
        if self.family == "unit_exponential":
            return stats.expon()
        if self.family == "unit_pareto":
            return stats.pareto(b=self.tail_index, scale=self.pareto_scale)
        if self.is_degenerate:
            return None
        return stats.lognorm(s=self.log_sd, scale=np.exp(-0.5 * self.log_sd**2))

    def expect(self, fn: Callable[[float], float], epsrel: float = 1e-10) -> float:
        dist = self.distribution()
        if dist is None:
            return float(fn(1.0))
        return float(dist.expect(fn, epsrel=epsrel, limit=200))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.family == "unit_exponential":
            return rng.standard_exponential(n)
        if self.family == "unit_pareto":
            # numpy's pareto is the Lomax law; shifting by 1 gives classical Pareto on [1, inf)
            return self.pareto_scale * (rng.pareto(self.tail_index, n) + 1.0)
        if self.is_degenerate:
            return np.ones(n)
        s = self.log_sd
        return np.exp(s * rng.standard_normal(n) - 0.5 * s * s)

    def label(self) -> str:
        if self.family == "unit_pareto":
            return f"unit_pareto(tail_index={self.tail_index:g})"
        if self.family == "unit_lognormal":
            return f"unit_lognormal(log_sd={self.log_sd:g})"
        return self.family


def sample_innovations(spec: InnovationSpec, n: int, stream: RandomStream) -> np.ndarray:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return spec.sample(n, stream.generator("innovations"))


def _check_hurst(hurst: float) -> None:
    if not 0.5 < hurst < 1.0:
        raise DomainError(f"Hurst parameter must lie in (1/2, 1), got {hurst}")


def fgn_autocovariance(hurst: float, lag):
    """Autocovariance of unit-variance fractional Gaussian noise at integer lag(s)."""
    _check_hurst(hurst)
    k = np.abs(np.asarray(lag, dtype=float))
    two_h = 2.0 * hurst
    gamma = 0.5 * ((k + 1.0) ** two_h - 2.0 * k**two_h + np.abs(k - 1.0) ** two_h)
    return float(gamma) if gamma.ndim == 0 else gamma


@dataclass(frozen=True)
class FgnSpec:
    hurst: float
    length: int

    def __post_init__(self):
        _check_hurst(self.hurst)
        if self.length < 2:
            raise DomainError(f"fGn length must be >= 2, got {self.length}")


@lru_cache(maxsize=32)
def _circulant_eigenvalues(hurst: float, length: int) -> np.ndarray:
    row = fgn_autocovariance(hurst, np.arange(length + 1))
    circulant = np.concatenate([row, row[-2:0:-1]])
    eigenvalues = np.fft.fft(circulant).real
    floor = -CIRCULANT_TOL * eigenvalues.max()
    if eigenvalues.min() < floor:
        raise DomainError(
            f"circulant embedding has negative eigenvalue {eigenvalues.min():.3e} "
            f"(H={hurst}, n={length})"
        )
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    eigenvalues.flags.writeable = False
    return eigenvalues


def sample_fgn(spec: FgnSpec, stream: RandomStream) -> np.ndarray:
    """One exact fGn path by circulant embedding (Davies-Harte)."""
    eigenvalues = _circulant_eigenvalues(spec.hurst, spec.length)
    m = eigenvalues.size
    rng = stream.generator("fgn")
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    path = np.fft.fft(np.sqrt(eigenvalues / m) * z)
    return path.real[: spec.length]


def sample_stable_skewed(index: float, scale: float, n: int, stream: RandomStream) -> np.ndarray:
    """
    Totally right-skewed (beta = +1) alpha-stable draws with zero shift.

    Chambers-Mallows-Stuck transform of V ~ U(-pi/2, pi/2) and W ~ Exp(1).
    index = 2 gives N(0, 2 * scale**2).
    """
    if not 1.0 < index <= 2.0:
        raise DomainError(f"stable index must lie in (1, 2], got {index}")
    if scale <= 0:
        raise DomainError(f"stable scale must be positive, got {scale}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = stream.generator("stable")
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, n)
    w = rng.standard_exponential(n)
    zeta = np.tan(0.5 * np.pi * index)
    shift = np.arctan(zeta) / index
    factor = (1.0 + zeta * zeta) ** (1.0 / (2.0 * index))
    x = (
        factor
        * np.sin(index * (v + shift))
        / np.cos(v) ** (1.0 / index)
        * (np.cos(v - index * (v + shift)) / w) ** ((1.0 - index) / index)
    )
    return scale * x


def fractional_weights(delta: float, lags: int) -> np.ndarray:
    """Coefficients pi_0..pi_lags of (I - B)^delta."""
    j = np.arange(1, lags + 1)
    return np.cumprod(np.concatenate([[1.0], (j - 1.0 - delta) / j]))


def fractional_difference(series, delta: float, truncation: int = DEFAULT_TRUNCATION) -> np.ndarray:
    """
    Apply (I - B)^delta truncated at `truncation` lags; the first `truncation`
    values only serve as history, so the output is shorter by that many points.
    Integer delta uses exact differencing and drops delta points instead.
    Long windows may convolve by FFT, so linearity holds to round-off.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise DomainError("cannot difference an empty series")
    if delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    exact = float(delta).is_integer()
    lags = int(delta) if exact else int(truncation)
    if lags >= x.size:
        raise DomainError(f"history of {lags} lags needs more than {x.size} observations")
    if lags == 0:
        return x.copy()
    weights = fractional_weights(delta, lags)
    if exact:
        return np.convolve(x, weights, mode="valid")
    return signal.convolve(x, weights, mode="valid")
