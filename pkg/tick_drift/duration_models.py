"""
Stationary duration processes (Poisson, ACD(1,1), LMSD) and their analytic
companions: ACD tail index and moment condition, Hermite rank of the LMSD
volatility function, and the map from parameters to the predicted limit.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Annotated, Literal, NamedTuple, Union

import numpy as np
from numba import njit
from numpy.polynomial import hermite_e, polynomial
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize, special

from tick_drift.errors import (
    ClassificationError,
    DomainError,
    HermiteRankError,
    StationarityError,
    TailIndexError,
)
from tick_drift.stochastic_kernels import (
    FgnSpec,
    InnovationSpec,
    RandomStream,
    sample_fgn,
    sample_innovations,
)

logger = logging.getLogger(__name__)

DEFAULT_ACD_BURNIN = 10_000
KAPPA_LOWER = 1.0 + 1e-6
KAPPA_UPPER = 50.0
HERMITE_NODES = 128
HERMITE_J_MAX = 8
HERMITE_TOL = 1e-8
BOUNDARY_TOL = 1e-12


# --- Model parameters ---

class SigmaFunction(BaseModel):
    """Positive volatility function sigma(y) of a standard Gaussian input."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["exponential", "square", "shifted_polynomial"] = "exponential"
    # ascending powers: coeffs[0] + coeffs[1] * y + ...
    coeffs: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _check_positive(self):
        if self.kind != "shifted_polynomial":
            if self.coeffs is not None:
                raise ValueError(f"{self.kind} takes no coefficients")
            return self
        if not self.coeffs:
            raise ValueError("shifted_polynomial requires coefficients")
        poly = polynomial.Polynomial(self.coeffs).trim()
        degree = poly.degree()
        if degree == 0:
            if poly.coef[0] <= 0:
                raise ValueError("constant sigma must be positive")
            return self
        if degree % 2 or poly.coef[-1] <= 0:
            raise ValueError("shifted_polynomial must have even degree and positive leading term")
        critical = poly.deriv().roots()
        critical = critical[np.abs(critical.imag) < 1e-9].real
        if np.any(poly(critical) <= 0):
            raise ValueError("shifted_polynomial must be strictly positive on the real line")
        return self

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "exponential":
            return np.exp(y)
        if self.kind == "square":
            return y * y
        return polynomial.polyval(y, self.coeffs)

    def mean(self) -> float:
        """E[sigma(Y)] for Y ~ N(0, 1)."""
        if self.kind == "exponential":
            return math.exp(0.5)
        if self.kind == "square":
            return 1.0
        nodes, weights = gauss_hermite(HERMITE_NODES)
        return float(np.sum(weights * self(nodes)))

    def is_even(self) -> bool:
        if self.kind == "square":
            return True
        if self.kind == "exponential":
            return False
        return not any(self.coeffs[1::2])

    def label(self) -> str:
        if self.kind == "shifted_polynomial":
            return "poly(" + ",".join(f"{c:g}" for c in self.coeffs) + ")"
        return self.kind


class PoissonParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["poisson"] = "poisson"
    rate: float = Field(1.0, gt=0)

    def stationary_mean(self) -> float:
        return 1.0 / self.rate


class AcdParams(BaseModel):
    """ACD(1,1): tau_k = psi_k * eps_k, psi_k = omega + alpha * tau_{k-1} + beta * psi_{k-1}."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["acd"] = "acd"
    omega: float = Field(gt=0)
    alpha: float = Field(ge=0)
    beta: float = Field(ge=0)
    innovation: InnovationSpec = InnovationSpec()

    @property
    def is_stationary(self) -> bool:
        return self.alpha + self.beta < 1.0

    def stationary_mean(self) -> float:
        if not self.is_stationary:
            raise StationarityError(
                f"alpha + beta = {self.alpha + self.beta:g} >= 1: no stationary ACD solution"
            )
        return self.omega / (1.0 - self.alpha - self.beta)


class LmsdParams(BaseModel):
    """LMSD: tau_k = eps_k * sigma(Y_k) with Y exact fractional Gaussian noise."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["lmsd"] = "lmsd"
    hurst: float = Field(gt=0.5, lt=1.0)
    sigma_fn: SigmaFunction = SigmaFunction()
    innovation: InnovationSpec = InnovationSpec()

    def stationary_mean(self) -> float:
        # E[eps] = 1 for every innovation family
        return self.sigma_fn.mean()


DurationModel = Annotated[Union[PoissonParams, AcdParams, LmsdParams], Field(discriminator="kind")]


def describe_model(model) -> str:
    if model.kind == "poisson":
        return f"poisson(rate={model.rate:g})"
    if model.kind == "acd":
        return (
            f"acd(omega={model.omega:g}, alpha={model.alpha:g}, beta={model.beta:g}, "
            f"{model.innovation.label()})"
        )
    return f"lmsd(H={model.hurst:g}, sigma={model.sigma_fn.label()}, {model.innovation.label()})"


# --- Samples and limits ---

@dataclass(frozen=True, eq=False)
class DurationSample:
    durations: np.ndarray
    model_tag: str
    theoretical_mean: float
    # Gaussian path behind LMSD durations, including any presample history
    gaussian_path: np.ndarray | None = None
    hurst: float | None = None

    def __post_init__(self):
        if self.durations.ndim != 1 or self.durations.size < 1:
            raise DomainError("a duration sample needs at least one duration")
        if not np.all(self.durations > 0):
            raise DomainError(f"{self.model_tag} produced a nonpositive duration")
        if not self.theoretical_mean > 0:
            raise DomainError(f"theoretical mean must be positive, got {self.theoretical_mean}")

    def __len__(self) -> int:
        return self.durations.size

    @property
    def rate(self) -> float:
        return 1.0 / self.theoretical_mean

    @property
    def memory_parameter(self) -> float | None:
        return None if self.hurst is None else self.hurst - 0.5


class LimitFamily(str, Enum):
    GAUSSIAN = "gaussian"
    FBM_INCREMENT = "fbm_increment"
    HERMITE = "hermite"
    STABLE = "stable"


@dataclass(frozen=True)
class TheoreticalLimit:
    gamma: float
    family: LimitFamily
    order: int | None = None
    hurst: float | None = None
    index: float | None = None
    scale_known: bool = False
    limit_variance: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.5 <= self.gamma < 1.0:
            raise DomainError(f"gamma must lie in [1/2, 1), got {self.gamma}")
        if self.family is LimitFamily.GAUSSIAN and self.gamma != 0.5:
            raise DomainError("a Gaussian limit has gamma = 1/2")
        if self.family is LimitFamily.STABLE and not math.isclose(self.gamma, 1.0 / self.index):
            raise DomainError("a stable(index) limit has gamma = 1/index")
        if self.family in (LimitFamily.FBM_INCREMENT, LimitFamily.HERMITE):
            if (self.order == 1) != (self.family is LimitFamily.FBM_INCREMENT):
                raise DomainError("fbm_increment is exactly the order-1 Hermite family")
            if not math.isclose(self.gamma, 1.0 - self.order * (1.0 - self.hurst)):
                raise DomainError("Hermite-type limits have gamma = 1 - q(1 - H)")

    def label(self) -> str:
        if self.family is LimitFamily.FBM_INCREMENT:
            return f"fbm_increment(H={self.hurst:g})"
        if self.family is LimitFamily.HERMITE:
            return f"hermite(q={self.order}, H={self.hurst:g})"
        if self.family is LimitFamily.STABLE:
            return f"stable({self.index:.6g})"
        return self.family.value


# --- Simulation ---

@njit(cache=True, nogil=True)
def _acd_recursion(eps, omega, alpha, beta, start):
    tau = np.empty(eps.shape[0])
    psi = start
    previous = start
    for k in range(eps.shape[0]):
        psi = omega + alpha * previous + beta * psi
        previous = psi * eps[k]
        tau[k] = previous
    return tau


def simulate_acd(
    params: AcdParams, n: int, stream: RandomStream, burnin: int = DEFAULT_ACD_BURNIN
) -> DurationSample:
    mean = params.stationary_mean()
    if n < 1 or burnin < 0:
        raise DomainError(f"need n >= 1 and burnin >= 0, got n={n}, burnin={burnin}")
    eps = sample_innovations(params.innovation, n + burnin, stream)
    tau = _acd_recursion(eps, params.omega, params.alpha, params.beta, mean)
    return DurationSample(tau[burnin:], "acd", mean)


def simulate_lmsd(params: LmsdParams, n: int, stream: RandomStream, presample: int = 0) -> DurationSample:
    if n < 2 or presample < 0:
        raise DomainError(f"need n >= 2 and presample >= 0, got n={n}, presample={presample}")
    path = sample_fgn(FgnSpec(params.hurst, n + presample), stream)
    eps = sample_innovations(params.innovation, n, stream)
    tau = eps * params.sigma_fn(path[presample:])
    return DurationSample(tau, "lmsd", params.stationary_mean(), gaussian_path=path, hurst=params.hurst)


def simulate_poisson_durations(rate: float, n: int, stream: RandomStream) -> DurationSample:
    if not rate > 0:
        raise DomainError(f"Poisson rate must be positive, got {rate}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    tau = stream.generator("poisson").standard_exponential(n) / rate
    return DurationSample(tau, "poisson", 1.0 / rate)


def simulate_durations(
    model, n: int, stream: RandomStream, burnin: int = DEFAULT_ACD_BURNIN, presample: int = 0
) -> DurationSample:
    if model.kind == "poisson":
        return simulate_poisson_durations(model.rate, n, stream)
    if model.kind == "acd":
        return simulate_acd(model, n, stream, burnin=burnin)
    return simulate_lmsd(model, n, stream, presample=presample)


@dataclass(frozen=True)
class DurationSampler:
    """Scenario handle: (n, stream) -> DurationSample for a fixed model."""

    model: DurationModel
    burnin: int = DEFAULT_ACD_BURNIN
    presample: int = 0

    def __call__(self, n: int, stream: RandomStream) -> DurationSample:
        return simulate_durations(self.model, n, stream, burnin=self.burnin, presample=self.presample)

    @property
    def theoretical_mean(self) -> float:
        return self.model.stationary_mean()


# --- ACD analytics ---

def _acd_factor_moment(alpha: float, beta: float, innovation: InnovationSpec, kappa: float) -> float:
    """E[(alpha * eps + beta)^kappa]."""
    if alpha == 0 or innovation.is_degenerate:
        return (alpha + beta) ** kappa
    if innovation.family == "unit_exponential":
        shift = beta / alpha
        tail = special.gammaincc(kappa + 1.0, shift)
        if tail > 0:
            return math.exp(kappa * math.log(alpha) + shift + special.gammaln(kappa + 1.0) + math.log(tail))
    elif innovation.family == "unit_pareto":
        a = innovation.tail_index
        if kappa >= a:
            return math.inf
        base = alpha * innovation.pareto_scale
        hyper = special.hyp2f1(-kappa, a - kappa, a - kappa + 1.0, -beta / base)
        return a * base**kappa / (a - kappa) * hyper
    return innovation.expect(lambda x: (alpha * x + beta) ** kappa)


def acd_tail_index(params: AcdParams, tol: float = 1e-8, kappa_max: float = KAPPA_UPPER) -> float:
    """Unique kappa > 1 with E[(alpha * eps + beta)^kappa] = 1, by bisection."""
    alpha, beta, innovation = params.alpha, params.beta, params.innovation

    def residual(kappa: float) -> float:
        return _acd_factor_moment(alpha, beta, innovation, kappa) - 1.0

    upper = kappa_max
    if innovation.family == "unit_pareto":
        upper = min(upper, innovation.tail_index * (1.0 - 1e-9))
    if residual(upper) < 0:
        raise TailIndexError(
            f"no finite tail index in search range [{KAPPA_LOWER:g}, {upper:g}] "
            f"(alpha={alpha:g}, beta={beta:g})"
        )
    if residual(KAPPA_LOWER) >= 0:
        raise TailIndexError(f"tail index below search range: alpha + beta = {alpha + beta:g}")
    kappa = optimize.bisect(residual, KAPPA_LOWER, upper, xtol=1e-14, maxiter=500)
    if abs(residual(kappa)) > tol:
        raise TailIndexError(f"bisection stopped at kappa={kappa:.10g} with residual above {tol:g}")
    return kappa


def acd_alpha_for_tail_index(
    target_kappa: float, beta: float = 0.0, innovation: InnovationSpec | None = None
) -> float:
    """Alpha in (0, 1 - beta) whose ACD tail index equals target_kappa."""
    innovation = innovation or InnovationSpec.exponential()
    if target_kappa <= 1:
        raise DomainError(f"target tail index must exceed 1, got {target_kappa}")
    if not 0 <= beta < 1:
        raise DomainError(f"beta must lie in [0, 1), got {beta}")
    if innovation.family == "unit_pareto" and target_kappa >= innovation.tail_index:
        raise DomainError("target tail index must be below the innovation tail index")
    if not innovation.has_unbounded_support:
        raise DomainError("bounded innovations give no power-law tail")

    def residual(alpha: float) -> float:
        return _acd_factor_moment(alpha, beta, innovation, target_kappa) - 1.0

    eps = 1e-12
    return optimize.brentq(residual, eps, 1.0 - beta - eps, xtol=1e-15)


class SecondMomentCheck(NamedTuple):
    holds: bool
    margin: float


def acd_second_moment_condition(params: AcdParams) -> SecondMomentCheck:
    """E[(alpha eps + beta)^2] < 1; never holds when E[eps^2] is infinite."""
    if not params.innovation.has_finite_variance:
        return SecondMomentCheck(False, float("-inf"))
    alpha, beta = params.alpha, params.beta
    stochastic = alpha * alpha * params.innovation.second_moment() if alpha > 0 else 0.0
    margin = 1.0 - (stochastic + 2.0 * alpha * beta + beta * beta)
    return SecondMomentCheck(bool(margin > 0), float(margin))


# --- LMSD analytics ---

@lru_cache(maxsize=8)
def gauss_hermite(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilists' Gauss-Hermite rule normalized to the N(0, 1) density."""
    x, w = hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def hermite_coefficients(sigma_fn, j_max: int = HERMITE_J_MAX, nodes: int = HERMITE_NODES) -> np.ndarray:
    """c_j = E[sigma(Y) He_j(Y)] for j = 0..j_max."""
    x, w = gauss_hermite(nodes)
    weighted = w * sigma_fn(x)
    basis = np.eye(j_max + 1)
    return np.array([np.sum(weighted * hermite_e.hermeval(x, basis[j])) for j in range(j_max + 1)])


def hermite_rank(sigma_fn, tol: float = HERMITE_TOL, j_max: int = HERMITE_J_MAX) -> int:
    coeffs = hermite_coefficients(sigma_fn, j_max=j_max)
    for j in range(1, j_max + 1):
        if abs(coeffs[j]) > tol:
            return j
    raise HermiteRankError(
        f"rank undetermined up to j_max={j_max} (function may be a.s. constant)"
    )


# --- Limit classification ---

def _hermite_type_limit(rank: int, hurst: float) -> TheoreticalLimit:
    family = LimitFamily.FBM_INCREMENT if rank == 1 else LimitFamily.HERMITE
    return TheoreticalLimit(gamma=1.0 - rank * (1.0 - hurst), family=family, order=rank, hurst=hurst)


def _stable_limit(index: float) -> TheoreticalLimit:
    return TheoreticalLimit(gamma=1.0 / index, family=LimitFamily.STABLE, index=index)


def _iid_limit(innovation: InnovationSpec) -> TheoreticalLimit:
    if innovation.has_finite_variance:
        return TheoreticalLimit(gamma=0.5, family=LimitFamily.GAUSSIAN)
    if innovation.tail_index >= 2.0:
        raise ClassificationError(
            f"outside the supported regime: innovation tail index {innovation.tail_index:g} with infinite variance"
        )
    return _stable_limit(innovation.tail_index)


def _on_boundary(value: float, threshold: float) -> bool:
    return abs(value - threshold) <= BOUNDARY_TOL


def _classify_acd(params: AcdParams) -> TheoreticalLimit:
    params.stationary_mean()
    if params.alpha == 0 or params.innovation.is_degenerate:
        # psi_k is deterministic once burnt in, so tau_k = psi_bar * eps_k is i.i.d.
        return _iid_limit(params.innovation)
    check = acd_second_moment_condition(params)
    if check.holds:
        return TheoreticalLimit(gamma=0.5, family=LimitFamily.GAUSSIAN)
    if _on_boundary(check.margin, 0.0):
        raise ClassificationError("boundary case, unclassified: E[tau^2] sits at the finiteness edge")
    try:
        kappa = acd_tail_index(params)
    except TailIndexError as exc:
        raise ClassificationError(f"outside the supported regime: {exc}") from exc
    if 1.0 < kappa < 2.0:
        return _stable_limit(kappa)
    raise ClassificationError(f"outside the supported regime: infinite variance with kappa={kappa:.6g}")


def _classify_lmsd(params: LmsdParams) -> TheoreticalLimit:
    innovation = params.innovation
    finite_variance = innovation.has_finite_variance
    try:
        rank = hermite_rank(params.sigma_fn)
    except HermiteRankError:
        # constant sigma: i.i.d. durations
        return _iid_limit(innovation)
    if not finite_variance and innovation.tail_index >= 2.0:
        raise ClassificationError(
            f"outside the supported regime: innovation tail index {innovation.tail_index:g} with infinite variance"
        )
    memory = rank * (1.0 - params.hurst)
    threshold = 0.5 if finite_variance else 1.0 / innovation.tail_index
    if _on_boundary(memory, threshold):
        raise ClassificationError(
            f"boundary case, unclassified: m(1-H) = {memory:g} equals {threshold:g}"
        )
    if memory < threshold:
        return _hermite_type_limit(rank, params.hurst)
    if finite_variance:
        return TheoreticalLimit(gamma=0.5, family=LimitFamily.GAUSSIAN)
    return _stable_limit(innovation.tail_index)


def classify_limit(model) -> TheoreticalLimit:
    """Predicted normalization rate gamma and limit family for a duration model."""
    if model.kind == "poisson":
        return TheoreticalLimit(
            gamma=0.5,
            family=LimitFamily.GAUSSIAN,
            scale_known=True,
            limit_variance=1.0 / model.rate**2,
        )
    if model.kind == "acd":
        return _classify_acd(model)
    return _classify_lmsd(model)
