"""Exception hierarchy shared by every tick_drift module."""


class TickDriftError(Exception):
    """Base class for model and runtime failures (CLI exit code 3)."""


class DomainError(TickDriftError, ValueError):
    """A parameter or input lies outside the range an operation accepts."""


class StationarityError(TickDriftError):
    """ACD parameters admit no stationary solution (alpha + beta >= 1)."""


class TailIndexError(TickDriftError):
    """No finite tail index inside the search bracket."""


class HermiteRankError(TickDriftError):
    """Every Hermite coefficient up to j_max is below tolerance."""


class ClassificationError(TickDriftError):
    """Parameters sit on a dichotomy boundary or outside the covered regime."""


class DegenerateSampleError(TickDriftError):
    """A statistic is undefined for the sample (zero variance, all-zero sums)."""


class HorizonError(TickDriftError):
    """A calendar horizon exceeds the simulated span of events."""


class ConfigError(TickDriftError):
    """Invalid experiment configuration (CLI exit code 2)."""
