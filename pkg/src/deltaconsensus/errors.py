"""Exception types raised across the package."""


class ConsensusError(Exception):
    """Base class for all package errors."""


class SamplingPeriodError(ConsensusError, ValueError):
    """The sampling period violates ``0 < h < 1/d_max`` for some graph."""


class HypothesisError(ConsensusError, ValueError):
    """A structural hypothesis (connectivity, primitivity, contraction) fails."""


class ConvergenceError(ConsensusError, RuntimeError):
    """An iterative routine did not converge, or two routes disagree."""
