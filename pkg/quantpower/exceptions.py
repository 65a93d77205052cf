"""
Exception types raised by the codebook design library
"""

from typing import Optional


class QuantPowerError(Exception):
    """Base class for every library error"""


class ConfigurationError(QuantPowerError, ValueError):
    """Invalid model, constraint or experiment parameter"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class UnsupportedOperationError(QuantPowerError):
    """Operation not defined for the given inputs"""


class UndefinedWaterlevelError(QuantPowerError, ValueError):
    """lambda + mu * g0 is zero, so the water level is infinite"""


class AsymptoteExceededError(QuantPowerError, ValueError):
    """Region boundary evaluated at or beyond its vertical asymptote in g0"""


class EmptyRegionError(QuantPowerError):
    """Centroid requested for a region with no samples"""


class InfeasibleConstraintError(QuantPowerError):
    """A multiplier bracket could not be formed for a constraint equality"""


class RootNotFoundError(QuantPowerError):
    """No sign change of a scalar equation on its search bracket"""


class CodebookExhaustedError(RootNotFoundError):
    """Reverse level recursion reached a region that extends to infinity"""


class ConvergenceError(QuantPowerError):
    """Outer solver did not converge within its iteration budget"""
