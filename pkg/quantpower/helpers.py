"""
Helper utility functions for the quantized power codebook designer
"""

import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .exceptions import ConfigurationError, InfeasibleConstraintError

logger = logging.getLogger(__name__)

# Geometric bracket growth per expansion step
BRACKET_GROWTH = 10.0
# Smallest relative tolerance brentq accepts
ROOT_RTOL = 4.0 * np.finfo(float).eps
MAX_BRACKET_EXPANSIONS = 40


def db_to_linear(value_db):
    """
    Convert a dB quantity to linear units (x_lin = 10^(x_dB/10))

    Args:
        value_db: float, None or the string "inf"; None and "inf" map to math.inf

    Returns:
        float: Linear value
    """
    if value_db is None:
        return math.inf
    if isinstance(value_db, str):
        if value_db.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ConfigurationError(f"Not a dB value: {value_db!r}")
    return 10.0 ** (float(value_db) / 10.0)


def linear_to_db(value):
    """Convert a linear quantity to dB (inf stays inf)"""
    if math.isinf(value):
        return math.inf
    if value <= 0:
        raise ConfigurationError(f"Cannot express non-positive value {value} in dB")
    return 10.0 * math.log10(value)


def is_power_of_two(n):
    """
    Check that n is a positive integer power of two

    Args:
        n (int): Number of codebook levels

    Returns:
        bool: True if n = 2^B for some B >= 0
    """
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def bits_for_levels(levels):
    """Number of feedback bits needed to index `levels` codewords"""
    if not is_power_of_two(levels):
        raise ConfigurationError(f"L={levels} is not a power of two", field="L")
    return int(levels).bit_length() - 1


def validate_positive(value, field):
    """
    Validate a strictly positive real parameter

    Args:
        value: Parameter value
        field (str): Field name reported on failure

    Returns:
        float: The value as float
    """
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{field} must be a number, got {value!r}", field=field)
    if not number > 0:
        raise ConfigurationError(f"{field} must be > 0, got {value!r}", field=field)
    return number


def validate_count(value, field, minimum=1):
    """Validate an integer count >= minimum"""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigurationError(f"{field} must be an integer, got {value!r}", field=field)
    if value < minimum:
        raise ConfigurationError(f"{field} must be >= {minimum}, got {value}", field=field)
    return int(value)


def validate_probability(value, field, upper=1.0):
    """Validate a probability in [0, upper]"""
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{field} must be a number, got {value!r}", field=field)
    if not 0.0 <= number <= upper:
        raise ConfigurationError(
            f"{field} must lie in [0, {upper}], got {value!r}", field=field
        )
    return number


def natural_binary_labels(levels):
    """Bit strings of indices 0..L-1, most significant bit first"""
    bits = bits_for_levels(levels)
    return [format(k, f"0{bits}b") if bits else "" for k in range(levels)]


def solve_monotone_decreasing(
    fn: Callable[[float], float],
    target: float,
    low: float,
    high: float,
    xtol: float = 1e-14,
    rtol: float = 1e-12,
    name: str = "multiplier",
) -> float:
    """
    Find x > 0 with fn(x) = target for a non-increasing fn

    The bracket [low, high] is expanded geometrically until
    fn(low) > target > fn(high), then refined with Brent's method.

    Args:
        fn: Non-increasing scalar function of a positive argument
        target: Value to hit
        low, high: Initial bracket (0 < low < high)
        xtol, rtol: Root tolerances passed to brentq
        name: Label used in log and error messages

    Returns:
        float: Root location

    Raises:
        InfeasibleConstraintError: If no bracket can be formed
    """
    f_low = fn(low) - target
    expansions = 0
    while f_low <= 0:
        if f_low == 0:
            return low
        if expansions >= MAX_BRACKET_EXPANSIONS:
            raise InfeasibleConstraintError(
                f"Cannot bracket {name}: value {f_low + target:.6g} at {low:.3g} "
                f"does not exceed target {target:.6g}"
            )
        high = low
        low /= BRACKET_GROWTH
        f_low = fn(low) - target
        expansions += 1
        logger.debug(f"Expanded {name} bracket downward to {low:.3g}")

    f_high = fn(high) - target
    expansions = 0
    while f_high > 0:
        if expansions >= MAX_BRACKET_EXPANSIONS:
            raise InfeasibleConstraintError(
                f"Cannot bracket {name}: value {f_high + target:.6g} at {high:.3g} "
                f"stays above target {target:.6g}"
            )
        low, f_low = high, f_high
        high *= BRACKET_GROWTH
        f_high = fn(high) - target
        expansions += 1
        logger.debug(f"Expanded {name} bracket upward to {high:.3g}")

    if f_high == 0:
        return high
    return brentq(lambda x: fn(x) - target, low, high, xtol=xtol, rtol=rtol, maxiter=500)


def as_float_array(values: Sequence[float], field: str) -> np.ndarray:
    """Convert to a 1-D float64 array, rejecting NaN and negative entries"""
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        raise ConfigurationError(f"{field} must be one-dimensional", field=field)
    if np.any(np.isnan(array)) or np.any(array < 0):
        raise ConfigurationError(f"{field} entries must be non-negative", field=field)
    return array


def geometric_midpoint(low: float, high: float) -> float:
    """Midpoint in log space (falls back to arithmetic when low is 0)"""
    if low <= 0:
        return 0.5 * (low + high)
    return math.sqrt(low * high)


def relative_change(new: float, old: float, floor: float = 1e-300) -> float:
    """|new - old| / max(|old|, floor)"""
    return abs(new - old) / max(abs(old), floor)


def bracket_around(guess: Optional[float], default: Tuple[float, float]) -> Tuple[float, float]:
    """Initial multiplier bracket centred on a guess (factor 4 each side)"""
    if guess is None or not guess > 0 or not math.isfinite(guess):
        return default
    return guess / 4.0, guess * 4.0
