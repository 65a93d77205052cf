"""
Approximate Quantized Power Allocation (AQPA)

Builds a band codebook from the fading distributions instead of training
samples. The lowest level is fixed at zero and the others are produced in
reverse order: given p_j and p_{j+1}, the level above, p_{j-1}, is the value
that makes the optimality integral of region j vanish. The free second-lowest
level is chosen so that the top region's optimality integral vanishes too.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .exceptions import AsymptoteExceededError, CodebookExhaustedError, ConfigurationError, RootNotFoundError, UndefinedWaterlevelError, UnsupportedOperationError
from .fading import FadingModel
from .helpers import ROOT_RTOL, geometric_midpoint
from .lloyd import boundary_g1
from .models import PowerCodebook, QuadratureSpec, SolverSettings

logger = logging.getLogger(__name__)

MAX_DOUBLINGS = 80
MAX_SHOOTING_STEPS = 200
SHOOTING_RTOL = 1e-10

# Extra panel breaks past the start of a region, in units of the mean gain
GRADING = (1.0 / 16.0, 0.25, 1.0, 4.0)


# ==================== Quadrature ====================

@lru_cache(maxsize=None)
def _legendre_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], cached per order"""
    nodes, weights = roots_legendre(n)
    return np.real(nodes), weights


def _panel_sums(func: Callable, a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    nodes, weights = _legendre_rule(n)
    half = 0.5 * (b - a)
    points = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    return half * (func(points) @ weights)


def gauss_integral(func: Callable, breaks: Sequence[float], spec: QuadratureSpec) -> float:
    """
    Adaptive composite Gauss-Legendre integral over consecutive breaks

    Args:
        func: Vectorised integrand (called with 2-D arrays of points)
        breaks: Panel edges; the integral runs from the smallest to the largest
        spec: Node count, tolerances and panel limit

    Returns:
        float: Integral estimate from the finer rule of every accepted panel
    """
    edges = np.unique(np.asarray(breaks, dtype=float))
    if edges.size < 2:
        return 0.0
    span = edges[-1] - edges[0]
    a, b = edges[:-1], edges[1:]
    panels = a.size
    total = 0.0
    while True:
        coarse = _panel_sums(func, a, b, spec.nodes)
        fine = _panel_sums(func, a, b, 2 * spec.nodes)
        tolerance = np.maximum(spec.abs_tol * (b - a) / span, spec.rel_tol * np.abs(fine))
        done = np.abs(fine - coarse) <= tolerance
        total += float(np.sum(fine[done]))
        if np.all(done):
            return total
        a, b = a[~done], b[~done]
        if panels + a.size > spec.limit:
            logger.warning(f"Quadrature panel limit {spec.limit} reached, {a.size} panels above tolerance")
            return total + float(np.sum(fine[~done]))
        panels += a.size
        middle = 0.5 * (a + b)
        a, b = np.concatenate((a, middle)), np.concatenate((middle, b))


def _panel_breaks(low: float, high: float, scale: float, extra: Sequence[float] = ()) -> List[float]:
    inner = [low + scale * step for step in GRADING] + list(extra)
    return [low, high] + [point for point in inner if low < point < high]


# ==================== Region integrals ====================

def _check_models(models: Tuple[FadingModel, FadingModel], mu: float):
    g0_model, g1_model = models
    if not g1_model.has_density or (mu > 0 and not g0_model.has_density):
        raise UnsupportedOperationError("AQPA needs fading models with a density")


def _crossing(p_hi: float, p_lo: float, lam: float, mu: float, g1):
    """g0 below which a sample with gain g1 prefers p_hi over p_lo (mu > 0)"""
    gain = (np.log1p(g1 * p_hi) - np.log1p(g1 * p_lo)) / (p_hi - p_lo)
    return (gain - lam) / mu


@lru_cache(maxsize=4096)
def _g1_boundary(p_hi: float, p_lo: float, lam: float) -> float:
    """Boundary gain at g0 = 0 (inf when no gain prefers p_hi)"""
    try:
        return boundary_g1(p_hi, p_lo, lam, 0.0)
    except AsymptoteExceededError:
        return math.inf


def _kinks(p_prev, p_j, p_next, lam, limit) -> List[float]:
    """g1 values where a region bound in g0 crosses zero"""
    points = []
    for p_hi, p_lo in ((p_prev, p_j), (p_j, p_next)):
        if p_hi is None or p_lo is None or lam <= 0:
            continue
        point = _g1_boundary(p_hi, p_lo, lam)
        if 0.0 < point < limit:
            points.append(point)
    return sorted(points)


def region_residual(
    p_prev: Optional[float],
    p_j: float,
    p_next: Optional[float],
    lam: float,
    mu: float,
    models: Tuple[FadingModel, FadingModel],
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """
    Optimality integral of the region carrying level p_j:
    integral over R_j of (g1/(1+g1 p_j) - (lam + mu g0)) f(g0) f(g1)

    Args:
        p_prev: Level above p_j (None for the top region)
        p_j: Level of the region
        p_next: Level below p_j (None for the bottom region)
        lam, mu: Multipliers (lam + mu > 0; lam > 0 when mu = 0)
        models: (g0 model, g1 model) of the band
        spec: Quadrature tolerances and tail truncation

    Returns:
        float: Residual; zero when p_j is the centroid of its region
    """
    spec = spec or QuadratureSpec()
    _check_models(models, mu)
    if mu == 0 and lam <= 0:
        raise UndefinedWaterlevelError("AQPA needs lambda > 0 when mu = 0")
    g0_model, g1_model = models
    scale = g1_model.mean
    limit = spec.tail_multiple * scale

    if mu == 0:
        low = 0.0 if p_next is None else _g1_boundary(p_j, p_next, lam)
        high = limit if p_prev is None else min(_g1_boundary(p_prev, p_j, lam), limit)
        if high <= low:
            return 0.0

        def integrand(g1):
            return (g1 / (1.0 + g1 * p_j) - lam) * g1_model.pdf(g1)

        return gauss_integral(integrand, _panel_breaks(low, high, scale), spec)

    # below the boundary with p_next at g0 = 0 no sample reaches region j
    start = 0.0 if p_next is None or lam <= 0 else _g1_boundary(p_j, p_next, lam)
    if start >= limit:
        return 0.0

    def integrand(g1):
        if p_prev is None:
            lower = np.zeros_like(g1)
        else:
            lower = np.maximum(0.0, _crossing(p_prev, p_j, lam, mu, g1))
        if p_next is None:
            upper = np.full_like(g1, np.inf)
        else:
            upper = np.maximum(0.0, _crossing(p_j, p_next, lam, mu, g1))
        marginal = g1 / (1.0 + g1 * p_j) - lam
        inner = marginal * g0_model.interval_mass(lower, upper) - mu * g0_model.interval_first_moment(lower, upper)
        return np.where(upper > lower, inner, 0.0) * g1_model.pdf(g1)

    breaks = _panel_breaks(start, limit, scale, _kinks(p_prev, p_j, p_next, lam, limit))
    return gauss_integral(integrand, breaks, spec)


# ==================== Reverse recursion ====================

def _bracket_above(residual: Callable[[float], float], p_j: float, offset: float, guided: bool) -> Tuple[float, float]:
    """
    Offsets (low, high) above p_j with residual(p_j + low) < 0 < residual(p_j + high)

    A guided search starts from an offset expected near the root and moves
    by 10% first, then doubles or halves.
    """
    factor = 1.1 if guided else 2.0
    value = residual(p_j + offset)
    if value > 0:
        high = offset
        for _ in range(MAX_DOUBLINGS):
            offset /= factor
            factor = 2.0
            if p_j + offset <= p_j:
                break
            if residual(p_j + offset) < 0:
                return offset, high
            high = offset
        raise RootNotFoundError(f"Region at level {p_j:.6g} stays above its optimum for every level above it")
    low = offset
    for _ in range(MAX_DOUBLINGS):
        offset *= factor
        factor = 2.0
        if residual(p_j + offset) > 0:
            return low, offset
        low = offset
    raise CodebookExhaustedError(f"No level above {p_j:.6g} balances its region")


def aqpa_recursive_step(
    p_j: float,
    p_j_plus_1: float,
    lam: float,
    mu: float,
    models: Tuple[FadingModel, FadingModel],
    spec: Optional[QuadratureSpec] = None,
    tol_root: float = 1e-10,
    guess: Optional[float] = None,
) -> float:
    """
    Level above p_j that zeroes the optimality integral of region j

    The root is searched strictly above p_j between a level where the
    residual is negative and one where it is positive.

    Args:
        guess: Optional level near the expected root (used when above p_j)

    Raises:
        CodebookExhaustedError: If region j already satisfies its optimality
            condition with no level above it
        RootNotFoundError: If the residual never turns negative above p_j
    """
    if not p_j > p_j_plus_1 >= 0:
        raise ConfigurationError(f"Need p_j > p_j+1 >= 0, got {p_j}, {p_j_plus_1}")
    spec = spec or QuadratureSpec()

    def residual(p_prev):
        return region_residual(p_prev, p_j, p_j_plus_1, lam, mu, models, spec)

    top = region_residual(None, p_j, p_j_plus_1, lam, mu, models, spec)
    if top <= 0:
        raise CodebookExhaustedError(
            f"Region at level {p_j:.6g} is optimal as the top region (residual {top:.3g})"
        )

    guided = guess is not None and guess > p_j
    offset = guess - p_j if guided else max(p_j - p_j_plus_1, p_j)
    low, high = _bracket_above(residual, p_j, offset, guided)
    return float(
        brentq(residual, p_j + low, p_j + high, xtol=tol_root, rtol=ROOT_RTOL, maxiter=500)
    )


def aqpa_seed_level(
    lam: float,
    mu: float,
    models: Tuple[FadingModel, FadingModel],
    p_tail: float = 1e-6,
    spec: Optional[QuadratureSpec] = None,
    tol_root: float = 1e-10,
) -> float:
    """First recursion step from p_L = 0 and p_{L-1} = p_tail; returns p_{L-2}"""
    if not p_tail > 0:
        raise ConfigurationError(f"p_tail must be > 0, got {p_tail}", field="aqpa_eps_power")
    try:
        return aqpa_recursive_step(p_tail, 0.0, lam, mu, models, spec, tol_root)
    except CodebookExhaustedError as exc:
        raise RootNotFoundError(f"No seed level above {p_tail:.3g}: {exc}") from exc


def _ladder(
    s: float, L: int, lam, mu, models, spec, tol_root, guide: Optional[List[float]] = None
) -> Tuple[Optional[float], List[float]]:
    """
    Ascending levels grown from (0, s) and the top region's residual

    The residual is None when the recursion runs out before L levels, which
    means s is too large. `guide` holds a nearby ladder used as root guesses.
    """
    levels = [0.0, s]
    while len(levels) < L:
        guess = guide[len(levels)] if guide is not None and len(guide) > len(levels) else None
        try:
            levels.append(aqpa_recursive_step(levels[-1], levels[-2], lam, mu, models, spec, tol_root, guess))
        except CodebookExhaustedError:
            return None, levels
    return region_residual(None, levels[-1], levels[-2], lam, mu, models, spec), levels


def aqpa_codebook(
    lam: float,
    mu: float,
    L: int,
    models: Tuple[FadingModel, FadingModel],
    settings: Optional[SolverSettings] = None,
    spec: Optional[QuadratureSpec] = None,
) -> PowerCodebook:
    """
    AQPA codebook of one band at fixed multipliers

    The second-lowest level s is shot on: a ladder grown from (0, s) whose top
    region still wants a higher level means s is too small. Bisection in log s
    runs until the upper end yields a full ladder; Brent's method on the top
    residual then settles s, each ladder guided by the previous one.

    Args:
        lam, mu: Multipliers (mu as it enters the band rule)
        L (int): Codebook size (>= 2)
        models: (g0 model, g1 model) of the band
        settings: Provides aqpa_eps_power, the tail multiple and root tolerance
        spec: Quadrature override

    Returns:
        PowerCodebook: Strictly descending levels ending at 0

    Raises:
        CodebookExhaustedError: If even the smallest second level cannot grow L levels
        RootNotFoundError: If no second level in range balances the top region
            with strictly descending levels
    """
    settings = settings or SolverSettings()
    spec = spec or QuadratureSpec(tail_multiple=settings.aqpa_tail_multiple)
    if L < 2:
        raise ConfigurationError(f"AQPA needs L >= 2, got {L}", field="L")
    if lam + mu <= 0:
        raise UndefinedWaterlevelError("AQPA needs lambda + mu > 0")
    _check_models(models, mu)

    def ladder(s, guide=None):
        return _ladder(s, L, lam, mu, models, spec, settings.tol_root, guide)

    low = settings.aqpa_eps_power
    top_low, guide = ladder(low)
    if top_low is None:
        raise CodebookExhaustedError(
            f"Only {len(guide)} of {L} AQPA levels fit above {low:.3g} (lambda={lam:.4g}, mu={mu:.4g})"
        )
    if top_low <= 0:
        raise RootNotFoundError(
            f"AQPA top region wants a level below the smallest second level {low:.3g} "
            f"(lambda={lam:.4g}, mu={mu:.4g})"
        )

    high = 1.0 / lam if lam > 0 else settings.bracket_high
    top_high, high_levels = ladder(high, guide)
    if top_high is not None and top_high > 0:
        raise RootNotFoundError("AQPA top region stays unbalanced over the whole search range")
    for step in range(MAX_SHOOTING_STEPS):
        if top_high is not None:
            break
        if high / low - 1.0 < SHOOTING_RTOL:
            raise RootNotFoundError("AQPA ladder runs out before its top region balances")
        middle = geometric_midpoint(low, high)
        top, levels = ladder(middle, guide)
        if top is not None and top > 0:
            low, top_low, guide = middle, top, levels
        else:
            high, top_high, high_levels = middle, top, levels
        logger.debug(f"AQPA bracketing step {step}: second level in [{low:.6g}, {high:.6g}]")
    else:
        raise RootNotFoundError("AQPA shooting did not bracket the second level")

    t_low, t_high = math.log(low), math.log(high)
    shots = {t_low: (top_low, guide), t_high: (top_high, high_levels)}

    def shooting(t):
        nonlocal guide
        if t not in shots:
            top, levels = ladder(math.exp(t), guide)
            # an exhausted ladder sits on the too-large side
            shots[t] = (top_high if top is None else top, levels if top is not None else None)
            if top is not None:
                guide = levels
        return shots[t][0]

    t = brentq(shooting, t_low, t_high, xtol=SHOOTING_RTOL, rtol=ROOT_RTOL, maxiter=MAX_SHOOTING_STEPS)
    best = shots[t][1] if t in shots else None
    if best is None:
        top, best = ladder(math.exp(t), guide)
        if top is None:
            raise RootNotFoundError("AQPA ladder runs out at the balancing second level")
    if len(best) != L or not np.all(np.diff(best) > 0):
        raise RootNotFoundError(f"AQPA levels are not strictly descending: {best[::-1]}")
    logger.info(f"AQPA codebook (lambda={lam:.4g}, mu={mu:.4g}): {np.array2string(np.array(best[::-1]), precision=6)}")
    return PowerCodebook(best[::-1])
