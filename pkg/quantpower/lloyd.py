"""
Modified Generalized Lloyd Algorithm for one band at fixed multipliers

Samples are partitioned by the nearest-neighbour condition (each sample goes
to the level maximising log(1 + g1 p) - (lam + mu g0) p) and every level is
moved to the centroid power of its region. Labels are 0-based: label 0 is the
region of the highest power level.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .exceptions import AsymptoteExceededError, ConfigurationError, EmptyRegionError, UndefinedWaterlevelError
from .full_csi import power_point
from .helpers import ROOT_RTOL
from .models import CodebookPropertyReport, GlaReport, Partition, PowerCodebook, SolverSettings

logger = logging.getLogger(__name__)

# Monotonicity slack for the Lagrangian trace
TRACE_SLACK = 1e-12
BOUNDARY_GRID = np.linspace(0.0, 10.0, 101)


def score_matrix(g0: np.ndarray, g1: np.ndarray, levels: np.ndarray, lam: float, mu: float) -> np.ndarray:
    """N x L matrix of log(1 + g1 p_j) - (lam + mu g0) p_j"""
    levels = np.asarray(levels, dtype=float)
    cost = (lam + mu * np.asarray(g0, dtype=float))[:, None]
    return np.log1p(np.asarray(g1, dtype=float)[:, None] * levels[None, :]) - cost * levels[None, :]


def nnc_assign(g0: np.ndarray, g1: np.ndarray, codebook, lam: float, mu: float) -> Partition:
    """
    Nearest-neighbour condition: label every sample with its best level

    Ties go to the lowest index.
    """
    levels = _levels_of(codebook)
    labels = np.argmax(score_matrix(g0, g1, levels, lam, mu), axis=1)
    return Partition.from_labels(labels, levels.size)


def _centroid_condition(g0: np.ndarray, g1: np.ndarray, lam: float, mu: float, weights: Optional[np.ndarray]):
    cost = lam + mu * g0

    if weights is None:
        def condition(p):
            return float(np.mean(g1 / (1.0 + g1 * p) - cost))
    else:
        total = float(np.sum(weights))

        def condition(p):
            return float(np.sum(weights * (g1 / (1.0 + g1 * p) - cost)) / total)

    return condition


def solve_centroid(
    g0: np.ndarray,
    g1: np.ndarray,
    lam: float,
    mu: float,
    weights: Optional[np.ndarray] = None,
    tol_root: float = 1e-10,
) -> float:
    """
    Root of the (optionally weighted) condition E[g1/(1+g1 p) - (lam + mu g0)] = 0,
    clamped at zero

    The condition is strictly decreasing in p, so the root is bracketed by
    [0, max per-sample water-filling power].
    """
    if g1.size == 0:
        raise EmptyRegionError("Centroid requested for an empty region")
    condition = _centroid_condition(g0, g1, lam, mu, weights)
    if condition(0.0) <= 0.0:
        return 0.0
    cost = lam + mu * g0
    live = g1 > cost
    if weights is not None:
        live &= weights > 0
    if np.any(cost[live] <= 0):
        raise UndefinedWaterlevelError(
            f"Centroid unbounded for lambda={lam}, mu={mu}: the region has no finite water level"
        )
    upper = float(np.max(1.0 / cost[live] - 1.0 / g1[live]))
    upper = upper * (1.0 + 1e-9) + tol_root
    while condition(upper) > 0.0:
        upper *= 2.0
    return float(brentq(condition, 0.0, upper, xtol=tol_root * 1e-2, rtol=ROOT_RTOL, maxiter=500))


def centroid_power(g0: np.ndarray, g1: np.ndarray, lam: float, mu: float, tol_root: float = 1e-10) -> float:
    """
    Centroid condition for one region: max(p*, 0) with
    E[g1/(1+g1 p*) - (lam + mu g0) | R] = 0

    Args:
        g0, g1: Samples of the region
        lam, mu: Fixed multipliers
        tol_root: Absolute root tolerance on p

    Returns:
        float: Optimal level of the region

    Raises:
        EmptyRegionError: If the region holds no samples
    """
    return solve_centroid(np.asarray(g0, dtype=float), np.asarray(g1, dtype=float), lam, mu, None, tol_root)


def lagrangian_value(g0: np.ndarray, g1: np.ndarray, partition: Partition, codebook, lam: float, mu: float) -> float:
    """Empirical mean of each sample's score at its assigned level"""
    levels = _levels_of(codebook)
    labels = partition.labels
    if labels.shape[0] != np.asarray(g1).shape[0]:
        raise ConfigurationError(
            f"Partition covers {labels.shape[0]} samples, training set has {np.asarray(g1).shape[0]}"
        )
    if labels.size and (labels.max() >= levels.size or labels.min() < 0):
        raise ConfigurationError("Partition labels exceed the codebook size")
    p = levels[labels]
    return float(np.mean(np.log1p(g1 * p) - (lam + mu * g0) * p))


def band_capacity(g1: np.ndarray, levels: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.log1p(g1 * levels[labels])))


def initial_codebook(
    g0: np.ndarray,
    g1: np.ndarray,
    L: int,
    lam: float,
    mu: float,
    mode: str = "quantile",
    rng: Optional[np.random.Generator] = None,
) -> PowerCodebook:
    """
    Starting codebook for a Lloyd run

    "quantile": full-CSI powers at the (2k-1)/2L quantiles, k = 1..L.
    "random": uniform levels in (0, p_max] with p_max the largest full-CSI power.
    """
    full = power_point(g0, g1, lam, mu)
    if mode == "quantile":
        probs = (2.0 * np.arange(1, L + 1) - 1.0) / (2.0 * L)
        levels = np.quantile(full, probs)
    elif mode == "random":
        rng = rng or np.random.default_rng()
        p_max = float(np.max(full)) if np.max(full) > 0 else 1.0
        levels = p_max * (1.0 - rng.random(L))
    else:
        raise ConfigurationError(f"Unknown initialisation mode '{mode}'", field="init")
    return PowerCodebook(np.sort(levels)[::-1])


def _levels_of(codebook) -> np.ndarray:
    if isinstance(codebook, PowerCodebook):
        return codebook.levels
    return PowerCodebook(codebook).levels


def _split_region(
    levels: np.ndarray,
    occupied: np.ndarray,
    donor: int,
    g0: np.ndarray,
    g1: np.ndarray,
    labels: np.ndarray,
    solve: Callable[[np.ndarray, np.ndarray], float],
) -> float:
    """
    Level placed inside the donor region: midway to the nearest distinct
    occupied level above it, or below it for the top region. A lone region
    is split on g1 and the centroid of its upper half is used.
    """
    p = levels[donor]
    higher = levels[occupied & (levels > p)]
    if higher.size:
        return 0.5 * (p + float(np.min(higher)))
    lower = levels[occupied & (levels < p)]
    if lower.size:
        return 0.5 * (p + float(np.max(lower)))
    members = np.flatnonzero(labels == donor)
    order = members[np.argsort(g1[members], kind="stable")]
    upper = order[order.size // 2:]
    candidate = solve(g0[upper], g1[upper]) if upper.size else 0.0
    return candidate if candidate > p else 2.0 * p + 1e-12


def _reseed_levels(
    levels: np.ndarray,
    starved: np.ndarray,
    g0: np.ndarray,
    g1: np.ndarray,
    labels: np.ndarray,
    solve: Callable[[np.ndarray, np.ndarray], float],
) -> np.ndarray:
    """Move every starved level into the currently most populated region"""
    levels = levels.copy()
    occupied = ~starved
    counts = np.bincount(labels, minlength=levels.size).astype(float)
    for j in np.flatnonzero(starved):
        donor = int(np.argmax(np.where(occupied, counts, -1.0)))
        levels[j] = _split_region(levels, occupied, donor, g0, g1, labels, solve)
        counts[donor] /= 2.0
        counts[j] = counts[donor]
        occupied[j] = True
    return levels


def _empty_by_count(labels: np.ndarray, L: int) -> np.ndarray:
    return np.bincount(labels, minlength=L) == 0


def _lloyd_loop(
    g0: np.ndarray,
    g1: np.ndarray,
    levels: np.ndarray,
    assign: Callable[[np.ndarray], np.ndarray],
    objective: Callable[[np.ndarray, np.ndarray], float],
    update: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
    solve: Callable[[np.ndarray, np.ndarray], float],
    tol: float,
    max_iter: int,
    starved_by: Optional[Callable[[np.ndarray, int], np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, GlaReport]:
    """
    Shared alternation used by the noise-free and the noisy-feedback Lloyd runs

    `update(levels, labels)` returns (new_levels, starved) where starved marks
    levels without any supporting sample; those are re-seeded. The run only
    stops while a level is starved when re-seeding it has just failed.
    """
    starved_by = starved_by or _empty_by_count
    levels = np.sort(np.asarray(levels, dtype=float))[::-1]
    labels = assign(levels)
    value = objective(levels, labels)
    trace = [value]
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        new_levels, starved = update(levels, labels)
        reseeded = starved if np.any(starved) and not np.all(starved) else np.zeros_like(starved)
        if np.any(reseeded):
            new_levels = _reseed_levels(new_levels, starved, g0, g1, labels, solve)
        order = np.argsort(-new_levels, kind="stable")
        new_levels = new_levels[order]
        reseeded = reseeded[order]

        new_labels = assign(new_levels)
        new_value = objective(new_levels, new_labels)
        if new_value < value - TRACE_SLACK * max(1.0, abs(value)):
            logger.warning(f"Lagrangian decreased at iteration {iterations}: {value:.12g} -> {new_value:.12g}")
        trace.append(new_value)
        unchanged = np.array_equal(new_labels, _relabel(labels, order))
        change = abs(new_value - value) / max(abs(value), 1e-300)
        levels, labels, value = new_levels, new_labels, new_value
        logger.debug(f"Lloyd iteration {iterations}: lagrangian={value:.12g}")
        pending = starved_by(labels, levels.size) & ~reseeded
        if (unchanged or change < tol) and not np.any(pending):
            converged = True
            break

    report = GlaReport(
        iterations=iterations,
        lagrangian_trace=trace,
        converged=converged,
        empty_levels=[int(j) for j in np.flatnonzero(np.bincount(labels, minlength=levels.size) == 0)],
    )
    if report.empty_levels:
        logger.warning(f"Levels {report.empty_levels} have empty regions after {iterations} iterations")
    return levels, labels, report


def _relabel(labels: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Labels after levels were permuted by `order` (new index k holds old level order[k])"""
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    return inverse[labels]


def run_gla(
    g0: np.ndarray,
    g1: np.ndarray,
    L: int,
    lam: float,
    mu: float,
    init=None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[PowerCodebook, Partition, GlaReport]:
    """
    Alternate nnc_assign and centroid_power until the relative Lagrangian
    change drops below tol, the labels stop changing, or max_iter is reached

    Args:
        g0, g1: Band training samples
        L (int): Codebook size
        lam, mu: Fixed multipliers (mu as it enters the band score)
        init: Initial levels (default: quantile seeding)
        tol, max_iter: Override the settings' convergence criterion
        settings: Solver tolerances

    Returns:
        tuple: (PowerCodebook sorted descending, Partition, GlaReport)
    """
    settings = settings or SolverSettings()
    tol = settings.gla_tol if tol is None else tol
    max_iter = settings.gla_max_iter if max_iter is None else max_iter
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    if L < 1:
        raise ConfigurationError(f"L must be >= 1, got {L}", field="L")
    levels = initial_codebook(g0, g1, L, lam, mu).levels if init is None else _levels_of(init).copy()
    if levels.size != L:
        raise ConfigurationError(f"Initial codebook has {levels.size} levels, expected {L}", field="init")

    def assign(current):
        return np.argmax(score_matrix(g0, g1, current, lam, mu), axis=1)

    def objective(current, labels):
        p = current[labels]
        return float(np.mean(np.log1p(g1 * p) - (lam + mu * g0) * p))

    def solve(region_g0, region_g1):
        return solve_centroid(region_g0, region_g1, lam, mu, None, settings.tol_root)

    def update(current, labels):
        new_levels = current.copy()
        starved = np.zeros(current.size, dtype=bool)
        for j in range(current.size):
            members = labels == j
            if not np.any(members):
                starved[j] = True
                continue
            new_levels[j] = solve(g0[members], g1[members])
        return new_levels, starved

    levels, labels, report = _lloyd_loop(g0, g1, levels, assign, objective, update, solve, tol, max_iter)
    report.capacity = band_capacity(g1, levels, labels)
    if not report.converged:
        logger.warning(f"GLA did not converge in {max_iter} iterations (lambda={lam:.4g}, mu={mu:.4g})")
    return PowerCodebook(levels), Partition.from_labels(labels, L), report


def run_gla_restarts(
    g0: np.ndarray,
    g1: np.ndarray,
    L: int,
    lam: float,
    mu: float,
    restarts: int = 1,
    seed: int = 0,
    init=None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[PowerCodebook, Partition, GlaReport]:
    """Best of one seeded run plus (restarts - 1) random-initialisation runs"""
    best = run_gla(g0, g1, L, lam, mu, init=init, settings=settings)
    rng = np.random.default_rng(seed)
    for _ in range(max(restarts, 1) - 1):
        start = initial_codebook(g0, g1, L, lam, mu, mode="random", rng=rng)
        candidate = run_gla(g0, g1, L, lam, mu, init=start, settings=settings)
        if candidate[2].lagrangian_trace[-1] > best[2].lagrangian_trace[-1]:
            best = candidate
    return best


def asymptote_g0(p_hi: float, p_lo: float, lam: float, mu: float) -> float:
    """
    g0 at which the boundary between levels p_hi > p_lo runs off to g1 = inf

    0 means the upper region is empty for every g0 >= 0; inf means the
    boundary stays finite everywhere.
    """
    if p_lo <= 0:
        return math.inf
    if mu <= 0:
        return math.inf if p_hi - p_lo * float(np.exp(lam * (p_hi - p_lo))) > 0 else 0.0
    slope = math.log(p_hi / p_lo) / (p_hi - p_lo) - lam
    return slope / mu if slope > 0 else 0.0


def boundary_g1(p_hi: float, p_lo: float, lam: float, mu: float, g0=0.0):
    """
    g1 on the boundary between adjacent regions with levels p_hi > p_lo >= 0:
    (e^{w d} - 1) / (p_hi - p_lo e^{w d}), w = lam + mu g0, d = p_hi - p_lo

    Raises:
        AsymptoteExceededError: If g0 is at or beyond the vertical asymptote
    """
    if not p_hi > p_lo >= 0:
        raise ConfigurationError(f"Need p_hi > p_lo >= 0, got p_hi={p_hi}, p_lo={p_lo}")
    g0_arr = np.asarray(g0, dtype=float)
    d = p_hi - p_lo
    excess = np.expm1((lam + mu * g0_arr) * d)
    denominator = d - p_lo * excess
    if np.any(denominator <= 0):
        raise AsymptoteExceededError(
            f"g0={g0} is beyond the boundary asymptote g0={asymptote_g0(p_hi, p_lo, lam, mu):.6g}"
        )
    g1 = excess / denominator
    return float(g1) if g1.ndim == 0 else g1


def relabel_by_boundaries(g0: np.ndarray, g1: np.ndarray, codebook, lam: float, mu: float) -> np.ndarray:
    """
    Label samples by comparing g1 with the boundaries of adjacent levels

    For a strictly descending codebook a sample belongs to the first region j
    whose lower boundary (with level j+1) it lies above; beyond the asymptote
    the boundary is at infinity.
    """
    levels = _levels_of(codebook)
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    labels = np.full(g1.shape, levels.size - 1, dtype=np.intp)
    assigned = np.zeros(g1.shape, dtype=bool)
    for j in range(levels.size - 1):
        p_hi, p_lo = levels[j], levels[j + 1]
        if not p_hi > p_lo:
            continue
        excess = np.broadcast_to(np.expm1((lam + mu * g0) * (p_hi - p_lo)), g1.shape)
        denominator = (p_hi - p_lo) - p_lo * excess
        finite = denominator > 0
        threshold = np.full(g1.shape, np.inf)
        threshold[finite] = excess[finite] / denominator[finite]
        above = (g1 > threshold) & ~assigned
        labels[above] = j
        assigned |= above
    return labels


def verify_codebook_properties(
    codebook,
    lam: float,
    mu: float,
    L: Optional[int] = None,
    g0_grid: Optional[np.ndarray] = None,
    positive_floor: float = 0.0,
) -> CodebookPropertyReport:
    """
    Structural checks for a converged codebook

    (a) strictly descending levels; (b) all but the last level positive;
    (c) last level zero when lam + mu >= 1; (d) every adjacent boundary lies
    above g1 = lam + mu g0 on a g0 grid. Violations are reported, not raised.
    """
    levels = _levels_of(codebook)
    L = levels.size if L is None else L
    grid = BOUNDARY_GRID if g0_grid is None else np.asarray(g0_grid, dtype=float)
    violations = []

    if levels.size != L:
        violations.append(f"codebook has {levels.size} levels, expected {L}")

    descending = bool(np.all(np.diff(levels) < 0))
    if not descending:
        violations.append("levels are not strictly descending")

    positive = bool(np.all(levels[:-1] > positive_floor))
    if not positive:
        violations.append("a level other than the last is not positive")

    zero_last = None
    if lam + mu >= 1:
        zero_last = bool(levels[-1] == 0)
        if not zero_last:
            violations.append(f"last level {levels[-1]:.6g} should be 0 when lambda + mu >= 1")

    boundaries_ok = True
    for j in range(levels.size - 1):
        p_hi, p_lo = levels[j], levels[j + 1]
        if not p_hi > p_lo:
            continue
        limit = asymptote_g0(p_hi, p_lo, lam, mu)
        if limit <= 0:
            boundaries_ok = False
            violations.append(f"region of level {j} is empty: its boundary with level {j + 1} is at g1 = inf")
            continue
        points = grid[grid < limit * (1.0 - 1e-9)] if math.isfinite(limit) else grid
        # the water level lam + mu g0 is 0 at g0 = 0 when lam = 0
        points = points[lam + mu * points > 0]
        if points.size == 0:
            continue
        g1 = boundary_g1(p_hi, p_lo, lam, mu, points)
        if np.any(g1 <= lam + mu * points):
            boundaries_ok = False
            violations.append(f"boundary between levels {j} and {j + 1} dips to g1 <= lambda + mu g0")

    return CodebookPropertyReport(
        strictly_descending=descending,
        positive_upper_levels=positive,
        zero_last_level=zero_last,
        boundaries_above_threshold=boundaries_ok,
        violations=violations,
    )
