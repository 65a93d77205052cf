"""
Perfect-CSI optimal power allocation: water-filling with an interference-aware
water level, and the multiplier search that selects the active constraints
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError, UndefinedWaterlevelError
from .fading import TrainingSet
from .helpers import solve_monotone_decreasing
from .models import (
    CASE_AIP_ONLY,
    CASE_ATP_ONLY,
    CASE_BOTH,
    ConstraintSet,
    DualVariables,
    FullCsiSolution,
    SolverSettings,
)

logger = logging.getLogger(__name__)


def power_point(g0, g1, lam, mu):
    """
    Full-CSI power p = (1/(lam + mu*g0) - 1/g1)^+

    Args:
        g0: Interference-link gain(s)
        g1: Secondary-link gain(s); g1 = 0 gives zero power
        lam: Transmit power multiplier
        mu: Interference multiplier as it enters the band's power rule

    Returns:
        float or np.ndarray: Power(s), strictly positive iff g1 > lam + mu*g0

    Raises:
        UndefinedWaterlevelError: If lam + mu*g0 <= 0 anywhere
    """
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    level = lam + mu * g0
    if np.any(level <= 0):
        raise UndefinedWaterlevelError(
            f"Water level undefined for lambda={lam}, mu={mu} (lambda + mu*g0 must be > 0)"
        )
    with np.errstate(divide="ignore"):
        power = np.where(g1 > level, 1.0 / level - 1.0 / g1, 0.0)
    return float(power) if power.ndim == 0 else power


def band_constraint_values(g0: np.ndarray, g1: np.ndarray, lam: float, mu: float) -> Tuple[float, float]:
    """Empirical (E[p], E[g0 p]) of one band under the full-CSI rule"""
    power = power_point(g0, g1, lam, mu)
    return float(np.mean(power)), float(np.mean(g0 * power))


def solve_interference_multiplier(
    g0: np.ndarray,
    g1: np.ndarray,
    Q: float,
    lam: float,
    settings: Optional[SolverSettings] = None,
) -> float:
    """
    Solve E[g0 * p(g0, g1; lam, mu)] = Q for mu on one band

    Args:
        g0, g1: Band samples
        Q: Interference cap (> 0)
        lam: Fixed transmit power multiplier
        settings: Solver tolerances

    Returns:
        float: mu > 0 (0.0 when the cap is already met at mu = 0 with lam > 0)

    Raises:
        InfeasibleConstraintError: If the equality cannot be bracketed
    """
    settings = settings or SolverSettings()
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    if g0.size == 0:
        raise ConfigurationError("Band sample list is empty", field="training")
    if not Q > 0:
        raise ConfigurationError(f"Interference cap must be > 0, got {Q}", field="Q_avg")
    if lam > 0 and band_constraint_values(g0, g1, lam, 0.0)[1] <= Q:
        return 0.0

    def interference(mu):
        return band_constraint_values(g0, g1, lam, mu)[1]

    mu = solve_monotone_decreasing(
        interference,
        Q,
        settings.bracket_low,
        settings.bracket_high,
        name="interference multiplier",
    )
    residual = abs(interference(mu) - Q)
    if residual > settings.tol_feas * Q:
        logger.warning(f"Interference equality residual {residual:.3g} above tolerance (mu={mu:.6g})")
    return float(mu)


def _band_multipliers(
    constraints: ConstraintSet,
    training: TrainingSet,
    lam: float,
    settings: SolverSettings,
) -> np.ndarray:
    mus = np.zeros(training.M)
    for i in range(training.M):
        if constraints.is_unconstrained(i):
            continue
        g0, g1 = training.band(i)
        mus[i] = solve_interference_multiplier(g0, g1, constraints.Q_avg[i], lam, settings)
    return mus


def _allocation(training: TrainingSet, lam: float, mu_prime: np.ndarray) -> np.ndarray:
    powers = np.empty_like(training.g0)
    for i in range(training.M):
        g0, g1 = training.band(i)
        powers[:, i] = power_point(g0, g1, lam, mu_prime[i])
    return powers


def _average_power(training: TrainingSet, lam: float, mu_prime: np.ndarray) -> float:
    return float(np.mean(_allocation(training, lam, mu_prime)))


def aip_only_power_threshold(
    constraints: ConstraintSet,
    training: TrainingSet,
    settings: Optional[SolverSettings] = None,
) -> float:
    """
    Average sum power (1/M) sum_i E[(1/(mu_i g0) - 1/g1)^+] with every
    interference constraint tight and lam = 0; above this budget the
    capacity no longer grows with P_avg.
    """
    settings = settings or SolverSettings()
    if any(constraints.is_unconstrained(i) for i in range(constraints.M)):
        return math.inf
    mu_prime = _band_multipliers(constraints, training, 0.0, settings)
    return _average_power(training, 0.0, mu_prime)


def case_tags(duals: DualVariables) -> List[str]:
    """Active-constraint tag per band implied by the multipliers"""
    tags = []
    for mu in duals.mu:
        if duals.lam == 0:
            tags.append(CASE_AIP_ONLY)
        elif mu == 0:
            tags.append(CASE_ATP_ONLY)
        else:
            tags.append(CASE_BOTH)
    return tags


def _solution(training: TrainingSet, lam: float, mu_prime: np.ndarray) -> FullCsiSolution:
    powers = _allocation(training, lam, mu_prime)
    duals = DualVariables.from_effective(lam, mu_prime)
    return FullCsiSolution(
        duals=duals,
        powers=powers,
        cases=case_tags(duals),
        atp=float(np.mean(powers)),
        aip=np.mean(training.g0 * powers, axis=0),
        capacity=float(np.mean(np.log1p(training.g1 * powers))),
    )


def solve_power_multiplier(
    constraints: ConstraintSet,
    training: TrainingSet,
    settings: Optional[SolverSettings] = None,
) -> float:
    """lam > 0 at which the average sum power meets P_avg, each band's mu re-solved per lam"""
    settings = settings or SolverSettings()

    def average_power(lam):
        return _average_power(training, lam, _band_multipliers(constraints, training, lam, settings))

    return solve_monotone_decreasing(
        average_power,
        constraints.P_avg,
        settings.bracket_low,
        settings.bracket_high,
        name="power multiplier",
    )


def allocate_full_csi(
    constraints: ConstraintSet,
    training: TrainingSet,
    settings: Optional[SolverSettings] = None,
) -> FullCsiSolution:
    """
    Optimal perfect-CSI allocation over a training set

    First every interference constraint is made tight with lam = 0; if the
    resulting average sum power fits the budget that is the optimum.
    Otherwise lam > 0 is found by bisection on the power equality, with each
    band's mu either 0 (cap already met) or solved from its cap.

    Args:
        constraints: P_avg and per-band Q_avg (linear)
        training: Samples used for the empirical expectations
        settings: Solver tolerances

    Returns:
        FullCsiSolution
    """
    settings = settings or SolverSettings()
    if training.N < 1:
        raise ConfigurationError("Training set is empty", field="training")
    if constraints.M != training.M:
        raise ConfigurationError(
            f"Constraints cover {constraints.M} bands, training set has {training.M}", field="Q_avg"
        )

    if not any(constraints.is_unconstrained(i) for i in range(constraints.M)):
        mu_prime = _band_multipliers(constraints, training, 0.0, settings)
        atp = _average_power(training, 0.0, mu_prime)
        if atp <= constraints.P_avg * (1.0 + settings.tol_feas):
            logger.info(f"Full CSI: power constraint inactive (ATP={atp:.6g} <= {constraints.P_avg:.6g})")
            return _solution(training, 0.0, mu_prime)
        logger.debug(f"Full CSI: lambda=0 allocation needs ATP={atp:.6g}, searching lambda > 0")

    lam = solve_power_multiplier(constraints, training, settings)
    mu_prime = _band_multipliers(constraints, training, lam, settings)
    solution = _solution(training, lam, mu_prime)
    logger.info(
        f"Full CSI: lambda={lam:.6g}, mu={np.array2string(solution.duals.mu, precision=6)}, "
        f"capacity={solution.capacity:.6g}"
    )
    return solution


def slackness_residuals(
    duals: DualVariables,
    constraints: ConstraintSet,
    atp: float,
    aip: np.ndarray,
) -> Tuple[float, np.ndarray]:
    """Complementary slackness products lam*(P - ATP) and mu_i*(Q_i - AIP_i)"""
    power_residual = duals.lam * (constraints.P_avg - atp)
    caps = np.asarray(constraints.Q_avg)
    with np.errstate(invalid="ignore"):
        interference_residual = np.where(duals.mu > 0, duals.mu * (caps - aip), 0.0)
    return float(power_residual), interference_residual
