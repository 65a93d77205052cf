"""
Outer Lagrange multiplier search around the per-band codebook designers

At fixed multipliers the wideband problem separates into one codebook
design per band (run with mu'_i = M mu_i). The outer loop first tries
lambda = 0 with every interference constraint tight; if the resulting
average power exceeds the budget, lambda > 0 is found by bisection on the
power equality, each band keeping mu'_i = 0 when its interference cap
already holds and solving its cap otherwise.
"""

import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .aqpa import aqpa_codebook
from .exceptions import ConfigurationError, InfeasibleConstraintError
from .fading import ChannelModels, TrainingSet
from .full_csi import allocate_full_csi
from .helpers import bracket_around, geometric_midpoint
from .lloyd import band_capacity, nnc_assign, run_gla, run_gla_restarts
from .models import BandDesign, ConstraintSet, DualVariables, FeedbackChannel, GlaReport, QuantizedSolution, SolverSettings
from .noisy_feedback import exhaustive_index_search, gla2_assign, received_capacity, received_power, run_gla2

logger = logging.getLogger(__name__)

METHOD_GLA = "gla"
METHOD_AQPA = "aqpa"
METHOD_GLA2 = "gla2"

# Multipliers are considered stable below this relative bracket width
MULTIPLIER_RTOL = 1e-4
BRACKET_STEP = 4.0
MAX_BRACKET_STEPS = 40
MAX_INNER_STEPS = 100


# ==================== Per-band designers ====================

class BandDesigner:
    """Designs one band's codebook at fixed (lambda, mu'_i)"""

    method = ""
    channel: Optional[FeedbackChannel] = None

    def __init__(self, settings: Optional[SolverSettings] = None):
        self.settings = settings or SolverSettings()
        self._warm: Dict[int, np.ndarray] = {}

    def design(self, band: int, g0: np.ndarray, g1: np.ndarray, lam: float, mu_prime: float, L: int) -> BandDesign:
        levels, labels, report = self._codebook(band, g0, g1, lam, mu_prime, L)
        self._warm[band] = levels
        power = self._power(levels, labels)
        return BandDesign(
            levels=levels,
            labels=labels,
            report=report,
            mu_prime=float(mu_prime),
            power=float(np.mean(power)),
            interference=float(np.mean(g0 * power)),
            capacity=self._capacity(g1, levels, labels),
        )

    def _codebook(self, band, g0, g1, lam, mu_prime, L):
        raise NotImplementedError

    def _power(self, levels, labels):
        return levels[labels]

    def _capacity(self, g1, levels, labels):
        return band_capacity(g1, levels, labels)

    def reset(self):
        self._warm.clear()


class GlaDesigner(BandDesigner):
    """Modified GLA on the band's training samples, warm-started between calls"""

    method = METHOD_GLA

    def _codebook(self, band, g0, g1, lam, mu_prime, L):
        init = self._warm.get(band)
        if self.settings.gla_restarts > 1:
            codebook, partition, report = run_gla_restarts(
                g0, g1, L, lam, mu_prime, restarts=self.settings.gla_restarts, seed=band, init=init,
                settings=self.settings,
            )
        else:
            codebook, partition, report = run_gla(g0, g1, L, lam, mu_prime, init=init, settings=self.settings)
        return codebook.levels, partition.labels, report


class Gla2Designer(BandDesigner):
    """GLA-2 under a binary symmetric feedback channel; constraints are rho-weighted"""

    method = METHOD_GLA2

    def __init__(self, channel: FeedbackChannel, settings: Optional[SolverSettings] = None):
        super().__init__(settings)
        self.channel = channel

    def _codebook(self, band, g0, g1, lam, mu_prime, L):
        codebook, partition, report = run_gla2(
            g0, g1, L, self.channel, lam, mu_prime, init=self._warm.get(band), settings=self.settings
        )
        return codebook.levels, partition.labels, report

    def _power(self, levels, labels):
        return received_power(levels, labels, self.channel)

    def _capacity(self, g1, levels, labels):
        return received_capacity(g1, levels, labels, self.channel)


class AqpaDesigner(BandDesigner):
    """AQPA from the fading distributions; constraints evaluated on the training samples"""

    method = METHOD_AQPA

    def __init__(self, models: ChannelModels, settings: Optional[SolverSettings] = None):
        super().__init__(settings)
        self.models = models

    def _codebook(self, band, g0, g1, lam, mu_prime, L):
        codebook = aqpa_codebook(lam, mu_prime, L, self.models.band(band), self.settings)
        partition = nnc_assign(g0, g1, codebook, lam, mu_prime)
        report = GlaReport(iterations=1, lagrangian_trace=[], converged=True)
        report.capacity = band_capacity(g1, codebook.levels, partition.labels)
        return codebook.levels, partition.labels, report


def make_designer(
    method: str,
    training: TrainingSet,
    settings: Optional[SolverSettings] = None,
    channel: Optional[FeedbackChannel] = None,
) -> BandDesigner:
    """Designer for a method name ("gla", "aqpa" or "gla2")"""
    if method == METHOD_GLA:
        return GlaDesigner(settings)
    if method == METHOD_AQPA:
        return AqpaDesigner(training.models, settings)
    if method == METHOD_GLA2:
        if channel is None:
            raise ConfigurationError("gla2 needs a feedback channel", field="q_f")
        return Gla2Designer(channel, settings)
    raise ConfigurationError(f"Unknown quantized method '{method}'", field="method")


# ==================== Multiplier search ====================

def _bisect_multiplier(
    evaluate: Callable[[float], Tuple[float, BandDesign]],
    target: float,
    guess: Optional[float],
    settings: SolverSettings,
    name: str,
) -> Tuple[float, object, bool]:
    """
    Bisection in log space on a multiplier x for a non-increasing value(x) = target

    Returns (x, outcome at x, converged) where x is the feasible end of the
    final bracket (value <= target).
    """
    low, high = bracket_around(guess, (settings.bracket_low, settings.bracket_high))
    v_low, _ = evaluate(low)
    steps = 0
    while v_low <= target:
        if steps >= MAX_BRACKET_STEPS:
            logger.warning(f"{name}: constraint holds down to {low:.3g}, returning the smallest multiplier")
            _, outcome = evaluate(low)
            return low, outcome, True
        high, low = low, low / BRACKET_STEP
        v_low, _ = evaluate(low)
        steps += 1

    v_high, best = evaluate(high)
    steps = 0
    while v_high > target * (1.0 + settings.tol_feas):
        if steps >= MAX_BRACKET_STEPS:
            raise InfeasibleConstraintError(
                f"Cannot bracket {name}: value {v_high:.6g} at {high:.3g} stays above {target:.6g}"
            )
        low, v_low = high, v_high
        high *= BRACKET_STEP
        v_high, best = evaluate(high)
        steps += 1

    for _ in range(MAX_INNER_STEPS):
        if abs(v_high - target) <= settings.tol_feas * target and high / low - 1.0 < MULTIPLIER_RTOL:
            return high, best, True
        if high / low - 1.0 < 1e-12:
            break
        middle = geometric_midpoint(low, high)
        v_mid, outcome = evaluate(middle)
        if v_mid > v_low * (1.0 + 1e-9) + 1e-15:
            logger.warning(f"{name}: constraint value grew with the multiplier ({v_low:.6g} -> {v_mid:.6g})")
        if v_mid > target:
            low, v_low = middle, v_mid
        else:
            high, v_high, best = middle, v_mid, outcome
        if abs(v_high - target) <= settings.tol_feas * target and high / low - 1.0 < MULTIPLIER_RTOL:
            return high, best, True
    logger.warning(f"{name}: stopped at {high:.6g} with value {v_high:.6g} (target {target:.6g})")
    return high, best, False


def _band_at_lambda(
    designer: BandDesigner,
    training: TrainingSet,
    constraints: ConstraintSet,
    band: int,
    lam: float,
    L: int,
    guess: Optional[float],
    settings: SolverSettings,
) -> Tuple[BandDesign, bool]:
    """Band design at fixed lambda with mu'_i = 0 when the cap already holds"""
    g0, g1 = training.band(band)
    cap = constraints.Q_avg[band]
    if lam > 0:
        design = designer.design(band, g0, g1, lam, 0.0, L)
        if constraints.is_unconstrained(band) or design.interference <= cap * (1.0 + settings.tol_feas):
            return design, True
    elif constraints.is_unconstrained(band):
        raise ConfigurationError("An unconstrained band needs lambda > 0", field="Q_avg")

    def evaluate(mu_prime):
        outcome = designer.design(band, g0, g1, lam, mu_prime, L)
        return outcome.interference, outcome

    _, design, converged = _bisect_multiplier(evaluate, cap, guess, settings, f"band {band} interference multiplier")
    return design, converged


def _all_bands(designer, training, constraints, lam, L, guesses, settings) -> Tuple[List[BandDesign], bool]:
    designs, converged = [], True
    for band in range(training.M):
        design, ok = _band_at_lambda(designer, training, constraints, band, lam, L, guesses[band], settings)
        designs.append(design)
        converged &= ok
    return designs, converged


def _average_power(designs: List[BandDesign]) -> float:
    return float(np.mean([d.power for d in designs]))


def _solution(
    designer: BandDesigner,
    training: TrainingSet,
    constraints: ConstraintSet,
    lam: float,
    designs: List[BandDesign],
    converged: bool,
    outer_iterations: int,
    diagnostics: List[str],
    settings: SolverSettings,
) -> QuantizedSolution:
    duals = DualVariables.from_effective(lam, [d.mu_prime for d in designs])
    solution = QuantizedSolution(
        method=designer.method,
        codebooks=np.vstack([d.levels for d in designs]),
        duals=duals,
        labels=np.column_stack([d.labels for d in designs]),
        atp=_average_power(designs),
        aip=np.array([d.interference for d in designs]),
        capacity=float(np.mean([d.capacity for d in designs])),
        converged=converged,
        outer_iterations=outer_iterations,
        band_reports=[d.report for d in designs],
        diagnostics=diagnostics,
        channel=designer.channel,
    )
    slack = duals.lam * (constraints.P_avg - solution.atp)
    if abs(slack) > settings.tol_cs * max(1.0, constraints.P_avg):
        diagnostics.append(f"power slackness residual {slack:.3g}")
    return solution


def algorithm1_wideband(
    constraints: ConstraintSet,
    training: TrainingSet,
    L: int,
    designer: Optional[BandDesigner] = None,
    settings: Optional[SolverSettings] = None,
) -> QuantizedSolution:
    """
    Quantized power codebooks for M bands by dual decomposition

    Args:
        constraints: P_avg and per-band Q_avg (linear)
        training: N x M training samples
        L (int): Levels per band codebook
        designer: Per-band codebook designer (default: modified GLA)
        settings: Solver tolerances and budgets

    Returns:
        QuantizedSolution: Feasible codebooks; converged=False with a diagnostic
        when the outer search runs out of iterations
    """
    settings = settings or SolverSettings()
    designer = designer or GlaDesigner(settings)
    designer.reset()
    if constraints.M != training.M:
        raise ConfigurationError(
            f"Constraints cover {constraints.M} bands, training set has {training.M}", field="Q_avg"
        )
    if L < 1:
        raise ConfigurationError(f"L must be >= 1, got {L}", field="L")

    full = allocate_full_csi(constraints, training, settings)
    mu_guess = [m if m > 0 else None for m in full.duals.mu_prime]
    logger.info(f"{designer.method}: L={L}, M={training.M}, full-CSI lambda={full.duals.lam:.6g}")

    if not any(constraints.is_unconstrained(i) for i in range(constraints.M)):
        designs, converged = _all_bands(designer, training, constraints, 0.0, L, mu_guess, settings)
        atp = _average_power(designs)
        if atp <= constraints.P_avg * (1.0 + settings.tol_feas):
            logger.info(f"{designer.method}: power constraint inactive (ATP={atp:.6g})")
            return _solution(designer, training, constraints, 0.0, designs, converged, 1, [], settings)
        logger.debug(f"{designer.method}: lambda=0 needs ATP={atp:.6g} > {constraints.P_avg:.6g}")

    diagnostics: List[str] = []
    lam_guess = full.duals.lam if full.duals.lam > 0 else None
    low, high = bracket_around(lam_guess, (settings.bracket_low, settings.bracket_high))
    cache: Dict[float, Tuple[List[BandDesign], bool]] = {}

    def evaluate(lam):
        if lam not in cache:
            cache[lam] = _all_bands(designer, training, constraints, lam, L, mu_guess, settings)
        return cache[lam]

    iterations = 0
    while _average_power(evaluate(low)[0]) <= constraints.P_avg:
        iterations += 1
        if iterations > MAX_BRACKET_STEPS:
            raise InfeasibleConstraintError("Cannot bracket the power multiplier from below")
        high, low = low, low / BRACKET_STEP
    while _average_power(evaluate(high)[0]) > constraints.P_avg * (1.0 + settings.tol_feas):
        iterations += 1
        if iterations > MAX_BRACKET_STEPS:
            raise InfeasibleConstraintError("Cannot bracket the power multiplier from above")
        low, high = high, high * BRACKET_STEP

    def active(designs):
        return tuple(d.mu_prime > 0 for d in designs)

    previous_lam, previous_set, flips = high, active(evaluate(high)[0]), 0
    converged = False
    outer = 0
    for outer in range(1, settings.max_outer + 1):
        atp_high = _average_power(evaluate(high)[0])
        if abs(atp_high - constraints.P_avg) <= settings.tol_feas * constraints.P_avg and high / low - 1.0 < MULTIPLIER_RTOL:
            converged = evaluate(high)[1]
            break
        if high / low - 1.0 < 1e-12:
            diagnostics.append(f"power multiplier bracket collapsed with ATP={atp_high:.6g}")
            break
        lam = geometric_midpoint(low, high)
        if flips >= 2:
            lam = 0.5 * (previous_lam + lam)
        designs, _ = evaluate(lam)
        current_set = active(designs)
        if current_set != previous_set:
            flips += 1
        previous_lam, previous_set = lam, current_set
        atp = _average_power(designs)
        logger.debug(f"{designer.method} outer {outer}: lambda={lam:.8g}, ATP={atp:.8g}")
        if atp > constraints.P_avg:
            low = lam
        else:
            high = lam
    else:
        diagnostics.append(f"outer multiplier search stopped after {settings.max_outer} iterations")

    if not converged:
        logger.warning(f"{designer.method}: returning best feasible point ({'; '.join(diagnostics) or 'inner search'})")
    designs, _ = evaluate(high)
    solution = _solution(designer, training, constraints, high, designs, converged, outer, diagnostics, settings)
    logger.info(
        f"{designer.method}: lambda={high:.6g}, mu={np.array2string(solution.duals.mu, precision=6)}, "
        f"capacity={solution.capacity:.6g}"
    )
    return solution


def solve_narrowband(
    constraints: ConstraintSet,
    training: TrainingSet,
    L: int,
    designer: Optional[BandDesigner] = None,
    settings: Optional[SolverSettings] = None,
) -> QuantizedSolution:
    """Single-band quantized allocation (the M = 1 case of algorithm1_wideband)"""
    if training.M != 1:
        raise ConfigurationError(f"Narrowband solve needs M=1, got M={training.M}", field="M")
    return algorithm1_wideband(constraints, training, L, designer, settings)


def constraint_violations(
    atp: float, aip: np.ndarray, constraints: ConstraintSet, settings: SolverSettings
) -> List[str]:
    """Averages above their budget by more than tol_feas"""
    violations = []
    if atp > constraints.P_avg * (1.0 + settings.tol_feas):
        violations.append(f"ATP={atp:.6g} exceeds P_avg={constraints.P_avg:.6g}")
    for band, cap in enumerate(constraints.Q_avg):
        if not constraints.is_unconstrained(band) and aip[band] > cap * (1.0 + settings.tol_feas):
            violations.append(f"AIP_{band + 1}={aip[band]:.6g} exceeds Q_avg={cap:.6g}")
    return violations


def apply_index_search(
    solution: QuantizedSolution,
    training: TrainingSet,
    constraints: ConstraintSet,
    settings: Optional[SolverSettings] = None,
) -> QuantizedSolution:
    """
    Reorder each band's codebook by the exhaustive index search and refresh the
    rho-weighted averages

    The multipliers are kept. When a non-identity ordering pushes an average
    over its budget the search result is dropped and a diagnostic recorded.
    """
    settings = settings or SolverSettings()
    channel = solution.channel
    if channel is None:
        raise ConfigurationError("Index search needs a feedback channel", field="q_f")
    mu_prime = solution.duals.mu_prime
    codebooks = solution.codebooks.copy()
    labels = solution.labels.copy()
    identity = list(range(solution.L))
    permutations, powers, capacities = [], [], []
    for band in range(solution.M):
        g0, g1 = training.band(band)
        perm = exhaustive_index_search(codebooks[band], channel, g0, g1, solution.duals.lam, mu_prime[band])
        codebooks[band] = channel.apply_permutation(codebooks[band], perm)
        labels[:, band] = gla2_assign(g0, g1, codebooks[band], channel, solution.duals.lam, mu_prime[band]).labels
        powers.append(received_power(codebooks[band], labels[:, band], channel))
        capacities.append(received_capacity(g1, codebooks[band], labels[:, band], channel))
        permutations.append(list(perm))
    if all(perm == identity for perm in permutations):
        solution.permutation = permutations
        return solution

    expected = np.column_stack(powers)
    atp = float(np.mean(expected))
    aip = np.mean(training.g0 * expected, axis=0)
    violations = constraint_violations(atp, aip, constraints, settings)
    if violations:
        logger.warning(f"Index search ordering {permutations} dropped: {'; '.join(violations)}")
        solution.diagnostics.append(f"index search ordering dropped ({'; '.join(violations)})")
        solution.permutation = [identity[:] for _ in range(solution.M)]
        return solution

    solution.codebooks = codebooks
    solution.labels = labels
    solution.atp = atp
    solution.aip = aip
    solution.capacity = float(np.mean(capacities))
    solution.permutation = permutations
    return solution


def solve_quantized(
    method: str,
    constraints: ConstraintSet,
    training: TrainingSet,
    L: int,
    settings: Optional[SolverSettings] = None,
    channel: Optional[FeedbackChannel] = None,
    index_search: bool = False,
) -> QuantizedSolution:
    """Run the outer search with the designer for `method`"""
    designer = make_designer(method, training, settings, channel)
    solution = algorithm1_wideband(constraints, training, L, designer, settings)
    if index_search and method == METHOD_GLA2:
        solution = apply_index_search(solution, training, constraints, settings)
    return solution
