"""
Codebook design when the feedback index crosses a binary symmetric channel

Index k is sent as its natural binary label over B independent BSC uses;
rho[k, j] is the probability that index k is decoded when j was sent.
"""

import itertools
import logging
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError, EmptyRegionError, UnsupportedOperationError
from .helpers import validate_count, validate_probability
from .lloyd import _levels_of, _lloyd_loop, band_capacity, initial_codebook, score_matrix, solve_centroid
from .models import FeedbackChannel, GlaReport, Partition, PowerCodebook, SolverSettings

logger = logging.getLogger(__name__)

MAX_SEARCH_BITS = 3
# Relative margin a permutation must beat the incumbent by
SEARCH_MARGIN = 1e-12


def hamming_distance(a: int, b: int) -> int:
    """Number of differing bits between two indices"""
    return bin(int(a) ^ int(b)).count("1")


def transition_matrix(B: int, q_f: float) -> FeedbackChannel:
    """
    Index transition probabilities of B independent BSC uses

    Args:
        B (int): Feedback bits (L = 2^B)
        q_f (float): Per-bit crossover probability in [0, 0.5]

    Returns:
        FeedbackChannel: rho[k, j] = q_f^d (1 - q_f)^(B - d), d = Hamming distance of k and j
    """
    B = validate_count(B, "B")
    q_f = validate_probability(q_f, "q_f", upper=0.5)
    L = 2**B
    indices = np.arange(L)
    distance = np.array([[hamming_distance(k, j) for j in indices] for k in indices])
    rho = np.power(q_f, distance) * np.power(1.0 - q_f, B - distance)
    rho.setflags(write=False)
    return FeedbackChannel(B=B, q_f=q_f, rho=rho)


def _check_channel(levels: np.ndarray, channel: FeedbackChannel):
    if levels.size != channel.L:
        raise ConfigurationError(
            f"Codebook has {levels.size} levels but the feedback channel carries {channel.L} indices", field="B"
        )


def expected_scores(g0: np.ndarray, g1: np.ndarray, levels: np.ndarray, channel: FeedbackChannel, lam: float, mu: float) -> np.ndarray:
    """N x L matrix of sum_k score(p_k) rho[k, j]: the expected score of sending index j"""
    scores = score_matrix(g0, g1, levels, lam, mu)
    if channel.is_noiseless:
        return scores
    return scores @ channel.rho


def gla2_assign(g0: np.ndarray, g1: np.ndarray, codebook, channel: FeedbackChannel, lam: float, mu: float) -> Partition:
    """Label each sample with the index of highest expected score (ties to the lowest index)"""
    levels = _levels_of(codebook)
    _check_channel(levels, channel)
    labels = np.argmax(expected_scores(g0, g1, levels, channel, lam, mu), axis=1)
    return Partition.from_labels(labels, levels.size)


def _centroid_weights(channel: FeedbackChannel, labels: np.ndarray, k: int) -> np.ndarray:
    return channel.rho[k, labels]


def _weighted_centroid(g0, g1, weights, lam, mu, tol_root) -> Optional[float]:
    """Centroid for sample weights; None when every weight is zero"""
    support = weights > 0
    if not np.any(support):
        return None
    nonzero = weights[support]
    if np.all(nonzero == nonzero[0]):
        return solve_centroid(g0[support], g1[support], lam, mu, None, tol_root)
    return solve_centroid(g0, g1, lam, mu, weights, tol_root)


def gla2_centroid(
    g0: np.ndarray,
    g1: np.ndarray,
    partition: Partition,
    channel: FeedbackChannel,
    k: int,
    lam: float,
    mu: float,
    tol_root: float = 1e-10,
) -> float:
    """
    Level of index k under noisy feedback: root of
    sum_j Pr(R_j) rho[k, j] E[g1/(1+g1 p) - (lam + mu g0) | R_j] = 0, clamped at 0

    Raises:
        EmptyRegionError: If no region with mass reaches index k
    """
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    power = _weighted_centroid(g0, g1, _centroid_weights(channel, partition.labels, k), lam, mu, tol_root)
    if power is None:
        raise EmptyRegionError(f"No occupied region is decoded as index {k}")
    return power


def weighted_lagrangian(g0, g1, labels: np.ndarray, levels: np.ndarray, channel: FeedbackChannel, lam: float, mu: float) -> float:
    """Empirical mean over samples of the expected score at the sent index"""
    scores = expected_scores(g0, g1, levels, channel, lam, mu)
    return float(np.mean(scores[np.arange(labels.size), labels]))


def received_power(levels: np.ndarray, labels: np.ndarray, channel: FeedbackChannel) -> np.ndarray:
    """Per-sample expected transmit power sum_k rho[k, label] p_k"""
    if channel.is_noiseless:
        return levels[labels]
    return (channel.rho.T @ levels)[labels]


def received_capacity(g1: np.ndarray, levels: np.ndarray, labels: np.ndarray, channel: FeedbackChannel) -> float:
    """Band capacity with the decoded index marginalized through rho"""
    if channel.is_noiseless:
        return band_capacity(g1, levels, labels)
    rates = np.log1p(g1[:, None] * levels[None, :]) @ channel.rho
    return float(np.mean(rates[np.arange(labels.size), labels]))


def run_gla2(
    g0: np.ndarray,
    g1: np.ndarray,
    L: int,
    channel: FeedbackChannel,
    lam: float,
    mu: float,
    init=None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[PowerCodebook, Partition, GlaReport]:
    """
    Noisy-feedback Lloyd run (GLA-2)

    Same alternation as run_gla with the rho-weighted assignment and centroid
    steps; with q_f = 0 it follows exactly the noise-free path.
    """
    settings = settings or SolverSettings()
    tol = settings.gla_tol if tol is None else tol
    max_iter = settings.gla_max_iter if max_iter is None else max_iter
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    if L != channel.L:
        raise ConfigurationError(f"L={L} does not match the {channel.B}-bit feedback channel", field="L")
    levels = initial_codebook(g0, g1, L, lam, mu).levels if init is None else _levels_of(init).copy()
    if levels.size != L:
        raise ConfigurationError(f"Initial codebook has {levels.size} levels, expected {L}", field="init")

    def assign(current):
        return np.argmax(expected_scores(g0, g1, current, channel, lam, mu), axis=1)

    def objective(current, labels):
        return weighted_lagrangian(g0, g1, labels, current, channel, lam, mu)

    def solve(region_g0, region_g1):
        return solve_centroid(region_g0, region_g1, lam, mu, None, settings.tol_root)

    def update(current, labels):
        new_levels = current.copy()
        starved = np.zeros(current.size, dtype=bool)
        for k in range(current.size):
            power = _weighted_centroid(
                g0, g1, _centroid_weights(channel, labels, k), lam, mu, settings.tol_root
            )
            if power is None:
                starved[k] = True
                continue
            new_levels[k] = power
        return new_levels, starved

    def starved_by(labels, size):
        used = np.bincount(labels, minlength=size) > 0
        return ~np.any(channel.rho[:, used] > 0, axis=1)

    levels, labels, report = _lloyd_loop(g0, g1, levels, assign, objective, update, solve, tol, max_iter, starved_by)
    report.capacity = received_capacity(g1, levels, labels, channel)
    if not report.converged:
        logger.warning(f"GLA-2 did not converge in {max_iter} iterations (q_f={channel.q_f}, lambda={lam:.4g})")
    return PowerCodebook(levels), Partition.from_labels(labels, L), report


def exhaustive_index_search(
    codebook,
    channel: FeedbackChannel,
    g0: np.ndarray,
    g1: np.ndarray,
    lam: float,
    mu: float,
) -> List[int]:
    """
    Best assignment of power levels to feedback indices

    Every permutation `perm` (index i carries level perm[i]) is scored by the
    rho-weighted Lagrangian after re-partitioning; the identity wins ties.

    Raises:
        UnsupportedOperationError: For more than 3 feedback bits
    """
    levels = _levels_of(codebook)
    _check_channel(levels, channel)
    if channel.B > MAX_SEARCH_BITS:
        raise UnsupportedOperationError(
            f"Exhaustive index search is limited to B <= {MAX_SEARCH_BITS} ({channel.B} bits requested)"
        )
    identity = list(range(levels.size))
    if channel.is_noiseless:
        return identity

    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    best, best_value = identity, None
    for perm in itertools.permutations(identity):
        arranged = levels[list(perm)]
        labels = np.argmax(expected_scores(g0, g1, arranged, channel, lam, mu), axis=1)
        value = weighted_lagrangian(g0, g1, labels, arranged, channel, lam, mu)
        if best_value is None or value > best_value + SEARCH_MARGIN * max(1.0, abs(best_value)):
            best, best_value = list(perm), value
    logger.info(f"Index search over {levels.size} levels picked permutation {best} (objective {best_value:.8g})")
    return best
