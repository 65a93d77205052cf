"""
Monte Carlo estimators of ergodic capacity and constraint satisfaction

A power rule maps channel samples to candidate powers with probabilities:
outcomes(training) returns two N x M x K arrays (powers, weights) where the
weights of each (sample, band) sum to one. Noise-free rules use K = 1 or a
one-hot weight; noisy-feedback rules spread the weight over decoded indices.
"""

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from .exceptions import ConfigurationError
from .fading import TrainingSet
from .full_csi import power_point
from .lloyd import score_matrix
from .models import CapacityEstimate, ConstraintEstimate, DualVariables, FeedbackChannel, QuantizedSolution
from .noisy_feedback import expected_scores

logger = logging.getLogger(__name__)


class PowerRule:
    """Base class for the allocation rules evaluated here"""

    M: Optional[int] = None

    def outcomes(self, training: TrainingSet) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _check(self, training: TrainingSet):
        if self.M is not None and self.M != training.M:
            raise ConfigurationError(
                f"Power rule covers {self.M} bands, evaluation set has {training.M}", field="M"
            )


class ConstantPowerRule(PowerRule):
    """Same power on every band and every sample"""

    def __init__(self, power: float, M: Optional[int] = None):
        if not power >= 0:
            raise ConfigurationError(f"Power must be >= 0, got {power}", field="power")
        self.power = float(power)
        self.M = M

    def outcomes(self, training):
        self._check(training)
        powers = np.full(training.g1.shape + (1,), self.power)
        return powers, np.ones_like(powers)


class FullCsiRule(PowerRule):
    """Perfect-CSI water-filling with fixed multipliers"""

    def __init__(self, duals: DualVariables):
        self.duals = duals
        self.M = duals.M

    def outcomes(self, training):
        self._check(training)
        powers = np.empty(training.g1.shape)
        mu_prime = self.duals.mu_prime
        for i in range(training.M):
            g0, g1 = training.band(i)
            powers[:, i] = power_point(g0, g1, self.duals.lam, mu_prime[i])
        return powers[:, :, None], np.ones(powers.shape + (1,))


class QuantizedRule(PowerRule):
    """
    Per-band codebooks indexed by the receiver's feedback

    Unseen samples are labelled with the recorded multipliers (nearest
    neighbour, or the rho-weighted rule when a noisy channel is given); the
    decoded index is then marginalized through rho.
    """

    def __init__(self, codebooks, duals: DualVariables, channel: Optional[FeedbackChannel] = None):
        self.codebooks = np.atleast_2d(np.asarray(codebooks, dtype=float))
        if self.codebooks.shape[0] != duals.M:
            raise ConfigurationError(
                f"{self.codebooks.shape[0]} codebooks for {duals.M} multipliers", field="levels"
            )
        if channel is not None and channel.L != self.codebooks.shape[1]:
            raise ConfigurationError(f"Channel carries {channel.L} indices, codebooks have {self.codebooks.shape[1]}", field="B")
        self.duals = duals
        self.channel = channel
        self.M = duals.M

    @classmethod
    def from_solution(cls, solution: QuantizedSolution) -> "QuantizedRule":
        return cls(solution.codebooks, solution.duals, solution.channel)

    @property
    def L(self) -> int:
        return int(self.codebooks.shape[1])

    def labels(self, training: TrainingSet) -> np.ndarray:
        """N x M index sent for every sample"""
        self._check(training)
        labels = np.empty(training.g1.shape, dtype=np.intp)
        mu_prime = self.duals.mu_prime
        for i in range(training.M):
            g0, g1 = training.band(i)
            if self.channel is None:
                scores = score_matrix(g0, g1, self.codebooks[i], self.duals.lam, mu_prime[i])
            else:
                scores = expected_scores(g0, g1, self.codebooks[i], self.channel, self.duals.lam, mu_prime[i])
            labels[:, i] = np.argmax(scores, axis=1)
        return labels

    def outcomes(self, training):
        labels = self.labels(training)
        powers = np.broadcast_to(self.codebooks[None, :, :], training.g1.shape + (self.L,))
        if self.channel is None:
            weights = np.zeros(powers.shape)
            np.put_along_axis(weights, labels[:, :, None], 1.0, axis=2)
        else:
            # weights[n, i, k] = rho[k, label]
            weights = self.channel.rho.T[labels]
        return powers, weights


def estimate_capacity(training: TrainingSet, rule: PowerRule) -> CapacityEstimate:
    """
    Ergodic capacity (1/M) sum_i E[log(1 + g1_i p_i)] in nats per channel use

    Args:
        training: Evaluation samples
        rule: Power rule applied to every sample

    Returns:
        CapacityEstimate: Mean, standard error (std / sqrt(N)) and N
    """
    if training.N < 1:
        raise ConfigurationError("Evaluation set is empty", field="N_eval")
    powers, weights = rule.outcomes(training)
    rates = np.sum(weights * np.log1p(training.g1[:, :, None] * powers), axis=2)
    per_sample = np.mean(rates, axis=1)
    value = float(np.mean(per_sample))
    std_error = float(np.std(per_sample, ddof=1) / math.sqrt(training.N)) if training.N > 1 else 0.0
    return CapacityEstimate(value=value, std_error=std_error, n_samples=training.N)


def estimate_constraints(training: TrainingSet, rule: PowerRule) -> ConstraintEstimate:
    """Average transmit power (mean over bands) and average interference per band"""
    if training.N < 1:
        raise ConfigurationError("Evaluation set is empty", field="N_eval")
    powers, weights = rule.outcomes(training)
    expected = np.sum(weights * powers, axis=2)
    return ConstraintEstimate(
        atp=float(np.mean(expected)),
        aip=np.mean(training.g0 * expected, axis=0),
    )


def capacity_loss_pct(
    reference: Union[CapacityEstimate, float],
    candidate: Union[CapacityEstimate, float],
) -> float:
    """100 * (reference - candidate) / reference"""
    ref = reference.value if isinstance(reference, CapacityEstimate) else float(reference)
    cand = candidate.value if isinstance(candidate, CapacityEstimate) else float(candidate)
    if not ref > 0:
        raise ConfigurationError(f"Capacity loss is undefined for reference capacity {ref}", field="reference")
    return 100.0 * (ref - cand) / ref
