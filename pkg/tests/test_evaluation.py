"""
Tests for the Monte Carlo capacity and constraint estimators
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from quantpower import (
    CapacityEstimate,
    ConfigurationError,
    ConstantPowerRule,
    ConstraintSet,
    DualVariables,
    FullCsiRule,
    QuantizedRule,
    SolverSettings,
    TrainingSet,
    allocate_full_csi,
    capacity_loss_pct,
    estimate_capacity,
    estimate_constraints,
    sample_training_set,
    solve_quantized,
    transition_matrix,
)


class TestConstantPower:
    def test_zero_power(self):
        training = sample_training_set(None, 2, 100, 0)
        estimate = estimate_capacity(training, ConstantPowerRule(0.0))
        assert estimate.value == 0.0
        assert estimate.std_error == 0.0
        constraints = estimate_constraints(training, ConstantPowerRule(0.0))
        assert constraints.atp == 0.0
        np.testing.assert_array_equal(constraints.aip, [0.0, 0.0])

    def test_single_sample_capacity(self):
        training = TrainingSet.from_arrays([1.0], [1.0])
        estimate = estimate_capacity(training, ConstantPowerRule(math.e - 1.0))
        assert estimate.value == pytest.approx(1.0)
        assert estimate.n_samples == 1

    def test_single_sample_interference(self):
        training = TrainingSet.from_arrays([2.0], [1.0])
        constraints = estimate_constraints(training, ConstantPowerRule(0.5))
        assert constraints.atp == pytest.approx(0.5)
        np.testing.assert_allclose(constraints.aip, [1.0])

    def test_matches_quadrature(self):
        training = sample_training_set(None, 1, 200000, 4)
        estimate = estimate_capacity(training, ConstantPowerRule(1.0))
        expected, _ = quad(lambda g: math.log1p(g) * math.exp(-g), 0.0, math.inf)
        assert abs(estimate.value - expected) < 4 * estimate.std_error

    def test_standard_error_shrinks_with_samples(self):
        small = estimate_capacity(sample_training_set(None, 1, 20000, 6), ConstantPowerRule(1.0))
        large = estimate_capacity(sample_training_set(None, 1, 40000, 6), ConstantPowerRule(1.0))
        assert large.std_error / small.std_error == pytest.approx(1 / math.sqrt(2), rel=0.2)

    def test_negative_power(self):
        with pytest.raises(ConfigurationError):
            ConstantPowerRule(-1.0)

    def test_bits_conversion(self):
        estimate = CapacityEstimate(value=math.log(2.0), std_error=0.0, n_samples=1).in_bits()
        assert estimate.value == pytest.approx(1.0)


class TestRulesOnTraining:
    def test_full_csi_rule_reproduces_allocation(self):
        training = sample_training_set(None, 2, 3000, 8)
        solution = allocate_full_csi(ConstraintSet(3.0, (0.2, 0.5)), training)
        estimate = estimate_capacity(training, FullCsiRule(solution.duals))
        assert estimate.value == pytest.approx(solution.capacity, rel=1e-12)
        constraints = estimate_constraints(training, FullCsiRule(solution.duals))
        assert constraints.atp == pytest.approx(solution.atp, rel=1e-12)

    def test_quantized_rule_reproduces_training_capacity(self, rayleigh_small):
        settings = SolverSettings(tol_feas=1e-2)
        solution = solve_quantized("gla", ConstraintSet(10.0, (0.316228,)), rayleigh_small, 4, settings)
        rule = QuantizedRule.from_solution(solution)
        np.testing.assert_array_equal(rule.labels(rayleigh_small), solution.labels)
        assert estimate_capacity(rayleigh_small, rule).value == pytest.approx(solution.capacity, rel=1e-12)

    def test_noisy_rule_weights_are_distributions(self, rayleigh_small):
        duals = DualVariables(lam=0.2, mu=[0.1])
        rule = QuantizedRule([[3.0, 1.5, 0.5, 0.0]], duals, transition_matrix(2, 0.1))
        _, weights = rule.outcomes(rayleigh_small)
        np.testing.assert_allclose(weights.sum(axis=2), 1.0)

    def test_noiseless_channel_matches_plain_rule(self, rayleigh_small):
        duals = DualVariables(lam=0.2, mu=[0.1])
        levels = [[3.0, 1.5, 0.5, 0.0]]
        plain = estimate_capacity(rayleigh_small, QuantizedRule(levels, duals))
        clean = estimate_capacity(rayleigh_small, QuantizedRule(levels, duals, transition_matrix(2, 0.0)))
        assert clean.value == pytest.approx(plain.value, rel=1e-12)

    def test_band_count_mismatch(self, rayleigh_small):
        with pytest.raises(ConfigurationError):
            estimate_capacity(rayleigh_small, FullCsiRule(DualVariables(lam=0.1, mu=[0.1, 0.1])))
        with pytest.raises(ConfigurationError):
            QuantizedRule([[1.0, 0.0]], DualVariables(lam=0.1, mu=[0.1, 0.1]))


class TestCapacityLoss:
    def test_percentage(self):
        assert capacity_loss_pct(2.0, 1.5) == pytest.approx(25.0)
        reference = CapacityEstimate(value=2.0, std_error=0.0, n_samples=1)
        candidate = CapacityEstimate(value=1.5, std_error=0.0, n_samples=1)
        assert capacity_loss_pct(reference, candidate) == pytest.approx(25.0)

    def test_zero_reference(self):
        with pytest.raises(ConfigurationError):
            capacity_loss_pct(0.0, 1.0)
