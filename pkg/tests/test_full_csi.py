"""
Tests for the perfect-CSI allocation
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings as hyp_settings
from hypothesis import strategies as st

from quantpower import (
    ConstraintSet,
    UndefinedWaterlevelError,
    aip_only_power_threshold,
    allocate_full_csi,
    power_point,
    sample_training_set,
    solve_interference_multiplier,
    solve_power_multiplier,
)
from quantpower.full_csi import slackness_residuals
from quantpower.models import CASE_AIP_ONLY, CASE_ATP_ONLY, CASE_BOTH


class TestPowerPoint:
    def test_examples(self):
        assert power_point(1.0, 2.0, 0.5, 0.5) == pytest.approx(0.5)
        assert power_point(1.0, 0.5, 1.0, 1.0) == 0.0
        assert power_point(3.0, 4.0, 1.0, 0.0) == pytest.approx(0.75)

    def test_zero_gain_gives_zero_power(self):
        assert power_point(1.0, 0.0, 1.0, 0.0) == 0.0

    def test_undefined_water_level(self):
        with pytest.raises(UndefinedWaterlevelError):
            power_point(1.0, 1.0, 0.0, 0.0)
        with pytest.raises(UndefinedWaterlevelError):
            power_point(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 0.0, 1.0)

    def test_vectorised(self):
        powers = power_point(np.array([1.0, 1.0]), np.array([2.0, 0.5]), 0.5, 0.5)
        np.testing.assert_allclose(powers, [0.5, 0.0])

    @hyp_settings(max_examples=200, deadline=None)
    @given(
        g0=st.floats(0.0, 10.0),
        g1=st.floats(0.0, 10.0),
        lam=st.floats(0.01, 5.0),
        mu=st.floats(0.0, 5.0),
    )
    def test_positive_exactly_above_threshold(self, g0, g1, lam, mu):
        level = lam + mu * g0
        assume(abs(g1 - level) > 1e-9)
        power = power_point(g0, g1, lam, mu)
        assert power >= 0
        assert (power > 0) == (g1 > level)


class TestInterferenceMultiplier:
    def test_single_sample_examples(self):
        assert solve_interference_multiplier([1.0], [10.0], 0.9, 0.0) == pytest.approx(1.0, rel=1e-8)
        assert solve_interference_multiplier([2.0], [4.0], 0.5, 0.0) == pytest.approx(1.0, rel=1e-8)

    def test_met_cap_gives_zero(self):
        # lam = 1: p = 1 - 1/10 and g0*p = 0.9 already below the cap
        assert solve_interference_multiplier([1.0], [10.0], 5.0, 1.0) == 0.0

    def test_equality_is_reached(self, rayleigh_band):
        g0, g1 = rayleigh_band
        mu = solve_interference_multiplier(g0, g1, 0.3, 0.2)
        achieved = np.mean(g0 * power_point(g0, g1, 0.2, mu))
        assert achieved == pytest.approx(0.3, rel=1e-6)


class TestAllocateFullCsi:
    def test_power_only_regime(self):
        training = sample_training_set(None, 1, 20000, 1)
        solution = allocate_full_csi(ConstraintSet(0.1, (1.0,)), training)
        assert solution.duals.mu[0] == 0.0
        assert solution.cases == [CASE_ATP_ONLY]
        assert solution.atp == pytest.approx(0.1, rel=1e-6)
        assert solution.aip[0] <= 1.0

    def test_interference_only_regime(self):
        training = sample_training_set(None, 1, 20000, 1)
        solution = allocate_full_csi(ConstraintSet(1e6, (1.0,)), training)
        assert solution.duals.lam == 0.0
        assert solution.cases == [CASE_AIP_ONLY]
        assert solution.aip[0] == pytest.approx(1.0, rel=1e-4)
        assert solution.atp <= 1e6

    def test_unconstrained_band_never_gets_a_multiplier(self):
        training = sample_training_set(None, 2, 5000, 4)
        solution = allocate_full_csi(ConstraintSet(10.0, (0.1, math.inf)), training)
        assert solution.duals.lam > 0
        assert solution.duals.mu[1] == 0.0
        assert solution.cases[0] == CASE_BOTH
        assert solution.atp == pytest.approx(10.0, rel=1e-6)

    def test_symmetric_bands_share_power(self):
        # a budget below every cap leaves a single water level shared by all bands
        training = sample_training_set(None, 4, 200000, 7)
        solution = allocate_full_csi(ConstraintSet(0.5, (10.0,) * 4), training)
        assert solution.duals.lam > 0
        assert np.all(solution.duals.mu == 0)
        per_band = solution.powers.mean(axis=0)
        assert np.ptp(per_band) / per_band.mean() < 0.02

    def test_complementary_slackness(self):
        training = sample_training_set(None, 2, 10000, 2)
        constraints = ConstraintSet(3.0, (0.2, 0.5))
        solution = allocate_full_csi(constraints, training)
        power_residual, interference_residual = slackness_residuals(
            solution.duals, constraints, solution.atp, solution.aip
        )
        assert abs(power_residual) < 1e-3
        assert np.all(np.abs(interference_residual) < 1e-3)
        assert solution.atp <= constraints.P_avg * (1 + 1e-4)
        assert np.all(solution.aip <= np.asarray(constraints.Q_avg) * (1 + 1e-4))

    def test_capacity_grows_with_power_budget(self):
        training = sample_training_set(None, 1, 10000, 3)
        capacities = [
            allocate_full_csi(ConstraintSet(P, (0.316228,)), training).capacity for P in (1.0, 3.0, 10.0)
        ]
        assert capacities == sorted(capacities)

    def test_budget_above_threshold_deactivates_power_constraint(self):
        training = sample_training_set(None, 2, 5000, 8)
        constraints = ConstraintSet(1.0, (0.1, 0.3))
        threshold = aip_only_power_threshold(constraints, training)
        assert math.isfinite(threshold)
        generous = allocate_full_csi(ConstraintSet(threshold * 1.5, constraints.Q_avg), training)
        assert generous.duals.lam == 0.0
        tight = allocate_full_csi(ConstraintSet(threshold * 0.5, constraints.Q_avg), training)
        assert tight.duals.lam > 0
        assert tight.capacity < generous.capacity

    def test_threshold_is_infinite_with_an_unconstrained_band(self):
        training = sample_training_set(None, 2, 100, 8)
        assert aip_only_power_threshold(ConstraintSet(1.0, (0.1, math.inf)), training) == math.inf


class TestPowerMultiplier:
    def test_unconstrained_band_meets_the_budget(self):
        training = sample_training_set(None, 1, 5000, 5)
        lam = solve_power_multiplier(ConstraintSet(0.5, (math.inf,)), training)
        g0, g1 = training.band(0)
        assert np.mean(power_point(g0, g1, lam, 0.0)) == pytest.approx(0.5, rel=1e-6)

    def test_matches_the_full_allocation(self):
        training = sample_training_set(None, 2, 5000, 2)
        constraints = ConstraintSet(3.0, (0.2, 0.5))
        lam = solve_power_multiplier(constraints, training)
        assert allocate_full_csi(constraints, training).duals.lam == pytest.approx(lam, rel=1e-12)
