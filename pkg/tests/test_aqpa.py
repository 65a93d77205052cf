"""
Tests for the distribution-based AQPA codebook construction
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from quantpower import (
    CodebookExhaustedError,
    ConfigurationError,
    FadingModel,
    QuadratureSpec,
    RootNotFoundError,
    SolverSettings,
    UnsupportedOperationError,
    aqpa_codebook,
    aqpa_recursive_step,
    aqpa_seed_level,
    region_residual,
    run_gla,
    sample_training_set,
)
from quantpower import aqpa
from quantpower.aqpa import gauss_integral
from quantpower.lloyd import score_matrix

RAYLEIGH = (FadingModel.exponential(1.0), FadingModel.exponential(1.0))


class TestGaussIntegral:
    def test_exponential_tail(self):
        value = gauss_integral(lambda x: np.exp(-x), [0.0, 1.0, 30.0], QuadratureSpec())
        assert value == pytest.approx(1.0 - math.exp(-30.0), abs=1e-12)

    def test_kink_inside_a_panel_is_refined(self):
        value = gauss_integral(lambda x: np.abs(x - 0.3), [0.0, 1.0], QuadratureSpec())
        assert value == pytest.approx(0.5 * (0.3**2 + 0.7**2), abs=1e-8)

    def test_empty_range(self):
        assert gauss_integral(np.exp, [2.0, 2.0], QuadratureSpec()) == 0.0


class TestRegionResidual:
    def test_top_region_without_interference(self):
        lower = math.exp(0.5) - 1.0
        expected, _ = quad(lambda g: (g / (1.0 + g) - 0.5) * math.exp(-g), lower, math.inf)
        assert region_residual(None, 1.0, 0.0, 0.5, 0.0, RAYLEIGH) == pytest.approx(expected, abs=1e-8)

    def test_middle_region_without_interference(self):
        lower = (math.exp(0.5 * 0.6) - 1.0) / (1.0 - 0.4 * math.exp(0.5 * 0.6))
        upper = (math.exp(0.5 * 0.4) - 1.0) / (1.4 - 1.0 * math.exp(0.5 * 0.4))
        expected, _ = quad(lambda g: (g / (1.0 + g) - 0.5) * math.exp(-g), lower, upper)
        assert region_residual(1.4, 1.0, 0.4, 0.5, 0.0, RAYLEIGH) == pytest.approx(expected, abs=1e-8)

    def test_matches_monte_carlo_with_interference(self):
        lam, mu = 0.3, 0.2
        levels = np.array([2.0, 1.0, 0.3])
        rng = np.random.default_rng(0)
        g0 = rng.exponential(1.0, 1_000_000)
        g1 = rng.exponential(1.0, 1_000_000)
        inside = np.argmax(score_matrix(g0, g1, levels, lam, mu), axis=1) == 1
        terms = np.where(inside, g1 / (1.0 + g1 * levels[1]) - (lam + mu * g0), 0.0)
        se = terms.std(ddof=1) / math.sqrt(terms.size)
        value = region_residual(2.0, 1.0, 0.3, lam, mu, RAYLEIGH)
        assert abs(value - terms.mean()) < 5 * se + 1e-6

    def test_tightening_quadrature_is_stable(self):
        spec = QuadratureSpec()
        loose = region_residual(2.0, 1.0, 0.3, 0.3, 0.2, RAYLEIGH, spec)
        tight = region_residual(2.0, 1.0, 0.3, 0.3, 0.2, RAYLEIGH, spec.tightened(100.0))
        assert abs(loose - tight) < 1e-8

    def test_deterministic_models_are_rejected(self):
        models = (FadingModel.deterministic([1.0]), FadingModel.deterministic([1.0]))
        with pytest.raises(UnsupportedOperationError):
            region_residual(None, 1.0, 0.0, 0.5, 0.0, models)


class TestRecursion:
    def test_step_balances_region(self):
        upper = aqpa_recursive_step(0.4, 0.0, 0.5, 0.1, RAYLEIGH)
        assert upper > 0.4
        assert abs(region_residual(upper, 0.4, 0.0, 0.5, 0.1, RAYLEIGH)) < 1e-8

    def test_exhausted_top_region(self):
        with pytest.raises(CodebookExhaustedError):
            aqpa_recursive_step(0.9, 0.0, 1.0, 0.0, RAYLEIGH)

    def test_levels_must_be_ordered(self):
        with pytest.raises(ConfigurationError):
            aqpa_recursive_step(0.2, 0.4, 0.5, 0.0, RAYLEIGH)

    def test_seed_level(self):
        seed = aqpa_seed_level(1.0, 0.0, RAYLEIGH, p_tail=0.1)
        assert seed > 0.1
        assert abs(region_residual(seed, 0.1, 0.0, 1.0, 0.0, RAYLEIGH)) < 1e-8

    def test_default_seed_stays_above_tail(self):
        assert aqpa_seed_level(1.0, 0.0, RAYLEIGH) > 1e-6

    def test_seed_needs_positive_tail(self):
        with pytest.raises(ConfigurationError):
            aqpa_seed_level(1.0, 0.0, RAYLEIGH, p_tail=0.0)

    def test_step_from_tiny_level_moves_strictly_up(self):
        p_tail = 1e-6
        assert region_residual(p_tail * (1.0 + 1e-9), p_tail, 0.0, 0.5, 0.0, RAYLEIGH) < 0
        upper = aqpa_recursive_step(p_tail, 0.0, 0.5, 0.0, RAYLEIGH)
        assert upper > p_tail * (1.0 + 1e-6)
        assert region_residual(upper * 1.01, p_tail, 0.0, 0.5, 0.0, RAYLEIGH) > 0

    def test_guess_gives_the_same_level(self):
        plain = aqpa_recursive_step(0.4, 0.0, 0.5, 0.1, RAYLEIGH)
        guided = aqpa_recursive_step(0.4, 0.0, 0.5, 0.1, RAYLEIGH, guess=plain * 1.05)
        assert guided == pytest.approx(plain, abs=1e-8)


class TestCodebook:
    def test_four_levels_without_interference(self):
        codebook = aqpa_codebook(0.5, 0.0, 4, RAYLEIGH)
        levels = codebook.levels
        assert levels[-1] == 0.0
        assert np.all(np.diff(levels) < 0)
        assert np.all(levels < 1.0 / 0.5)
        for j in range(1, 3):
            assert abs(region_residual(levels[j - 1], levels[j], levels[j + 1], 0.5, 0.0, RAYLEIGH)) < 1e-7
        assert abs(region_residual(None, levels[0], levels[1], 0.5, 0.0, RAYLEIGH)) < 1e-6

    def test_two_levels_with_interference(self):
        codebook = aqpa_codebook(0.4, 0.2, 2, RAYLEIGH)
        assert codebook.L == 2
        assert codebook.levels[1] == 0.0
        assert codebook.levels[0] > 0.0
        assert abs(region_residual(None, codebook.levels[0], 0.0, 0.4, 0.2, RAYLEIGH)) < 1e-6

    def test_agrees_with_lloyd_on_many_samples(self):
        g0, g1 = sample_training_set(None, 1, 100000, 21).band(0)
        lloyd, _, _ = run_gla(g0, g1, 4, 0.5, 0.0)
        designed = aqpa_codebook(0.5, 0.0, 4, RAYLEIGH)
        np.testing.assert_allclose(designed.levels[:-1], lloyd.levels[:-1], rtol=0.03)
        assert lloyd.levels[-1] == 0.0

    def test_single_level_is_rejected(self):
        with pytest.raises(ConfigurationError):
            aqpa_codebook(0.5, 0.0, 1, RAYLEIGH)

    def test_deterministic_models_are_rejected(self):
        models = (FadingModel.deterministic([1.0]), FadingModel.deterministic([2.0]))
        with pytest.raises(UnsupportedOperationError):
            aqpa_codebook(0.5, 0.1, 4, models)

    def test_levels_stay_clear_of_the_smallest_second_level(self):
        codebook = aqpa_codebook(0.5, 0.0, 4, RAYLEIGH)
        eps = SolverSettings().aqpa_eps_power
        assert codebook.levels[-2] > 1000 * eps
        assert np.all(np.diff(codebook.levels) < 0)

    def test_unbalanced_smallest_ladder_is_an_error(self, monkeypatch):
        monkeypatch.setattr(aqpa, "_ladder", lambda s, L, *args, **kwargs: (-0.1, [0.0, s, s, 3.0]))
        with pytest.raises(RootNotFoundError):
            aqpa_codebook(0.5, 0.0, 4, RAYLEIGH)

    def test_faster_than_lloyd(self):
        g0, g1 = sample_training_set(None, 1, 100000, 5).band(0)
        start = time.perf_counter()
        run_gla(g0, g1, 16, 0.1, 0.1)
        lloyd_seconds = time.perf_counter() - start
        start = time.perf_counter()
        codebook = aqpa_codebook(0.1, 0.1, 16, RAYLEIGH)
        aqpa_seconds = time.perf_counter() - start
        assert codebook.L == 16
        assert np.all(np.diff(codebook.levels) < 0)
        assert 5.0 * aqpa_seconds < lloyd_seconds

    @pytest.mark.slow
    def test_levels_stable_under_tighter_quadrature(self):
        base = aqpa_codebook(0.5, 0.2, 4, RAYLEIGH)
        tight = aqpa_codebook(0.5, 0.2, 4, RAYLEIGH, spec=QuadratureSpec().tightened(2.0))
        np.testing.assert_allclose(tight.levels, base.levels, rtol=1e-4, atol=1e-12)
