"""
Tests for experiment configuration, sweeps and codebook round trips
"""

import json
import math

import numpy as np
import pytest

from config import QuickConfig
from quantpower import ConfigurationError, DualVariables, ResultsHandler, UnsupportedOperationError, load_codebook
from quantpower.experiment import (
    METHOD_FULLCSI,
    boundary_polylines,
    evaluate_codebook,
    load_config,
    parse_config,
    run_sweep,
    sample_sets,
    solve_point,
    sweep_tasks,
    verify_codebook,
)

SMALL = {
    "M": 1,
    "B": 1,
    "Q_avg_dB": [-5],
    "N_train": 500,
    "methods": ["fullcsi", "gla"],
    "sweep": [0, 5],
    "record_timing": False,
    "tolerances": {"tol_feas": 0.01},
}


class TestParseConfig:
    def test_minimal_example(self):
        config = parse_config({"M": 1, "B": 3, "P_avg_dB": 10, "Q_avg_dB": [-5]})
        assert config.L == 8
        assert config.P_avg == pytest.approx(10.0)
        assert config.Q_avg[0] == pytest.approx(0.316228, rel=1e-6)

    def test_defaults(self):
        config = parse_config({"Q_avg_dB": [0]})
        assert (config.M, config.B, config.L) == (1, 1, 2)
        assert config.N_train == config.N_eval == 100000
        assert (config.seed, config.eval_seed) == (1, 2)
        assert config.Q_avg == [1.0]
        assert config.sweep_points == [0.0]

    def test_profile_defaults(self):
        config = parse_config({"Q_avg_dB": [0]}, QuickConfig)
        assert config.N_train == QuickConfig.N_TRAIN
        assert config.settings.gla_max_iter == QuickConfig.GLA_MAX_ITER

    def test_eval_size_follows_train_size(self):
        config = parse_config({"Q_avg_dB": [0], "N_train": 1234})
        assert config.N_eval == 1234

    def test_unconstrained_markers(self):
        config = parse_config({"M": 2, "Q_avg_dB": [None, "inf"]})
        assert config.Q_avg == [math.inf, math.inf]

    @pytest.mark.parametrize(
        "document, field",
        [
            ({"M": 4, "Q_avg_dB": [0, 0, 0]}, "Q_avg_dB"),
            ({"Q_avg_dB": [0], "colour": "red"}, "colour"),
            ({"L": 3, "q_f": 0.1, "Q_avg_dB": [0]}, "L"),
            ({"B": 2, "L": 8, "Q_avg_dB": [0]}, "L"),
            ({"M": 1}, "Q_avg_dB"),
            ({"Q_avg_dB": [0], "q_f": 0.7}, "q_f"),
            ({"Q_avg_dB": [0], "method": "kmeans"}, "method"),
            ({"Q_avg_dB": [0], "tolerances": {"bogus": 1}}, "tolerances.bogus"),
            ({"Q_avg_dB": [0], "tolerances": {"gla_tol": -1}}, "tolerances.gla_tol"),
        ],
    )
    def test_invalid_documents_name_the_field(self, document, field):
        with pytest.raises(ConfigurationError) as excinfo:
            parse_config(document)
        assert excinfo.value.field == field

    def test_non_power_of_two_without_noise(self):
        config = parse_config({"L": 3, "Q_avg_dB": [0]})
        assert config.L == 3
        assert config.B is None

    def test_tolerance_override(self):
        config = parse_config({"Q_avg_dB": [0], "tolerances": {"gla_tol": 1e-8}})
        assert config.settings.gla_tol == 1e-8

    def test_sweep_range(self):
        config = parse_config(
            {
                "Q_avg_dB": [0],
                "sweep": {"start": 0, "stop": 30, "step": 5},
                "bits": [1, 2, 3],
                "methods": ["gla", "aqpa", "fullcsi"],
            }
        )
        assert config.sweep_points == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
        tasks = sweep_tasks(config)
        assert len(tasks) == 7 * (3 + 3 + 1)
        assert tasks[:2] == [(0.0, "gla", 1), (0.0, "gla", 2)]
        assert (0.0, METHOD_FULLCSI, None) in tasks

    def test_load_config(self, tmp_path):
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({"Q_avg_dB": [-5], "B": 2}))
        assert load_config(str(path)).L == 4

    def test_missing_or_broken_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "absent.json"))
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        with pytest.raises(ConfigurationError):
            load_config(str(broken))


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(parse_config(SMALL))


class TestSweep:
    def test_rows_in_order(self, small_sweep):
        keys = [(r.row["P_avg_dB"], r.row["method"], r.row["B"]) for r in small_sweep]
        assert keys == [(0.0, "fullcsi", 0), (0.0, "gla", 1), (5.0, "fullcsi", 0), (5.0, "gla", 1)]
        for result in small_sweep:
            assert not result.row["status"].startswith("error")

    def test_quantized_below_full_csi(self, small_sweep):
        for full, quantized in zip(small_sweep[0::2], small_sweep[1::2]):
            assert quantized.row["capacity_nats"] < full.row["capacity_nats"]

    def test_rerun_is_byte_identical(self, small_sweep, tmp_path):
        rerun = run_sweep(parse_config(SMALL))
        first = ResultsHandler(str(tmp_path / "a")).write_sweep_csv([r.row for r in small_sweep], 1)
        second = ResultsHandler(str(tmp_path / "b")).write_sweep_csv([r.row for r in rerun], 1)
        with open(first, "rb") as a, open(second, "rb") as b:
            assert a.read() == b.read()

    def test_codebook_round_trip(self, small_sweep, tmp_path):
        payload = small_sweep[1].payload
        path = ResultsHandler(str(tmp_path)).write_codebook(payload)
        loaded = load_codebook(path)
        assert loaded["levels"] == payload["levels"]
        estimate = evaluate_codebook(loaded)
        assert estimate.value == pytest.approx(payload["capacity"], rel=1e-9)
        assert estimate.n_samples == payload["N_eval"]

    def test_full_csi_payload_round_trip(self, small_sweep, tmp_path):
        payload = small_sweep[0].payload
        loaded = load_codebook(ResultsHandler(str(tmp_path)).write_codebook(payload))
        assert loaded["levels"] is None
        assert evaluate_codebook(loaded).value == pytest.approx(payload["capacity"], rel=1e-9)
        with pytest.raises(ConfigurationError):
            verify_codebook(loaded)

    def test_solver_errors_become_status(self):
        config = parse_config(
            {
                "Q_avg_dB": [-5],
                "N_train": 50,
                "methods": ["aqpa"],
                "fading": {
                    "g0": {"kind": "deterministic", "values": [1.0]},
                    "g1": {"kind": "deterministic", "values": [2.0]},
                },
            }
        )
        training, evaluation = sample_sets(config)
        result = solve_point(config, 0.0, "aqpa", 1, training, evaluation)
        assert result.row["status"].startswith("error: UnsupportedOperationError")
        assert math.isnan(result.row["capacity_nats"])
        with pytest.raises(UnsupportedOperationError):
            solve_point(config, 0.0, "aqpa", 1, training, evaluation, strict=True)


class TestBoundariesAndChecks:
    def test_polylines_stop_at_asymptote(self):
        rows = boundary_polylines([[2.0, 1.0, 0.0]], DualVariables(lam=0.1, mu=[0.1]))
        upper = [r for r in rows if r["pair"] == 0]
        lower = [r for r in rows if r["pair"] == 1]
        assert len(upper) == 60
        assert max(r["g0"] for r in upper) < 5.93147
        assert len(lower) == 101
        assert all(r["g1"] > 0.1 + 0.1 * r["g0"] for r in rows)
        assert {r["band"] for r in rows} == {1}

    def test_verify_payload(self):
        good = {"levels": [[1.0, 0.5, 0.2, 0.0]], "lambda": 1.0, "mu": [0.2]}
        bad = {"levels": [[3.0, 2.0, 2.0, 0.0]], "lambda": 1.0, "mu": [0.2]}
        assert all(r.passed for r in verify_codebook(good))
        assert not verify_codebook(bad)[0].passed

    def test_verify_checks_levels_in_stored_order(self):
        ascending = {"levels": [[0.0, 0.2, 0.5, 1.0]], "lambda": 1.0, "mu": [0.2]}
        report = verify_codebook(ascending)[0]
        assert not report.passed
        assert "levels are not strictly descending" in report.violations

    def test_config_echo_round_trips(self):
        config = parse_config(dict(SMALL, sweep={"start": 0, "stop": 10, "step": 5}))
        echoed = parse_config({k: v for k, v in config.to_dict().items() if k != "L"})
        assert echoed.to_dict() == config.to_dict()
        np.testing.assert_array_equal(sample_sets(echoed)[1].g1, sample_sets(config)[1].g1)
