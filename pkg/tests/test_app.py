"""
Tests for the command-line entry point
"""

import json
import os

import pytest

from app import EXIT_CONFIG, EXIT_OK, EXIT_VERIFY_FAILED, main

EXPERIMENT = {
    "M": 1,
    "B": 1,
    "P_avg_dB": 5,
    "Q_avg_dB": [-5],
    "N_train": 400,
    "methods": ["gla"],
    "record_timing": False,
    "tolerances": {"tol_feas": 0.01},
}


@pytest.fixture
def experiment_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(EXPERIMENT))
    return str(path)


def _codebook_file(tmp_path, levels):
    path = tmp_path / "codebook.json"
    path.write_text(
        json.dumps(
            {
                "method": "gla",
                "levels": levels,
                "lambda": 1.0,
                "mu": [0.2],
                "config": EXPERIMENT,
                "eval_seed": 2,
                "N_eval": 400,
            }
        )
    )
    return str(path)


def test_full_csi_solve(experiment_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["fullcsi", "--config", experiment_file, "--out", str(out)]) == EXIT_OK
    assert (out / "results.csv").exists()
    assert (out / "codebooks" / "fullcsi_B0_P5dB.json").exists()
    assert "fullcsi: capacity=" in capsys.readouterr().out


def test_solve_output_labels_wideband_multiplier(tmp_path, capsys):
    path = tmp_path / "two_bands.json"
    path.write_text(json.dumps(dict(EXPERIMENT, M=2, Q_avg_dB=[-5, -5])))
    assert main(["fullcsi", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK
    printed = capsys.readouterr().out
    mu = json.loads(printed.split("mu (= mu'/M)=")[1].split("]")[0] + "]")
    mu_prime = json.loads(printed.split("mu'=")[1].split("]")[0] + "]")
    assert len(mu) == 2
    assert mu_prime == pytest.approx([2.0 * m for m in mu], rel=1e-5)


def test_sweep_writes_tables_and_codebooks(experiment_file, tmp_path):
    out = tmp_path / "out"
    code = main(["sweep", "--config", experiment_file, "--out", str(out), "--xlsx", "--bits-capacity"])
    assert code == EXIT_OK
    with open(out / "results.csv", encoding="utf-8") as handle:
        assert "capacity_bits" in handle.readline()
    assert (out / "results.xlsx").exists()
    assert os.listdir(out / "codebooks") == ["gla_B1_P5dB.json"]


def test_evaluate_written_codebook(experiment_file, tmp_path, capsys):
    out = tmp_path / "out"
    main(["sweep", "--config", experiment_file, "--out", str(out)])
    code = main(["evaluate", str(out / "codebooks" / "gla_B1_P5dB.json")])
    assert code == EXIT_OK
    assert "N=400" in capsys.readouterr().out


def test_boundaries(experiment_file, tmp_path):
    out = tmp_path / "out"
    assert main(["boundaries", "--config", experiment_file, "--out", str(out)]) == EXIT_OK
    with open(out / "boundaries.csv", encoding="utf-8") as handle:
        assert handle.readline().strip() == "band,pair,g0,g1"


def test_verify(tmp_path, capsys):
    assert main(["verify", _codebook_file(tmp_path, [[1.0, 0.5, 0.2, 0.0]])]) == EXIT_OK
    assert "✓ band 1" in capsys.readouterr().out
    assert main(["verify", _codebook_file(tmp_path, [[3.0, 2.0, 2.0, 0.0]])]) == EXIT_VERIFY_FAILED
    assert "✗ band 1" in capsys.readouterr().out


def test_verify_keeps_stored_order(tmp_path, capsys):
    assert main(["verify", _codebook_file(tmp_path, [[0.0, 1.0, 0.5, 0.2]])]) == EXIT_VERIFY_FAILED
    assert "not strictly descending" in capsys.readouterr().out


def test_configuration_errors(tmp_path):
    assert main(["gla"]) == EXIT_CONFIG
    assert main(["gla", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(dict(EXPERIMENT, colour="red")))
    assert main(["sweep", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["verify"]) == EXIT_CONFIG


def test_seed_override(experiment_file, tmp_path):
    out = tmp_path / "out"
    assert main(["fullcsi", "--config", experiment_file, "--out", str(out), "--seed", "7"]) == EXIT_OK
    with open(out / "codebooks" / "fullcsi_B0_P5dB.json", encoding="utf-8") as handle:
        payload = json.load(handle)
    assert (payload["seed"], payload["eval_seed"]) == (7, 8)
