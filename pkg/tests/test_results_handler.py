"""
Tests for CSV, XLSX and codebook JSON output
"""

import json
import math

import openpyxl
import pytest

from quantpower import ConfigurationError, ResultsHandler, load_codebook
from quantpower.results_handler import format_value, sweep_headers


def _row(**overrides):
    row = {
        "P_avg_dB": 5.0,
        "method": "gla",
        "B": 2,
        "q_f": 0.0,
        "capacity_nats": 1.23456789,
        "capacity_se": 0.00123,
        "ATP": 3.16,
        "AIP_1": 0.31,
        "lambda": 0.25,
        "mu_1": 0.5,
        "iterations": 7,
        "wall_ms": 0.0,
        "status": "ok",
    }
    row.update(overrides)
    return row


@pytest.mark.parametrize(
    "value, text",
    [(1.23456789, "1.23457"), (math.nan, "nan"), (math.inf, "inf"), (None, ""), (True, "true"), (3, "3"), ("ok", "ok")],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_headers():
    headers = sweep_headers(2)
    assert headers[:5] == ["P_avg_dB", "method", "B", "q_f", "capacity_nats"]
    assert headers[7:] == ["AIP_1", "AIP_2", "lambda", "mu_1", "mu_2", "iterations", "wall_ms", "status"]
    assert "capacity_bits" in sweep_headers(2, bits_capacity=True)


def test_sweep_csv(tmp_path):
    path = ResultsHandler(str(tmp_path)).write_sweep_csv([_row()], 1)
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    assert lines[0].startswith("P_avg_dB,method,B,q_f,capacity_nats")
    assert lines[1] == "5,gla,2,0,1.23457,0.00123,3.16,0.31,0.25,0.5,7,0,ok"


def test_sweep_csv_in_bits(tmp_path):
    path = ResultsHandler(str(tmp_path)).write_sweep_csv([_row(capacity_nats=math.log(2.0))], 1, bits_capacity=True)
    with open(path, encoding="utf-8") as handle:
        header, line = handle.read().splitlines()
    assert line.split(",")[header.split(",").index("capacity_bits")] == "1"


def test_sweep_xlsx(tmp_path):
    path = ResultsHandler(str(tmp_path)).write_sweep_xlsx([_row(), _row(status="error: X", capacity_nats=math.nan)], 1)
    ws = openpyxl.load_workbook(path).active
    assert ws.title == "Sweep"
    assert ws.cell(row=1, column=1).value == "P_avg_dB"
    assert ws.cell(row=2, column=5).value == pytest.approx(1.23456789)
    assert ws.cell(row=3, column=5).value == "nan"


def test_codebook_json(tmp_path):
    payload = {
        "method": "gla",
        "B": 1,
        "P_avg_dB": 10.0,
        "lambda": 0.2,
        "mu": [math.nan],
        "config": {},
        "eval_seed": 2,
        "N_eval": 10,
    }
    path = ResultsHandler(str(tmp_path)).write_codebook(payload)
    assert path.endswith("codebooks/gla_B1_P10dB.json")
    with open(path, encoding="utf-8") as handle:
        assert json.load(handle)["mu"] == ["nan"]
    assert load_codebook(path)["lambda"] == 0.2


def test_codebook_missing_field(tmp_path):
    path = tmp_path / "partial.json"
    path.write_text(json.dumps({"method": "gla"}))
    with pytest.raises(ConfigurationError) as excinfo:
        load_codebook(str(path))
    assert excinfo.value.field == "lambda"
    with pytest.raises(ConfigurationError):
        load_codebook(str(tmp_path / "absent.json"))
