"""
Results persistence for sweeps and codebooks
Writes plot-ready CSV, codebook JSON files and an optional XLSX copy
"""

import csv
import json
import logging
import math
import os
from typing import Dict, List, Optional

import openpyxl

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 6
RESULTS_CSV = "results.csv"
RESULTS_XLSX = "results.xlsx"
BOUNDARIES_CSV = "boundaries.csv"
CODEBOOK_DIR = "codebooks"


def format_value(value) -> str:
    """Locale-independent cell text; floats keep 6 significant digits"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, f".{SIGNIFICANT_DIGITS}g")
    return str(value)


def sweep_headers(M: int, bits_capacity: bool = False) -> List[str]:
    capacity = "capacity_bits" if bits_capacity else "capacity_nats"
    return (
        ["P_avg_dB", "method", "B", "q_f", capacity, "capacity_se", "ATP"]
        + [f"AIP_{i + 1}" for i in range(M)]
        + ["lambda"]
        + [f"mu_{i + 1}" for i in range(M)]
        + ["iterations", "wall_ms", "status"]
    )


def to_bits(row: Dict) -> Dict:
    """Copy of a sweep row with capacity columns converted from nats to bits"""
    converted = dict(row)
    converted["capacity_bits"] = converted.pop("capacity_nats") / math.log(2.0)
    converted["capacity_se"] = converted["capacity_se"] / math.log(2.0)
    return converted


def codebook_filename(payload: Dict) -> str:
    return f"{payload['method']}_B{payload['B']}_P{format_value(float(payload['P_avg_dB']))}dB.json"


class ResultsHandler:
    """Writes experiment outputs under one directory"""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        logger.info(f"Results directory: {out_dir}")

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    # ==================== Sweep tables ====================

    def write_sweep_csv(self, rows: List[Dict], M: int, bits_capacity: bool = False, filename: str = RESULTS_CSV) -> str:
        """
        Write sweep rows in the order given

        Args:
            rows (list): Row dicts produced by the sweep
            M (int): Number of bands (AIP/mu column count)
            bits_capacity (bool): Report capacity in bits instead of nats
            filename (str): Output name inside the results directory

        Returns:
            str: Path written
        """
        headers = sweep_headers(M, bits_capacity)
        out = self.path(filename)
        try:
            with open(out, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(headers)
                for row in rows:
                    row = to_bits(row) if bits_capacity else row
                    writer.writerow([format_value(row.get(h)) for h in headers])
            logger.info(f"Wrote {len(rows)} rows to {out}")
            return out
        except OSError as e:
            logger.error(f"Error writing {out}: {str(e)}")
            raise

    def write_sweep_xlsx(self, rows: List[Dict], M: int, bits_capacity: bool = False, filename: str = RESULTS_XLSX) -> str:
        """Same table as the CSV in a worksheet, with fitted column widths"""
        headers = sweep_headers(M, bits_capacity)
        out = self.path(filename)
        try:
            wb = openpyxl.Workbook()
            ws = wb.active
            ws.title = "Sweep"
            ws.append(headers)
            for row in rows:
                row = to_bits(row) if bits_capacity else row
                ws.append([_cell(row.get(h)) for h in headers])

            # Auto-adjust column widths
            for column in ws.columns:
                cells = [cell for cell in column]
                max_length = max(len(str(cell.value)) for cell in cells if cell.value is not None)
                ws.column_dimensions[cells[0].column_letter].width = max_length + 2

            wb.save(out)
            logger.info(f"Wrote {len(rows)} rows to {out}")
            return out
        except OSError as e:
            logger.error(f"Error writing {out}: {str(e)}")
            raise

    def write_boundaries_csv(self, rows: List[Dict], filename: str = BOUNDARIES_CSV) -> str:
        headers = ["band", "pair", "g0", "g1"]
        out = self.path(filename)
        try:
            with open(out, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(headers)
                for row in rows:
                    writer.writerow([format_value(row[h]) for h in headers])
            logger.info(f"Wrote {len(rows)} boundary points to {out}")
            return out
        except OSError as e:
            logger.error(f"Error writing {out}: {str(e)}")
            raise

    # ==================== Codebooks ====================

    def write_codebook(self, payload: Dict, filename: Optional[str] = None) -> str:
        """Codebook JSON; floats are written with full round-trip precision"""
        directory = self.path(CODEBOOK_DIR)
        os.makedirs(directory, exist_ok=True)
        out = os.path.join(directory, filename or codebook_filename(payload))
        try:
            with open(out, "w", encoding="utf-8") as handle:
                json.dump(_jsonable(payload), handle, indent=2, sort_keys=True)
                handle.write("\n")
            logger.info(f"Wrote codebook {out}")
            return out
        except OSError as e:
            logger.error(f"Error writing {out}: {str(e)}")
            raise


def load_codebook(path: str) -> Dict:
    """
    Read a codebook JSON file

    Raises:
        ConfigurationError: If the file is missing or lacks required fields
    """
    if not os.path.isfile(path):
        raise ConfigurationError(f"Codebook file not found: {path}", field="codebook")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Codebook file {path} is not valid JSON: {e}", field="codebook")
    for key in ("method", "lambda", "mu", "config", "eval_seed", "N_eval"):
        if key not in payload:
            raise ConfigurationError(f"Codebook file {path} lacks '{key}'", field=key)
    return payload


def _cell(value):
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return format_value(value)
    return value


def _jsonable(value):
    """Replace non-finite floats by strings so the file stays strict JSON"""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value
