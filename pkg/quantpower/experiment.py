"""
Experiment configuration, single-point solves, sweeps and boundary polylines
"""

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dual_outer import METHOD_AQPA, METHOD_GLA, METHOD_GLA2, solve_quantized
from .evaluation import FullCsiRule, QuantizedRule, estimate_capacity
from .exceptions import AsymptoteExceededError, ConfigurationError, QuantPowerError
from .fading import ChannelModels, TrainingSet, sample_training_set
from .full_csi import allocate_full_csi
from .helpers import db_to_linear, is_power_of_two, validate_count, validate_probability
from .lloyd import asymptote_g0, boundary_g1, verify_codebook_properties
from .models import CapacityEstimate, ConstraintSet, DualVariables, SolverSettings
from .noisy_feedback import transition_matrix

logger = logging.getLogger(__name__)

METHOD_FULLCSI = "fullcsi"
METHODS = (METHOD_FULLCSI, METHOD_GLA, METHOD_AQPA, METHOD_GLA2)

DEFAULT_N = 100000
DEFAULT_SEED = 1

CONFIG_KEYS = {
    "M", "B", "L", "P_avg_dB", "Q_avg_dB", "fading", "N_train", "N_eval", "seed", "eval_seed",
    "q_f", "method", "methods", "bits", "tolerances", "sweep", "record_timing", "index_search",
    "boundaries",
}

STATUS_OK = "ok"
STATUS_NOT_CONVERGED = "not_converged"


@dataclass
class ExperimentConfig:
    """Validated experiment description (dB in the file, linear through the properties)"""

    M: int = 1
    B: Optional[int] = 1
    L: int = 2
    P_avg_dB: float = 0.0
    Q_avg_dB: List[Optional[float]] = field(default_factory=lambda: [None])
    fading: ChannelModels = field(default_factory=lambda: ChannelModels.rayleigh(1))
    N_train: int = DEFAULT_N
    N_eval: int = DEFAULT_N
    seed: int = DEFAULT_SEED
    eval_seed: int = DEFAULT_SEED + 1
    q_f: float = 0.0
    method: str = METHOD_GLA
    methods: List[str] = field(default_factory=lambda: [METHOD_GLA])
    bits: List[int] = field(default_factory=lambda: [1])
    tolerances: Dict = field(default_factory=dict)
    sweep: List[float] = field(default_factory=list)
    record_timing: bool = True
    index_search: bool = False
    boundary_g0_max: float = 10.0
    boundary_points: int = 101
    settings: SolverSettings = field(default_factory=SolverSettings)

    @property
    def P_avg(self) -> float:
        return db_to_linear(self.P_avg_dB)

    @property
    def Q_avg(self) -> List[float]:
        return [db_to_linear(q) for q in self.Q_avg_dB]

    def constraints(self, P_avg_dB: Optional[float] = None) -> ConstraintSet:
        power_db = self.P_avg_dB if P_avg_dB is None else P_avg_dB
        return ConstraintSet(P_avg=db_to_linear(power_db), Q_avg=tuple(self.Q_avg))

    @property
    def sweep_points(self) -> List[float]:
        return list(self.sweep) if self.sweep else [self.P_avg_dB]

    def to_dict(self) -> Dict:
        return {
            "M": self.M,
            "B": self.B,
            "L": self.L,
            "P_avg_dB": self.P_avg_dB,
            "Q_avg_dB": list(self.Q_avg_dB),
            "fading": self.fading.to_dict(),
            "N_train": self.N_train,
            "N_eval": self.N_eval,
            "seed": self.seed,
            "eval_seed": self.eval_seed,
            "q_f": self.q_f,
            "method": self.method,
            "methods": list(self.methods),
            "bits": list(self.bits),
            "tolerances": dict(self.tolerances),
            "sweep": {"values": list(self.sweep)},
            "record_timing": self.record_timing,
            "index_search": self.index_search,
            "boundaries": {"g0_max": self.boundary_g0_max, "points": self.boundary_points},
        }


# ==================== Loading ====================

def _sweep_values(spec) -> List[float]:
    if spec is None:
        return []
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if not isinstance(spec, dict):
        raise ConfigurationError("sweep must be a list or an object", field="sweep")
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    try:
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
    except (KeyError, TypeError, ValueError):
        raise ConfigurationError("sweep needs numeric start, stop and step", field="sweep")
    if not step > 0 or stop < start:
        raise ConfigurationError("sweep needs step > 0 and stop >= start", field="sweep")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def _levels(data: Dict) -> Tuple[Optional[int], int]:
    B, L = data.get("B"), data.get("L")
    if B is None and L is None:
        B = 1
    if B is not None:
        B = validate_count(B, "B", minimum=0)
        if L is not None and validate_count(L, "L") != 2**B:
            raise ConfigurationError(f"L={L} does not match B={B}", field="L")
        return B, 2**B
    L = validate_count(L, "L")
    return (L.bit_length() - 1 if is_power_of_two(L) else None), L


def parse_config(data: Dict, defaults=None) -> ExperimentConfig:
    """
    Validate a decoded experiment document and fill defaults

    Args:
        data (dict): Decoded JSON document
        defaults: Config class supplying N_TRAIN, N_EVAL, SEED and tolerances

    Returns:
        ExperimentConfig

    Raises:
        ConfigurationError: Naming the offending field
    """
    if not isinstance(data, dict):
        raise ConfigurationError("Experiment file must hold a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"Unknown config field '{unknown[0]}'", field=unknown[0])

    M = validate_count(data.get("M", 1), "M")
    B, L = _levels(data)

    if "Q_avg_dB" not in data:
        raise ConfigurationError("Q_avg_dB is required (use null for an unconstrained band)", field="Q_avg_dB")
    q_list = data["Q_avg_dB"]
    if not isinstance(q_list, list) or len(q_list) != M:
        raise ConfigurationError(f"Q_avg_dB needs exactly {M} entries", field="Q_avg_dB")
    try:
        [db_to_linear(q) for q in q_list]
    except (ConfigurationError, TypeError, ValueError):
        raise ConfigurationError(f"Q_avg_dB entries must be numbers, null or \"inf\": {q_list}", field="Q_avg_dB")

    try:
        P_avg_dB = float(data.get("P_avg_dB", 0.0))
    except (TypeError, ValueError):
        raise ConfigurationError("P_avg_dB must be a number", field="P_avg_dB")

    method = data.get("method", METHOD_GLA)
    methods = data.get("methods", [method])
    for name in [method] + list(methods):
        if name not in METHODS:
            raise ConfigurationError(f"Unknown method '{name}' (expected one of {', '.join(METHODS)})", field="method")

    q_f = validate_probability(data.get("q_f", 0.0), "q_f", upper=0.5)
    bits = [validate_count(b, "bits", minimum=0) for b in data.get("bits", [B] if B is not None else [])]
    if (q_f > 0 or METHOD_GLA2 in methods) and (B is None or not bits):
        raise ConfigurationError(f"L={L} must be a power of two for noisy feedback", field="L")

    n_train = validate_count(data.get("N_train", getattr(defaults, "N_TRAIN", DEFAULT_N)), "N_train")
    eval_default = n_train if "N_train" in data else getattr(defaults, "N_EVAL", n_train)
    n_eval = validate_count(data.get("N_eval", eval_default), "N_eval")
    seed = validate_count(data.get("seed", getattr(defaults, "SEED", DEFAULT_SEED)), "seed", minimum=0)
    eval_seed = validate_count(data.get("eval_seed", seed + 1), "eval_seed", minimum=0)

    tolerances = data.get("tolerances", {}) or {}
    if not isinstance(tolerances, dict):
        raise ConfigurationError("tolerances must be an object", field="tolerances")
    base = SolverSettings.from_config(defaults) if defaults is not None else SolverSettings()
    settings = base.with_overrides(tolerances)

    boundaries = data.get("boundaries", {}) or {}
    return ExperimentConfig(
        M=M,
        B=B,
        L=L,
        P_avg_dB=P_avg_dB,
        Q_avg_dB=list(q_list),
        fading=ChannelModels.from_dict(data.get("fading"), M),
        N_train=n_train,
        N_eval=n_eval,
        seed=seed,
        eval_seed=eval_seed,
        q_f=q_f,
        method=method,
        methods=list(methods),
        bits=bits or [B],
        tolerances=dict(tolerances),
        sweep=_sweep_values(data.get("sweep")),
        record_timing=bool(data.get("record_timing", True)),
        index_search=bool(data.get("index_search", False)),
        boundary_g0_max=float(boundaries.get("g0_max", 10.0)),
        boundary_points=validate_count(boundaries.get("points", 101), "boundaries.points", minimum=2),
        settings=settings,
    )


def load_config(path: str, defaults=None) -> ExperimentConfig:
    """Read and validate an experiment JSON file"""
    if not os.path.isfile(path):
        raise ConfigurationError(f"Config file not found: {path}", field="config")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid JSON: {e}", field="config")
    config = parse_config(data, defaults)
    logger.info(f"Loaded config {path}: M={config.M}, L={config.L}, methods={config.methods}")
    return config


# ==================== Solving ====================

def sample_sets(config: ExperimentConfig) -> Tuple[TrainingSet, TrainingSet]:
    """Training and held-out evaluation sets"""
    training = sample_training_set(config.fading, config.M, config.N_train, config.seed)
    evaluation = sample_training_set(config.fading, config.M, config.N_eval, config.eval_seed)
    return training, evaluation


@dataclass
class PointResult:
    """One (P_avg_dB, method, B) outcome: a CSV row plus the codebook payload"""

    row: Dict
    payload: Dict


def solve_point(
    config: ExperimentConfig,
    P_avg_dB: float,
    method: str,
    B: Optional[int],
    training: TrainingSet,
    evaluation: TrainingSet,
    strict: bool = False,
) -> PointResult:
    """
    Solve one sweep point

    Solver errors become a status string instead of raising unless strict is set.
    """
    constraints = config.constraints(P_avg_dB)
    L = 2**B if B is not None else config.L
    row = {
        "P_avg_dB": P_avg_dB,
        "method": method,
        "B": 0 if method == METHOD_FULLCSI else B,
        "q_f": config.q_f if method == METHOD_GLA2 else 0.0,
    }
    payload = {
        "method": method,
        "B": row["B"],
        "L": 1 if method == METHOD_FULLCSI else L,
        "P_avg_dB": P_avg_dB,
        "config": config.to_dict(),
        "seed": config.seed,
        "eval_seed": config.eval_seed,
        "N_eval": config.N_eval,
    }
    started = time.perf_counter()
    try:
        if method == METHOD_FULLCSI:
            solution = allocate_full_csi(constraints, training, config.settings)
            duals, atp, aip, iterations, converged = solution.duals, solution.atp, solution.aip, 0, True
            rule = FullCsiRule(duals)
            payload.update({"levels": None, "cases": solution.cases})
        else:
            channel = transition_matrix(B, config.q_f) if method == METHOD_GLA2 else None
            solution = solve_quantized(
                method, constraints, training, L, config.settings, channel, config.index_search
            )
            duals, atp, aip = solution.duals, solution.atp, solution.aip
            iterations, converged = solution.outer_iterations, solution.converged
            rule = QuantizedRule.from_solution(solution)
            payload.update(
                {
                    "levels": solution.codebooks.tolist(),
                    "permutation": solution.permutation,
                    "feedback": solution.channel.to_dict() if solution.channel is not None else None,
                    "diagnostics": list(solution.diagnostics),
                }
            )
        capacity = estimate_capacity(evaluation, rule)
        status = STATUS_OK if converged else STATUS_NOT_CONVERGED
    except QuantPowerError as e:
        if strict:
            raise
        logger.error(f"Point P_avg={P_avg_dB} dB, {method}, B={B} failed: {e}")
        status = f"error: {type(e).__name__}: {e}"
        capacity = CapacityEstimate(value=math.nan, std_error=math.nan, n_samples=evaluation.N)
        duals = DualVariables(lam=math.nan, mu=np.full(config.M, math.nan))
        atp, aip, iterations, converged = math.nan, np.full(config.M, math.nan), 0, False
    wall_ms = (time.perf_counter() - started) * 1000.0 if config.record_timing else 0.0

    row.update(
        {
            "capacity_nats": capacity.value,
            "capacity_se": capacity.std_error,
            "ATP": atp,
            **{f"AIP_{i + 1}": float(aip[i]) for i in range(config.M)},
            "lambda": duals.lam,
            **{f"mu_{i + 1}": float(duals.mu[i]) for i in range(config.M)},
            "iterations": iterations,
            "wall_ms": wall_ms,
            "status": status,
        }
    )
    payload.update(
        {
            "lambda": duals.lam,
            "mu": duals.mu.tolist(),
            "mu_prime": duals.mu_prime.tolist(),
            "atp": atp,
            "aip": [float(a) for a in aip],
            "capacity": capacity.value,
            "capacity_se": capacity.std_error,
            "converged": converged,
            "status": status,
        }
    )
    return PointResult(row=row, payload=payload)


def sweep_tasks(config: ExperimentConfig) -> List[Tuple[float, str, Optional[int]]]:
    """(P_avg_dB, method, B) triples in output order; full CSI once per power point"""
    tasks = []
    for power_db in config.sweep_points:
        for method in config.methods:
            if method == METHOD_FULLCSI:
                tasks.append((power_db, method, None))
                continue
            for bits in config.bits:
                tasks.append((power_db, method, bits))
    return tasks


def _run_task(args) -> PointResult:
    config, power_db, method, bits = args
    training, evaluation = sample_sets(config)
    return solve_point(config, power_db, method, bits, training, evaluation)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> List[PointResult]:
    """
    Solve every sweep point, in deterministic order

    Args:
        config: Validated experiment
        workers (int): Worker processes (1 runs in-process and shares the sample sets)

    Returns:
        list: PointResult per (P_avg_dB, method, B)
    """
    workers = validate_count(workers, "workers")
    tasks = sweep_tasks(config)
    logger.info(f"Sweep: {len(tasks)} points, {workers} worker(s)")
    if workers == 1:
        training, evaluation = sample_sets(config)
        results = []
        for k, (power_db, method, bits) in enumerate(tasks, start=1):
            results.append(solve_point(config, power_db, method, bits, training, evaluation))
            logger.info(f"Sweep point {k}/{len(tasks)} done: P_avg={power_db} dB, {method}, B={bits}")
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, [(config,) + task for task in tasks]))


# ==================== Boundaries and codebook checks ====================

def boundary_polylines(codebooks, duals: DualVariables, g0_max: float = 10.0, points: int = 101) -> List[Dict]:
    """
    (g0, g1) points of every adjacent-region boundary, cut at the asymptote

    Returns:
        list: Dicts with band, pair (upper level index, 0-based), g0 and g1
    """
    codebooks = np.atleast_2d(np.asarray(codebooks, dtype=float))
    grid = np.linspace(0.0, g0_max, points)
    mu_prime = duals.mu_prime
    rows = []
    for band in range(codebooks.shape[0]):
        levels = np.sort(codebooks[band])[::-1]
        for j in range(levels.size - 1):
            p_hi, p_lo = levels[j], levels[j + 1]
            if not p_hi > p_lo:
                continue
            limit = asymptote_g0(p_hi, p_lo, duals.lam, mu_prime[band])
            for g0 in grid[grid < limit]:
                try:
                    g1 = boundary_g1(p_hi, p_lo, duals.lam, mu_prime[band], g0)
                except AsymptoteExceededError:
                    break
                rows.append({"band": band + 1, "pair": j, "g0": float(g0), "g1": float(g1)})
    return rows


def run_boundaries(config: ExperimentConfig) -> List[Dict]:
    """Solve config.method at config.P_avg_dB and trace its region boundaries"""
    if config.method == METHOD_FULLCSI:
        raise ConfigurationError("Boundaries need a quantized method", field="method")
    training, evaluation = sample_sets(config)
    result = solve_point(config, config.P_avg_dB, config.method, config.B, training, evaluation, strict=True)
    duals = DualVariables(lam=result.payload["lambda"], mu=result.payload["mu"])
    return boundary_polylines(result.payload["levels"], duals, config.boundary_g0_max, config.boundary_points)


def evaluate_codebook(payload: Dict, defaults=None) -> CapacityEstimate:
    """Regenerate the evaluation set echoed in a codebook payload and measure its capacity"""
    config = parse_config(_echo_to_document(payload["config"]), defaults)
    evaluation = sample_training_set(config.fading, config.M, payload["N_eval"], payload["eval_seed"])
    duals = DualVariables(lam=payload["lambda"], mu=payload["mu"])
    if payload["method"] == METHOD_FULLCSI:
        return estimate_capacity(evaluation, FullCsiRule(duals))
    channel = None
    if payload.get("feedback"):
        channel = transition_matrix(payload["feedback"]["B"], payload["feedback"]["q_f"])
    return estimate_capacity(evaluation, QuantizedRule(payload["levels"], duals, channel))


def verify_codebook(payload: Dict) -> List:
    """Structural property reports, one per band"""
    if payload.get("levels") is None:
        raise ConfigurationError("Codebook file holds no quantized levels", field="levels")
    duals = DualVariables(lam=payload["lambda"], mu=payload["mu"])
    mu_prime = duals.mu_prime
    reports = []
    for band, levels in enumerate(payload["levels"]):
        reports.append(verify_codebook_properties(np.asarray(levels, dtype=float), duals.lam, mu_prime[band]))
    return reports


def _echo_to_document(echo: Dict) -> Dict:
    """Config echo back into the file schema"""
    document = dict(echo)
    document.pop("L" if document.get("B") is not None else "B", None)
    return document
