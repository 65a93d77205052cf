"""
Data records shared by the solvers, the evaluator and the results handler
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError

# Full-CSI activity tags per band
CASE_AIP_ONLY = "AIP-only"
CASE_ATP_ONLY = "ATP-only"
CASE_BOTH = "Both"


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and iteration budgets passed down to every solver"""

    tol_feas: float = 1e-4
    tol_cs: float = 1e-3
    tol_root: float = 1e-10
    gla_tol: float = 1e-6
    gla_max_iter: int = 500
    gla_restarts: int = 1
    max_outer: int = 50
    bracket_low: float = 1e-8
    bracket_high: float = 1e4
    aqpa_eps_power: float = 1e-6
    aqpa_tail_multiple: float = 25.0

    @classmethod
    def from_config(cls, cfg, overrides: Optional[Dict] = None) -> "SolverSettings":
        """Build settings from a config class, applying per-experiment overrides"""
        settings = cls(
            tol_feas=cfg.TOL_FEAS,
            tol_cs=cfg.TOL_CS,
            tol_root=cfg.TOL_ROOT,
            gla_tol=cfg.GLA_TOL,
            gla_max_iter=cfg.GLA_MAX_ITER,
            gla_restarts=cfg.GLA_RESTARTS,
            max_outer=cfg.MAX_OUTER,
            bracket_low=cfg.BRACKET_LOW,
            bracket_high=cfg.BRACKET_HIGH,
            aqpa_eps_power=cfg.AQPA_EPS_POWER,
            aqpa_tail_multiple=cfg.AQPA_TAIL_MULTIPLE,
        )
        return settings.with_overrides(overrides)

    def with_overrides(self, overrides: Optional[Dict] = None) -> "SolverSettings":
        """Copy with some fields replaced; unknown or non-positive values are rejected"""
        values = self.to_dict()
        for key, value in (overrides or {}).items():
            if key not in values:
                raise ConfigurationError(f"Unknown tolerance override '{key}'", field=f"tolerances.{key}")
            try:
                values[key] = type(values[key])(value)
            except (TypeError, ValueError):
                raise ConfigurationError(f"tolerances.{key} must be a number, got {value!r}", field=f"tolerances.{key}")
            if not values[key] > 0:
                raise ConfigurationError(f"tolerances.{key} must be > 0, got {value!r}", field=f"tolerances.{key}")
        return SolverSettings(**values)

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ConstraintSet:
    """Average transmit power budget and per-band average interference caps (linear)"""

    P_avg: float
    Q_avg: Tuple[float, ...]

    def __post_init__(self):
        if not self.P_avg > 0:
            raise ConfigurationError(f"P_avg must be > 0, got {self.P_avg}", field="P_avg")
        if len(self.Q_avg) == 0:
            raise ConfigurationError("Q_avg needs one entry per band", field="Q_avg")
        for cap in self.Q_avg:
            if not cap > 0:
                raise ConfigurationError(f"Q_avg entries must be > 0, got {cap}", field="Q_avg")
        object.__setattr__(self, "Q_avg", tuple(float(q) for q in self.Q_avg))

    @property
    def M(self) -> int:
        return len(self.Q_avg)

    def is_unconstrained(self, band: int) -> bool:
        return math.isinf(self.Q_avg[band])

    def to_dict(self) -> Dict:
        return {
            "P_avg": self.P_avg,
            "Q_avg": [None if math.isinf(q) else q for q in self.Q_avg],
        }


@dataclass
class DualVariables:
    """
    Lagrange multipliers: lam for the average transmit power constraint and
    mu[i] for the i-th average interference constraint.

    The per-band power rule and Lloyd scores use mu_prime = M * mu.
    """

    lam: float
    mu: np.ndarray

    def __post_init__(self):
        self.lam = float(self.lam)
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if self.lam < 0 or np.any(self.mu < 0):
            raise ConfigurationError("Lagrange multipliers must be non-negative")

    @classmethod
    def from_effective(cls, lam: float, mu_prime) -> "DualVariables":
        mu_prime = np.atleast_1d(np.asarray(mu_prime, dtype=float))
        return cls(lam=lam, mu=mu_prime / mu_prime.size)

    @property
    def M(self) -> int:
        return int(self.mu.size)

    @property
    def mu_prime(self) -> np.ndarray:
        return self.mu * self.M

    def to_dict(self) -> Dict:
        return {
            "lambda": self.lam,
            "mu": self.mu.tolist(),
            "mu_prime": self.mu_prime.tolist(),
        }


@dataclass
class FullCsiSolution:
    """Perfect-CSI allocation over a training set"""

    duals: DualVariables
    powers: np.ndarray  # N x M
    cases: List[str]
    atp: float
    aip: np.ndarray
    capacity: float

    def to_dict(self) -> Dict:
        return {
            "duals": self.duals.to_dict(),
            "cases": list(self.cases),
            "atp": self.atp,
            "aip": self.aip.tolist(),
            "capacity": self.capacity,
        }


@dataclass
class PowerCodebook:
    """L quantized power levels of one band (index 0 is the highest level after sorting)"""

    levels: np.ndarray

    def __post_init__(self):
        self.levels = np.atleast_1d(np.asarray(self.levels, dtype=float))
        if self.levels.ndim != 1 or self.levels.size < 1:
            raise ConfigurationError("A codebook needs at least one level", field="L")
        if np.any(np.isnan(self.levels)) or np.any(self.levels < 0):
            raise ConfigurationError("Codebook levels must be non-negative", field="levels")

    @property
    def L(self) -> int:
        return int(self.levels.size)

    @property
    def B(self) -> Optional[int]:
        n = self.L
        return n.bit_length() - 1 if n & (n - 1) == 0 else None

    def to_dict(self) -> Dict:
        return {"levels": self.levels.tolist()}


@dataclass
class Partition:
    """Region label of every training sample of one band (0-based)"""

    labels: np.ndarray
    region_mass: np.ndarray

    @classmethod
    def from_labels(cls, labels: np.ndarray, L: int) -> "Partition":
        labels = np.asarray(labels, dtype=np.intp)
        mass = np.bincount(labels, minlength=L).astype(float) / max(labels.size, 1)
        return cls(labels=labels, region_mass=mass)

    @property
    def L(self) -> int:
        return int(self.region_mass.size)


@dataclass
class GlaReport:
    """Trace of one Lloyd run"""

    iterations: int
    lagrangian_trace: List[float]
    converged: bool
    capacity: float = 0.0
    empty_levels: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "capacity": self.capacity,
            "final_lagrangian": self.lagrangian_trace[-1] if self.lagrangian_trace else None,
            "empty_levels": list(self.empty_levels),
        }


@dataclass
class CodebookPropertyReport:
    """Outcome of the structural checks on a converged codebook"""

    strictly_descending: bool
    positive_upper_levels: bool
    zero_last_level: Optional[bool]
    boundaries_above_threshold: bool
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict:
        return {
            "strictly_descending": self.strictly_descending,
            "positive_upper_levels": self.positive_upper_levels,
            "zero_last_level": self.zero_last_level,
            "boundaries_above_threshold": self.boundaries_above_threshold,
            "violations": list(self.violations),
        }


@dataclass
class BandDesign:
    """Codebook of one band at fixed multipliers plus its achieved averages"""

    levels: np.ndarray
    labels: np.ndarray
    report: GlaReport
    mu_prime: float
    power: float
    interference: float
    capacity: float


@dataclass
class FeedbackChannel:
    """B independent binary symmetric channel uses; rho[k, j] = Pr(receive k | sent j)"""

    B: int
    q_f: float
    rho: np.ndarray

    @property
    def L(self) -> int:
        return int(self.rho.shape[0])

    @property
    def is_noiseless(self) -> bool:
        return self.q_f == 0.0

    def apply_permutation(self, levels: np.ndarray, permutation: List[int]) -> np.ndarray:
        """Levels in index order when index i carries levels[permutation[i]]"""
        levels = np.asarray(levels, dtype=float)
        if sorted(permutation) != list(range(levels.size)):
            raise ConfigurationError(f"Not a permutation of {levels.size} indices: {permutation}", field="permutation")
        return levels[list(permutation)]

    def to_dict(self) -> Dict:
        return {"B": self.B, "q_f": self.q_f}


@dataclass
class QuantizedSolution:
    """Converged per-band codebooks with their multipliers and achieved averages"""

    method: str
    codebooks: np.ndarray  # M x L
    duals: DualVariables
    labels: np.ndarray  # N x M
    atp: float
    aip: np.ndarray
    capacity: float
    converged: bool
    outer_iterations: int
    band_reports: List[GlaReport] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)
    channel: Optional[FeedbackChannel] = None
    permutation: Optional[List[List[int]]] = None  # per band, index i carries level permutation[i]

    @property
    def M(self) -> int:
        return int(self.codebooks.shape[0])

    @property
    def L(self) -> int:
        return int(self.codebooks.shape[1])

    def codebook(self, band: int) -> PowerCodebook:
        return PowerCodebook(self.codebooks[band])

    def to_dict(self) -> Dict:
        return {
            "method": self.method,
            "levels": self.codebooks.tolist(),
            "duals": self.duals.to_dict(),
            "atp": self.atp,
            "aip": self.aip.tolist(),
            "capacity": self.capacity,
            "converged": self.converged,
            "outer_iterations": self.outer_iterations,
            "band_reports": [r.to_dict() for r in self.band_reports],
            "diagnostics": list(self.diagnostics),
            "feedback": self.channel.to_dict() if self.channel is not None else None,
            "permutation": self.permutation,
        }


@dataclass
class CapacityEstimate:
    """Monte Carlo ergodic capacity in nats per channel use"""

    value: float
    std_error: float
    n_samples: int

    def in_bits(self) -> "CapacityEstimate":
        return CapacityEstimate(
            value=self.value / math.log(2.0),
            std_error=self.std_error / math.log(2.0),
            n_samples=self.n_samples,
        )

    def to_dict(self) -> Dict:
        return {"value": self.value, "std_error": self.std_error, "n_samples": self.n_samples}


@dataclass
class ConstraintEstimate:
    """Empirical average transmit power and per-band average interference"""

    atp: float
    aip: np.ndarray


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Tolerances and tail truncation for the AQPA integrals

    Each panel is integrated with an n- and a 2n-point Gauss-Legendre rule;
    panels whose two estimates differ by more than the tolerance are halved,
    up to `limit` panels in total.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    tail_multiple: float = 25.0
    limit: int = 200
    nodes: int = 16

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigurationError("Quadrature tolerances must be > 0")
        if not self.tail_multiple > 0:
            raise ConfigurationError("Tail truncation must be > 0", field="tail_multiple")
        if self.nodes < 2 or self.limit < 1:
            raise ConfigurationError("Quadrature needs nodes >= 2 and limit >= 1", field="nodes")

    def tightened(self, factor: float) -> "QuadratureSpec":
        return QuadratureSpec(
            abs_tol=self.abs_tol / factor,
            rel_tol=self.rel_tol / factor,
            tail_multiple=self.tail_multiple,
            limit=self.limit * 2,
            nodes=self.nodes * 2,
        )
