"""
Fading distributions and reproducible Monte Carlo channel sample sets
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConfigurationError, UnsupportedOperationError
from .helpers import validate_count, validate_positive

logger = logging.getLogger(__name__)

ROLE_G0 = 0  # SU transmitter -> PU receiver
ROLE_G1 = 1  # SU transmitter -> SU receiver
MAX_SEED = 2**64 - 1


class FadingKind(str, Enum):
    EXPONENTIAL = "exponential"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class FadingModel:
    """Power-gain distribution of one channel on one band"""

    kind: FadingKind
    mean_value: float = 1.0
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == FadingKind.EXPONENTIAL:
            object.__setattr__(self, "mean_value", validate_positive(self.mean_value, "mean"))
        else:
            if len(self.values) == 0:
                raise ConfigurationError("Deterministic model needs at least one value", field="values")
            try:
                values = tuple(float(v) for v in self.values)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"Deterministic values must be numbers: {exc}", field="values") from exc
            if any(not v >= 0 for v in values):
                raise ConfigurationError("Deterministic values must be non-negative", field="values")
            object.__setattr__(self, "values", values)

    @classmethod
    def exponential(cls, mean: float = 1.0) -> "FadingModel":
        return cls(kind=FadingKind.EXPONENTIAL, mean_value=mean)

    @classmethod
    def deterministic(cls, values: Sequence[float]) -> "FadingModel":
        return cls(kind=FadingKind.DETERMINISTIC, values=tuple(values))

    @property
    def has_density(self) -> bool:
        return self.kind == FadingKind.EXPONENTIAL

    @property
    def mean(self) -> float:
        if self.kind == FadingKind.EXPONENTIAL:
            return self.mean_value
        return float(np.mean(self.values))

    def draw(self, uniforms: np.ndarray) -> np.ndarray:
        """Map U[0,1) variates to gains (inverse CDF; deterministic lists cycle)"""
        if self.kind == FadingKind.EXPONENTIAL:
            return -self.mean_value * np.log1p(-uniforms)
        return np.resize(np.asarray(self.values, dtype=float), uniforms.shape)

    def pdf(self, g):
        """Probability density at g (zero for g < 0)"""
        self._require_density("pdf")
        g = np.asarray(g, dtype=float)
        density = np.where(g >= 0, np.exp(-np.maximum(g, 0.0) / self.mean_value) / self.mean_value, 0.0)
        return float(density) if density.ndim == 0 else density

    def survival(self, g):
        """Pr(G > g)"""
        self._require_density("survival")
        g = np.maximum(np.asarray(g, dtype=float), 0.0)
        return np.exp(-g / self.mean_value)

    def interval_mass(self, a, b):
        """Pr(a <= G < b) for 0 <= a <= b (b may be inf)"""
        return self.survival(a) - self.survival(b)

    def interval_first_moment(self, a, b):
        """E[G; a <= G < b] for 0 <= a <= b (b may be inf)"""
        self._require_density("interval_first_moment")
        m = self.mean_value
        a = np.maximum(np.asarray(a, dtype=float), 0.0)
        b = np.maximum(np.asarray(b, dtype=float), 0.0)
        with np.errstate(invalid="ignore"):
            upper = np.where(np.isinf(b), 0.0, (b + m) * np.exp(-b / m))
        return (a + m) * np.exp(-a / m) - upper

    def to_dict(self) -> Dict:
        if self.kind == FadingKind.EXPONENTIAL:
            return {"kind": self.kind.value, "mean": self.mean_value}
        return {"kind": self.kind.value, "values": list(self.values)}

    @classmethod
    def from_dict(cls, data: Dict) -> "FadingModel":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigurationError("Fading model needs a 'kind'", field="fading")
        kind = str(data["kind"]).lower()
        if kind == FadingKind.EXPONENTIAL.value:
            return cls.exponential(data.get("mean", 1.0))
        if kind == FadingKind.DETERMINISTIC.value:
            return cls.deterministic(data.get("values", ()))
        raise ConfigurationError(f"Unknown fading kind '{data['kind']}'", field="fading")

    def _require_density(self, operation: str):
        if not self.has_density:
            raise UnsupportedOperationError(
                f"{operation} is undefined for a deterministic fading model"
            )


@dataclass(frozen=True)
class ChannelModels:
    """One fading model per (role, band)"""

    g0: Tuple[FadingModel, ...]
    g1: Tuple[FadingModel, ...]

    def __post_init__(self):
        if len(self.g0) != len(self.g1) or len(self.g0) == 0:
            raise ConfigurationError("g0 and g1 need one model per band", field="fading")

    @classmethod
    def uniform(cls, model: FadingModel, M: int) -> "ChannelModels":
        return cls(g0=(model,) * M, g1=(model,) * M)

    @classmethod
    def rayleigh(cls, M: int) -> "ChannelModels":
        """Unit-mean exponential power gains on every channel"""
        return cls.uniform(FadingModel.exponential(1.0), M)

    @property
    def M(self) -> int:
        return len(self.g0)

    def band(self, i: int) -> Tuple[FadingModel, FadingModel]:
        return self.g0[i], self.g1[i]

    def to_dict(self) -> Dict:
        return {
            "g0": [m.to_dict() for m in self.g0],
            "g1": [m.to_dict() for m in self.g1],
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict], M: int) -> "ChannelModels":
        """Accept {"g0": model|[models], "g1": model|[models]}; missing roles are Rayleigh"""
        if data is None:
            return cls.rayleigh(M)
        roles = {}
        for role in ("g0", "g1"):
            spec = data.get(role)
            if spec is None:
                roles[role] = (FadingModel.exponential(1.0),) * M
            elif isinstance(spec, list):
                if len(spec) != M:
                    raise ConfigurationError(
                        f"fading.{role} needs {M} entries, got {len(spec)}", field=f"fading.{role}"
                    )
                roles[role] = tuple(FadingModel.from_dict(s) for s in spec)
            else:
                roles[role] = (FadingModel.from_dict(spec),) * M
        return cls(g0=roles["g0"], g1=roles["g1"])


@dataclass(frozen=True)
class ChannelSample:
    """One realization of (g0, g1) across the M bands"""

    g0: np.ndarray
    g1: np.ndarray


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """N channel realizations stored as read-only N x M arrays"""

    g0: np.ndarray
    g1: np.ndarray
    seed: int
    models: ChannelModels

    @property
    def N(self) -> int:
        return int(self.g0.shape[0])

    @property
    def M(self) -> int:
        return int(self.g0.shape[1])

    def band(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.g0[:, i], self.g1[:, i]

    def sample(self, k: int) -> ChannelSample:
        return ChannelSample(g0=self.g0[k], g1=self.g1[k])

    @property
    def samples(self) -> List[ChannelSample]:
        return list(iter(self))

    def __len__(self) -> int:
        return self.N

    def __iter__(self) -> Iterator[ChannelSample]:
        for k in range(self.N):
            yield self.sample(k)

    @classmethod
    def from_arrays(cls, g0, g1, seed: int = 0, models: Optional[ChannelModels] = None) -> "TrainingSet":
        """Wrap explicit gain arrays (1-D arrays are treated as one band)"""
        g0 = np.array(g0, dtype=float, ndmin=1)
        g1 = np.array(g1, dtype=float, ndmin=1)
        if g0.ndim == 1:
            g0 = g0[:, None]
        if g1.ndim == 1:
            g1 = g1[:, None]
        if g0.shape != g1.shape or g0.shape[0] < 1:
            raise ConfigurationError("g0 and g1 must have the same non-empty N x M shape")
        if np.any(g0 < 0) or np.any(g1 < 0):
            raise ConfigurationError("Channel power gains must be non-negative")
        g0.setflags(write=False)
        g1.setflags(write=False)
        return cls(g0=g0, g1=g1, seed=seed, models=models or ChannelModels.rayleigh(g0.shape[1]))


def channel_stream(seed: int, band: int, role: int) -> np.random.Generator:
    """Philox generator for one (band, role) substream"""
    sequence = np.random.SeedSequence(seed, spawn_key=(band, role))
    return np.random.Generator(np.random.Philox(sequence))


def sample_training_set(
    models: Union[ChannelModels, FadingModel, None],
    M: int,
    N: int,
    seed: int,
) -> TrainingSet:
    """
    Draw N independent channel realizations across M bands

    Args:
        models: ChannelModels, a single FadingModel for every channel, or None for Rayleigh
        M (int): Number of bands
        N (int): Number of samples
        seed (int): 64-bit seed; substreams are keyed by (band, role)

    Returns:
        TrainingSet: Read-only sample set, bit-identical for identical arguments
    """
    M = validate_count(M, "M")
    N = validate_count(N, "N")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise ConfigurationError(f"seed must be an integer in [0, 2^64), got {seed!r}", field="seed")

    if models is None:
        models = ChannelModels.rayleigh(M)
    elif isinstance(models, FadingModel):
        models = ChannelModels.uniform(models, M)
    if models.M != M:
        raise ConfigurationError(f"Fading models cover {models.M} bands, expected {M}", field="fading")

    g0 = np.empty((N, M))
    g1 = np.empty((N, M))
    for band in range(M):
        for role, target, model in ((ROLE_G0, g0, models.g0[band]), (ROLE_G1, g1, models.g1[band])):
            uniforms = channel_stream(int(seed), band, role).random(N)
            target[:, band] = model.draw(uniforms)

    logger.info(f"Sampled training set: N={N}, M={M}, seed={seed}")
    return TrainingSet.from_arrays(g0, g1, seed=int(seed), models=models)


def pdf_eval(model: FadingModel, g: float) -> float:
    """
    Density of a fading model at g

    Raises:
        UnsupportedOperationError: For deterministic models
    """
    return model.pdf(g)
