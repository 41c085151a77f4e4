"""Shared value types and deterministic numeric conventions.

Token embeddings are stored as 32-bit floats; similarity scores and all
accumulations use 64-bit floats so that greedy comparisons and oracle
checks stay stable across backends.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRowError


class Role(enum.Enum):
    TEXT_QUERY = "text-query"
    VISION_PRE = "vision-pre"
    VISION_POST = "vision-post"
    AGENT_TEXT = "agent-text"


class SimKind(enum.Enum):
    RAW_TV = "raw-tv"
    RAW_VV = "raw-vv"
    CAL_TV = "calibrated-tv"
    CAL_VV = "calibrated-vv"

    @property
    def calibrated(self):
        return self in (SimKind.CAL_TV, SimKind.CAL_VV)


class Mode(enum.Enum):
    TEXT_VISION = "tv"
    VISION_VISION = "vv"
    MULTIMODAL = "mm"


POOLING_CHOICES = (
    "none",
    "pre-mean", "pre-max", "pre-first",
    "post-mean", "post-max", "post-first",
)

ADAPTIVE_CHOICES = ("off", "bisect", "grid")

DEFAULT_TAU_GRID = (0.05, 0.1, 0.15, 0.2)


def _freeze(arr):
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TokenMatrix:
    """Dense row-major matrix of token embedding rows with a declared role."""

    data: np.ndarray  # (rows, dim) float32, read-only
    role: Role

    @classmethod
    def from_array(cls, data, role):
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {data.shape}")
        if data.shape[1] < 1:
            raise ValueError("embedding width must be >= 1")
        return cls(_freeze(data), role)

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Target x source score matrix, raw or row-calibrated."""

    data: np.ndarray  # (targets, sources) float64, read-only
    kind: SimKind
    temperature: float | None = None

    @classmethod
    def from_array(cls, data, kind, temperature=None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {data.shape}")
        if kind.calibrated and temperature is None:
            raise ValueError("calibrated matrices must carry their temperature")
        if not kind.calibrated and temperature is not None:
            raise ValueError("raw matrices must not carry a temperature")
        return cls(_freeze(data), kind, temperature)

    @property
    def targets(self):
        return self.data.shape[0]

    @property
    def sources(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class CoverageConfig:
    """Selection hyperparameters: temperatures, fusion weight, budget, mode."""

    budget: int
    tau_t: float = 0.02
    tau_v: float = 0.2
    alpha: float = 0.5
    mode: Mode = Mode.MULTIMODAL
    adaptive: str = "off"  # off | bisect | grid
    grid_k: int = 2
    grid: tuple = DEFAULT_TAU_GRID
    pooling: str = "none"
    global_across_crops: bool = False

    def __post_init__(self):
        if self.tau_t <= 0 or self.tau_v <= 0:
            raise ValueError("temperatures must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.adaptive not in ADAPTIVE_CHOICES:
            raise ValueError(f"adaptive must be one of {ADAPTIVE_CHOICES}")
        if self.pooling not in POOLING_CHOICES:
            raise ValueError(f"pooling must be one of {POOLING_CHOICES}")
        if self.adaptive == "grid":
            if self.grid_k < 2:
                raise ValueError("grid_k must be >= 2 (k=2 skips the diagonal)")
            if len(self.grid) == 0:
                raise ValueError("temperature grid must be non-empty")
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise ValueError("temperature grid must be strictly increasing")


@dataclass(frozen=True)
class SelectionResult:
    """Ordered selected source indices plus per-step gains and objectives."""

    selected: tuple
    gains: tuple
    objective_tv: float
    objective_vv: float
    objective_fused: float
    effective_tau_v: float
    gain_evaluations: int = 0


def normalize(matrix, epsilon=1e-8):
    """Scale every row of a TokenMatrix to unit L2 norm.

    Rows with norm below ``epsilon`` are rejected rather than silently
    zero-filled.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d64 = matrix.data.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", d64, d64))
    bad = np.flatnonzero(norms < epsilon)
    if bad.size:
        i = int(bad[0])
        raise DegenerateRowError(i, float(norms[i]))
    if matrix.rows == 0:
        return matrix
    out = (d64 / norms[:, None]).astype(np.float32)
    return TokenMatrix.from_array(out, matrix.role)
