"""
Portfolio QUBO construction.

    O(q) = sum_i a_i q_i + sum_{i<j} b_ij q_i q_j

a_i rewards (negative) or penalizes (positive) an asset on a standalone basis
from its Sharpe bucket, b_ij penalizes correlated pairs from their correlation
bucket. The Ising image under s = 2q - 1 carries an offset so both energies
agree exactly.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import DegenerateRange, LengthMismatch, MalformedInstance
from src.market import AssetStats, GbmParams
from src.utils import load_json_file, save_json_result

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9


class BucketMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    sharpe_coeffs: List[float] = Field(default=[15, 12, 9, 6, 3, 0, -3, -6, -9, -12, -15])
    corr_breakpoints: List[float] = Field(default=[-0.25, -0.15, -0.05, 0.05, 0.15, 0.25])
    corr_coeffs: List[float] = Field(default=[-5, -3, -1, 0, 1, 3, 5])

    @field_validator("sharpe_coeffs")
    @classmethod
    def _non_empty(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("sharpe_coeffs must not be empty")
        return value

    @model_validator(mode="after")
    def _check_breakpoints(self) -> "BucketMap":
        breaks = self.corr_breakpoints
        if any(b >= c for b, c in zip(breaks, breaks[1:])):
            raise ValueError("corr_breakpoints must be strictly increasing")
        if len(self.corr_coeffs) != len(breaks) + 1:
            raise ValueError("corr_coeffs needs exactly one more entry than corr_breakpoints")
        return self

    def sharpe_buckets(self, sharpe: np.ndarray) -> np.ndarray:
        """Equal-width bucket index over [min, max], worst first; the last bucket is closed."""
        sharpe = np.asarray(sharpe, dtype=float)
        if not np.all(np.isfinite(sharpe)):
            raise DegenerateRange("Sharpe ratios must be finite")
        lo, hi = float(sharpe.min()), float(sharpe.max())
        if hi <= lo:
            raise DegenerateRange(f"all Sharpe ratios equal ({lo}); buckets undefined")
        n_buckets = len(self.sharpe_coeffs)
        index = np.floor((sharpe - lo) / (hi - lo) * n_buckets).astype(int)
        return np.clip(index, 0, n_buckets - 1)

    def sharpe_coefficients(self, sharpe: np.ndarray) -> np.ndarray:
        return np.asarray(self.sharpe_coeffs, dtype=float)[self.sharpe_buckets(sharpe)]

    def correlation_coefficient(self, rho: float | np.ndarray) -> np.ndarray:
        """Coefficient of the half-open interval [lo, hi) holding rho; the top interval is closed at 1."""
        index = np.searchsorted(np.asarray(self.corr_breakpoints), rho, side="right")
        return np.asarray(self.corr_coeffs, dtype=float)[index]


class PenaltyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    target: int = Field(ge=0)
    strength: float = Field(gt=0.0)


class InstanceMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    instance_id: Optional[str] = None
    seed: Optional[int] = None
    gbm: Optional[GbmParams] = None
    rng_algorithm: Optional[str] = None
    delta_shift: float = 0.0
    penalty: Optional[PenaltyConfig] = None
    penalty_constant: float = 0.0


class QuboInstance(BaseModel):
    """a has length n; b is n x n strictly upper triangular."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(ge=1)
    a: np.ndarray
    b: np.ndarray
    metadata: InstanceMetadata = InstanceMetadata()

    @model_validator(mode="after")
    def _check_shapes(self) -> "QuboInstance":
        if self.a.shape != (self.n,) or self.b.shape != (self.n, self.n):
            raise MalformedInstance(f"coefficient shapes {self.a.shape}, {self.b.shape} do not match n={self.n}")
        if np.any(np.tril(self.b) != 0):
            raise MalformedInstance("b must be strictly upper triangular (no self-coupling, i < j)")
        return self

    @classmethod
    def from_coefficients(cls, a, b_upper, metadata: Optional[InstanceMetadata] = None) -> "QuboInstance":
        """Build from a and any square b; only entries above the diagonal are kept."""
        a = np.asarray(a, dtype=float)
        b = np.triu(np.asarray(b_upper, dtype=float), k=1)
        return cls(n=len(a), a=a, b=b, metadata=metadata or InstanceMetadata())

    @property
    def constant(self) -> float:
        return self.metadata.penalty_constant

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric matrix with b_ij on both sides of the diagonal."""
        return self.b + self.b.T

    def with_metadata(self, **updates: Any) -> "QuboInstance":
        return self.model_copy(update={"metadata": self.metadata.model_copy(update=updates)})


class IsingInstance(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    h: np.ndarray
    J: np.ndarray
    offset: float = 0.0

    def coupling_matrix(self) -> np.ndarray:
        return self.J + self.J.T


def bucketize(stats: AssetStats, bucket_map: BucketMap = BucketMap(), metadata: Optional[InstanceMetadata] = None) -> QuboInstance:
    a = bucket_map.sharpe_coefficients(stats.sharpe)
    b = np.triu(bucket_map.correlation_coefficient(stats.corr), k=1)
    return QuboInstance(n=len(a), a=a, b=b, metadata=metadata or InstanceMetadata())


def add_penalty(q: QuboInstance, cfg: PenaltyConfig) -> QuboInstance:
    """Fold P (M - sum q)^2 into the coefficients; P M^2 goes to the metadata constant."""
    if cfg.target > q.n:
        raise MalformedInstance(f"penalty target {cfg.target} exceeds n={q.n}")
    p, m = cfg.strength, cfg.target
    a = q.a + p * (1 - 2 * m)
    b = q.b + np.triu(np.full((q.n, q.n), 2 * p), k=1)
    metadata = q.metadata.model_copy(update={
        "penalty": cfg,
        "penalty_constant": q.metadata.penalty_constant + p * m * m,
    })
    return QuboInstance(n=q.n, a=a, b=b, metadata=metadata)


def shift_desirability(q: QuboInstance, delta: float) -> QuboInstance:
    if delta == 0:
        return q
    metadata = q.metadata.model_copy(update={"delta_shift": q.metadata.delta_shift + delta})
    return QuboInstance(n=q.n, a=q.a + delta, b=q.b, metadata=metadata)


def qubo_to_ising(q: QuboInstance) -> IsingInstance:
    # s = 2q - 1  =>  q = (s + 1) / 2
    coupling = q.coupling_matrix()
    h = q.a / 2.0 + coupling.sum(axis=1) / 4.0
    J = q.b / 4.0
    offset = q.a.sum() / 2.0 + q.b.sum() / 4.0 + q.constant
    return IsingInstance(n=q.n, h=h, J=J, offset=float(offset))


def _check_length(n: int, vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector)
    if vector.shape[-1] != n:
        raise LengthMismatch(f"expected vectors of length {n}, got {vector.shape[-1]}")
    return vector


def evaluate(q: QuboInstance, bits) -> float:
    x = _check_length(q.n, bits).astype(float)
    return float(q.a @ x + x @ q.b @ x + q.constant)


def evaluate_many(q: QuboInstance, bits_matrix) -> np.ndarray:
    x = np.atleast_2d(_check_length(q.n, bits_matrix)).astype(float)
    return x @ q.a + np.einsum("ri,ij,rj->r", x, q.b, x) + q.constant


def evaluate_ising(m: IsingInstance, spins) -> float:
    s = _check_length(m.n, spins).astype(float)
    return float(m.h @ s + s @ m.J @ s)


def evaluate_ising_many(m: IsingInstance, spins_matrix) -> np.ndarray:
    s = np.atleast_2d(_check_length(m.n, spins_matrix)).astype(float)
    return s @ m.h + np.einsum("ri,ij,rj->r", s, m.J, s)


def all_bitstrings(n: int) -> np.ndarray:
    """Every bitstring of length n in lexicographic order, first variable most significant."""
    index = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((index[:, None] >> shifts) & 1).astype(np.int8)


def enumerate_values(q: QuboInstance) -> np.ndarray:
    if q.n > 24:
        raise MalformedInstance(f"full enumeration limited to n <= 24, got {q.n}")
    return evaluate_many(q, all_bitstrings(q.n))


def instance_to_json(q: QuboInstance) -> Dict[str, Any]:
    rows, cols = np.nonzero(q.b)
    return {
        "n": q.n,
        "a": q.a.tolist(),
        "b": [{"i": int(i), "j": int(j), "v": float(q.b[i, j])} for i, j in zip(rows, cols)],
        "metadata": q.metadata.model_dump(mode="json"),
    }


def instance_from_json(data: Dict[str, Any]) -> QuboInstance:
    try:
        n = int(data["n"])
        a = np.asarray(data["a"], dtype=float)
        entries = data.get("b", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInstance(f"instance file is missing fields: {exc}") from exc
    if a.shape != (n,):
        raise MalformedInstance(f"'a' has {a.size} entries, expected {n}")
    b = np.zeros((n, n))
    seen = set()
    for entry in entries:
        i, j, v = int(entry["i"]), int(entry["j"]), float(entry["v"])
        if i >= j:
            raise MalformedInstance(f"coupling ({i}, {j}) must satisfy i < j")
        if not (0 <= i < n and 0 <= j < n):
            raise MalformedInstance(f"coupling ({i}, {j}) out of range for n={n}")
        if (i, j) in seen:
            raise MalformedInstance(f"duplicate coupling ({i}, {j})")
        seen.add((i, j))
        b[i, j] = v
    metadata = InstanceMetadata.model_validate(data.get("metadata") or {})
    return QuboInstance(n=n, a=a, b=b, metadata=metadata)


def save_instance(q: QuboInstance, path: str | Path) -> None:
    save_json_result(instance_to_json(q), path)


def load_instance(path: str | Path) -> QuboInstance:
    return instance_from_json(load_json_file(path))
