import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class Selection(BaseModel):
    bits: Tuple[int, ...]
    value: float
    cardinality: int

    @model_validator(mode="after")
    def _check_cardinality(self) -> "Selection":
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0/1")
        if self.cardinality != sum(self.bits):
            raise ValueError(f"cardinality {self.cardinality} != popcount {sum(self.bits)}")
        return self

    @classmethod
    def from_bits(cls, bits, value: float) -> "Selection":
        bits = tuple(int(b) for b in np.asarray(bits).tolist())
        return cls(bits=bits, value=float(value), cardinality=sum(bits))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.int8)


class SolverResult(BaseModel):
    solver: str
    best: Selection
    objective_calls: int = Field(ge=0)
    trace: List[float] = Field(default_factory=list)
    elapsed_model_time: float = Field(default=0.0, ge=0.0, description="microseconds under the solver's cost model")
    wall_time_s: Optional[float] = None
    extra: Dict[str, float | int | str | bool | None] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_trace(self) -> "SolverResult":
        trace = self.trace
        if any(later > earlier + 1e-9 for earlier, later in zip(trace, trace[1:])):
            raise ValueError("trace must be non-increasing")
        if trace and abs(trace[-1] - self.best.value) > 1e-9:
            raise ValueError("final trace entry must equal the best value")
        return self


class TtsEstimate(BaseModel):
    p: float = Field(ge=0.0, le=1.0)
    alpha: float = Field(default=0.99, gt=0.0, lt=1.0)
    t_run: float = Field(gt=0.0, description="microseconds")
    tts: float = Field(description="microseconds; inf when no read succeeded")
    n_reads: int = Field(ge=0)
    n_success: int = Field(ge=0)

    @property
    def solved(self) -> bool:
        return math.isfinite(self.tts)


class GridPointResult(BaseModel):
    instance_id: str
    n: int
    solver: str
    chain_strength: Optional[float] = None
    tau_us: Optional[float] = None
    rho_us: Optional[float] = None
    s_pause: Optional[float] = None
    ga_iterations: Optional[int] = None
    reads: int
    successes: int
    p: float
    t_run_us: float
    tts_us: float
    min_energy: float
    unbroken_chain_fraction: Optional[float] = None


class InstanceBest(BaseModel):
    instance_id: str
    n: int
    best_known: float
    best_known_provenance: str
    solved_by_greedy: bool = False
    skipped: bool = False
    best: Optional[GridPointResult] = None
    best_by_tau: Dict[str, float] = Field(default_factory=dict)

    @property
    def min_tts(self) -> float:
        return self.best.tts_us if self.best is not None else math.inf


class SizeSummary(BaseModel):
    n: int
    n_instances: int
    n_evaluated: int
    n_unsolved: int
    n_solved_by_greedy: int = 0
    median_tts_us: Optional[float] = None
    p30_tts_us: Optional[float] = None
    p70_tts_us: Optional[float] = None
    optimal_chain_strengths: List[float] = Field(default_factory=list)
    optimal_pause_points: List[float] = Field(default_factory=list)
    median_tts_by_tau: Dict[str, Optional[float]] = Field(default_factory=dict)

    @property
    def unsolved_text(self) -> str:
        return f"{self.n_unsolved} of {self.n_evaluated} unsolved"


class BenchReport(BaseModel):
    solver: str
    protocol: str
    success_definition: str = "value <= best_known + 1e-9"
    alpha: float = 0.99
    instances: List[InstanceBest] = Field(default_factory=list)
    points: List[GridPointResult] = Field(default_factory=list)
    sizes: List[SizeSummary] = Field(default_factory=list)

    @field_validator("instances")
    @classmethod
    def _unique_ids(cls, value: List[InstanceBest]) -> List[InstanceBest]:
        ids = [item.instance_id for item in value]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate instance ids in report")
        return value
