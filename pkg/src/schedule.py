"""
Annealing schedules A(s), B(s) and forward / reverse protocols s(t).

Energies are in units of the sampler temperature. The reverse protocol runs
s from 1 down to s_p over tau, holds for rho, and returns to 1 over tau.
"""
import logging
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import InvalidFraction, MalformedSchedule

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 101


class Schedule(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    s: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @model_validator(mode="after")
    def _check_shape(self) -> "Schedule":
        s, a, b = self.s, self.A, self.B
        if not (s.ndim == a.ndim == b.ndim == 1 and len(s) == len(a) == len(b) >= 2):
            raise MalformedSchedule("schedule needs at least two (s, A, B) rows")
        if np.any(np.diff(s) <= 0):
            raise MalformedSchedule("s must be strictly increasing")
        if abs(s[0]) > 1e-12 or abs(s[-1] - 1.0) > 1e-12:
            raise MalformedSchedule("s must run from 0 to 1")
        if abs(a[-1]) > 1e-12:
            raise MalformedSchedule(f"A(1) must be 0, got {a[-1]}")
        if np.any(np.diff(a) > 1e-12) or np.any(np.diff(b) < -1e-12):
            raise MalformedSchedule("A must be non-increasing and B non-decreasing")
        return self

    def a_at(self, s):
        return np.interp(s, self.s, self.A)

    def b_at(self, s):
        return np.interp(s, self.s, self.B)


def default_schedule(points: int = DEFAULT_POINTS) -> Schedule:
    """A(s) = 6 (1 - s)^2, B(s) = 12 s sampled on a uniform grid."""
    s = np.linspace(0.0, 1.0, points)
    return Schedule(s=s, A=6.0 * (1.0 - s) ** 2, B=12.0 * s)


def load_schedule(path: str | Path) -> Schedule:
    """Read a CSV with header s,A,B."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise MalformedSchedule(f"cannot read schedule {path}: {exc}") from exc
    frame.columns = [c.strip() for c in frame.columns]
    if list(frame.columns) != ["s", "A", "B"]:
        raise MalformedSchedule(f"schedule header must be s,A,B, got {','.join(frame.columns)}")
    values = frame.to_numpy(dtype=float)
    return Schedule(s=values[:, 0], A=values[:, 1], B=values[:, 2])


class Phase(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    duration: float
    s_start: float
    s_end: float


class AnnealProtocol(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["forward", "reverse"]
    tau: float = Field(gt=0.0, description="microseconds")
    rho: float = Field(default=0.0, ge=0.0, description="microseconds, reverse only")
    s_pause: float = Field(default=1.0, description="reverse only")
    initial_state: Optional[Tuple[int, ...]] = None

    @property
    def duration(self) -> float:
        return self.tau if self.kind == "forward" else 2.0 * self.tau + self.rho

    @property
    def phases(self) -> List[Phase]:
        if self.kind == "forward":
            return [Phase(name="forward", duration=self.tau, s_start=0.0, s_end=1.0)]
        return [
            Phase(name="reverse", duration=self.tau, s_start=1.0, s_end=self.s_pause),
            Phase(name="pause", duration=self.rho, s_start=self.s_pause, s_end=self.s_pause),
            Phase(name="forward", duration=self.tau, s_start=self.s_pause, s_end=1.0),
        ]

    def s_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "forward":
            return np.clip(t / self.tau, 0.0, 1.0)
        sp, tau, rho = self.s_pause, self.tau, self.rho
        down = 1.0 + (sp - 1.0) * np.clip(t, 0.0, tau) / tau
        up = sp + (1.0 - sp) * np.clip(t - tau - rho, 0.0, tau) / tau
        return np.where(t <= tau, down, np.where(t <= tau + rho, sp, up))

    def sweep_trajectory(self, sweeps_per_microsecond: float) -> np.ndarray:
        """s at the midpoint of each sweep on a uniform time grid."""
        n_sweeps = max(1, int(round(self.duration * sweeps_per_microsecond)))
        times = (np.arange(n_sweeps) + 0.5) * self.duration / n_sweeps
        return self.s_at(times)


def build_forward_protocol(tau: float) -> AnnealProtocol:
    if tau <= 0:
        raise InvalidFraction(f"annealing time must be positive, got {tau}")
    return AnnealProtocol(kind="forward", tau=tau)


def build_reverse_protocol(tau: float, rho: float, s_pause: float, initial=None) -> AnnealProtocol:
    if not 0.0 <= s_pause <= 1.0:
        raise InvalidFraction(f"pause location s_p={s_pause} outside [0, 1]")
    if tau <= 0 or rho < 0:
        raise InvalidFraction(f"need tau > 0 and rho >= 0, got tau={tau}, rho={rho}")
    state = None if initial is None else tuple(int(v) for v in np.asarray(initial).tolist())
    return AnnealProtocol(kind="reverse", tau=tau, rho=rho, s_pause=s_pause, initial_state=state)
