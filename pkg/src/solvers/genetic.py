"""
Mutation-only genetic algorithm for unconstrained portfolio QUBOs.

Each generation keeps the K best chromosomes and replaces the population with
m mutants of each (L = m K). No crossover is used: with chromosomes this short
recombination adds little over mutation.
"""
import logging
import time
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import InvalidConfig, LengthMismatch
from src.models import Selection, SolverResult
from src.qubo import TOLERANCE, QuboInstance, evaluate_many

logger = logging.getLogger(__name__)

REFERENCE_CALL_US = 30.0
REFERENCE_N = 60


class GaConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    population: int = Field(default=100, ge=1)
    survivors: int = Field(default=20, ge=1)
    offspring_per_survivor: int = Field(default=5, ge=1)
    mutation: Dict[int, float] = Field(default_factory=lambda: {1: 0.8, 2: 0.2})
    max_iterations: int = Field(default=10_000, ge=0)
    max_objective_calls: Optional[int] = Field(default=None, ge=1)
    seed: int = 0
    target_value: Optional[float] = None

    @field_validator("mutation")
    @classmethod
    def _check_mutation(cls, value: Dict[int, float]) -> Dict[int, float]:
        if not value or any(k < 0 for k in value) or any(p < 0 for p in value.values()):
            raise ValueError("mutation maps non-negative flip counts to non-negative probabilities")
        if abs(sum(value.values()) - 1.0) > 1e-9:
            raise ValueError("mutation probabilities must sum to 1")
        return value

    @model_validator(mode="after")
    def _check_sizes(self) -> "GaConfig":
        if self.population != self.offspring_per_survivor * self.survivors:
            raise ValueError(
                f"population L={self.population} must equal m*K="
                f"{self.offspring_per_survivor}*{self.survivors}"
            )
        return self


def call_cost_us(n: int) -> float:
    """Modeled cost of one objective call, proportional to N^2."""
    return REFERENCE_CALL_US * (n / REFERENCE_N) ** 2


def _mutate(parents: np.ndarray, mutation: Dict[int, float], rng: np.random.Generator) -> np.ndarray:
    children = parents.copy()
    n_genes = parents.shape[1]
    flips, probs = zip(*sorted(mutation.items()))
    counts = rng.choice(np.asarray(flips), size=len(children), p=np.asarray(probs))
    for row, count in enumerate(counts):
        count = min(int(count), n_genes)
        if count:
            genes = rng.choice(n_genes, size=count, replace=False)
            children[row, genes] ^= 1
    return children


def _rank(population: np.ndarray, values: np.ndarray):
    order = np.argsort(values, kind="stable")
    return population[order], values[order]


def ga_solve(
    q: QuboInstance,
    cfg: GaConfig = GaConfig(),
    initial: Optional[np.ndarray] = None,
    initial_population: Optional[np.ndarray] = None,
) -> SolverResult:
    """Run the GA; `initial` seeds one chromosome (e.g. the greedy solution)."""
    if cfg.survivors > cfg.population:
        raise InvalidConfig("survivors cannot exceed population")
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)

    if initial_population is not None:
        population = np.asarray(initial_population, dtype=np.int8).copy()
        if population.shape != (cfg.population, q.n):
            raise LengthMismatch(f"initial population must have shape {(cfg.population, q.n)}")
    else:
        population = rng.integers(0, 2, size=(cfg.population, q.n), dtype=np.int8)
    if initial is not None:
        initial = np.asarray(initial, dtype=np.int8)
        if initial.shape != (q.n,):
            raise LengthMismatch(f"initial chromosome must have length {q.n}")
        population[0] = initial

    values = evaluate_many(q, population)
    calls = len(population)
    population, values = _rank(population, values)
    best_bits, best_value = population[0].copy(), float(values[0])
    trace = [best_value]

    def done() -> bool:
        if cfg.target_value is not None and best_value <= cfg.target_value + TOLERANCE:
            return True
        return cfg.max_objective_calls is not None and calls + cfg.population > cfg.max_objective_calls

    iteration = 0
    while iteration < cfg.max_iterations and not done():
        parents = np.repeat(population[:cfg.survivors], cfg.offspring_per_survivor, axis=0)
        population = _mutate(parents, cfg.mutation, rng)
        values = evaluate_many(q, population)
        calls += len(population)
        population, values = _rank(population, values)
        if values[0] < best_value - TOLERANCE:
            best_bits, best_value = population[0].copy(), float(values[0])
        trace.append(best_value)
        iteration += 1

    logger.debug("GA finished after %d iterations, %d calls, best %.3f", iteration, calls, best_value)
    return SolverResult(
        solver="ga",
        best=Selection.from_bits(best_bits, best_value),
        objective_calls=calls,
        trace=trace,
        elapsed_model_time=calls * call_cost_us(q.n),
        wall_time_s=time.perf_counter() - started,
        extra={"iterations": iteration, "final_population_best": float(values[0])},
    )
