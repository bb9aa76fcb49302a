"""
Classical transverse-field surrogate for forward and reverse annealing.

Spin-vector Monte Carlo: each qubit is a planar rotor at angle theta in
[0, pi] with energy

    E = -A(s) sum_q sin(theta_q) + B(s) [sum_q h_q cos(theta_q) + sum_qr J_qr cos(theta_q) cos(theta_r)]

updated by single-rotor Metropolis moves with uniformly drawn proposals while
s follows the protocol. Each sweep also offers every chain a reflection
theta -> pi - theta of all its rotors, which flips the logical spin without
crossing the chain bonds. A read ends with s_q = sign(cos theta_q).
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from src.chimera import EmbeddedIsing, chain_break_fraction, decode_majority
from src.errors import DimensionMismatch, MissingInitialState
from src.qubo import evaluate_ising_many
from src.schedule import AnnealProtocol, Schedule
from src.utils import bits_to_hex, chunked, derive_seed

logger = logging.getLogger(__name__)

H_RANGE = 2.0
J_RANGE = 1.0


class EngineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sweeps_per_microsecond: int = Field(default=100, ge=1)
    temperature: float = Field(default=1.0, ge=0.0, description="schedule energy units")
    seed: int = 0
    reads_per_batch: int = Field(default=1500, ge=1)
    gauges: int = Field(default=1, ge=1)
    randomize_gauges: bool = True
    autoscale: bool = True
    chunk_size: int = Field(default=250, ge=1)
    n_jobs: int = 1
    chain_flips: bool = Field(default=True, description="one reflection move per chain per sweep")

    @property
    def total_reads(self) -> int:
        return self.reads_per_batch * self.gauges


class ReadSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    readouts: np.ndarray
    decoded: np.ndarray
    energies: np.ndarray
    gauge_index: np.ndarray
    broken_chain_fraction: np.ndarray
    t_run_us: float

    @property
    def n_reads(self) -> int:
        return len(self.energies)

    def best_index(self) -> int:
        return int(np.argmin(self.energies))

    def unbroken_fraction(self) -> float:
        """Fraction of chains, over all reads, whose qubits agree."""
        if not self.n_reads:
            return 1.0
        return float(1.0 - self.broken_chain_fraction.mean())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "read_index": np.arange(self.n_reads),
            "gauge_index": self.gauge_index,
            "energy": self.energies,
            "cardinality": self.decoded.sum(axis=1).astype(int),
            "bitstring": [bits_to_hex(row) for row in self.decoded],
            "t_run_us": np.full(self.n_reads, self.t_run_us),
        })


def save_readset(reads: ReadSet, path: str | Path) -> None:
    reads.to_frame().to_csv(path, index=False)


def apply_gauge(e: EmbeddedIsing, gauge) -> EmbeddedIsing:
    """Spin-reversal transform: h'_q = g_q h_q, J'_qr = g_q g_r J_qr."""
    g = np.asarray(gauge)
    if g.shape != (e.num_qubits,):
        raise DimensionMismatch(f"gauge must cover {e.num_qubits} qubits, got shape {g.shape}")
    if len(e.edges):
        weights = e.weights * g[e.edges[:, 0]] * g[e.edges[:, 1]]
    else:
        weights = e.weights.copy()
    return e.model_copy(update={"h": e.h * g, "weights": weights})


def _neighbour_table(e: EmbeddedIsing, weights: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    nbrs: List[list] = [[] for _ in range(e.num_qubits)]
    ws: List[list] = [[] for _ in range(e.num_qubits)]
    for (p, r), w in zip(e.edges.tolist(), weights.tolist()):
        nbrs[p].append(r)
        ws[p].append(w)
        nbrs[r].append(p)
        ws[r].append(w)
    return [np.asarray(n, dtype=np.int64) for n in nbrs], [np.asarray(w, dtype=float) for w in ws]


class ChainMove(NamedTuple):
    members: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    weights: np.ndarray


def _chain_table(e: EmbeddedIsing, weights: np.ndarray) -> List[ChainMove]:
    """Per chain: its qubit positions and the couplers that leave it."""
    length = e.embedding.chain_length
    owner = np.arange(e.num_qubits) // length
    moves = []
    for c in range(e.embedding.n_logical):
        members = np.arange(c * length, (c + 1) * length)
        if len(e.edges):
            p, r = e.edges[:, 0], e.edges[:, 1]
            leaving_p = (owner[p] == c) & (owner[r] != c)
            leaving_r = (owner[r] == c) & (owner[p] != c)
            inner = np.concatenate([p[leaving_p], r[leaving_r]])
            outer = np.concatenate([r[leaving_p], p[leaving_r]])
            w = np.concatenate([weights[leaving_p], weights[leaving_r]])
        else:
            inner = outer = np.empty(0, dtype=np.int64)
            w = np.empty(0)
        moves.append(ChainMove(members, inner, outer, w))
    return moves


def _accept(delta: np.ndarray, uniform: np.ndarray, temperature: float) -> np.ndarray:
    if temperature > 0:
        return (delta <= 0) | (uniform < np.exp(-np.maximum(delta, 0.0) / temperature))
    return delta <= 0


def _anneal_chunk(
    h: np.ndarray,
    nbrs: List[np.ndarray],
    ws: List[np.ndarray],
    a_values: np.ndarray,
    b_values: np.ndarray,
    temperature: float,
    read_seeds: Sequence[int],
    initial_theta: Optional[np.ndarray],
    chains: Sequence[ChainMove] = (),
) -> np.ndarray:
    generators = [np.random.default_rng(seed) for seed in read_seeds]
    n_qubits = len(h)
    if initial_theta is None:
        theta = np.stack([g.uniform(0.0, math.pi, n_qubits) for g in generators])
    else:
        theta = np.tile(initial_theta, (len(generators), 1))
    cos, sin = np.cos(theta), np.sin(theta)

    for a, b in zip(a_values, b_values):
        draws = np.stack([g.random((2, n_qubits)) for g in generators])
        proposal = math.pi * draws[:, 0, :]
        cos_new, sin_new = np.cos(proposal), np.sin(proposal)
        uniform = draws[:, 1, :]
        for q in range(n_qubits):
            field = h[q] + cos[:, nbrs[q]] @ ws[q]
            delta = -a * (sin_new[:, q] - sin[:, q]) + b * field * (cos_new[:, q] - cos[:, q])
            accept = _accept(delta, uniform[:, q], temperature)
            cos[:, q] = np.where(accept, cos_new[:, q], cos[:, q])
            sin[:, q] = np.where(accept, sin_new[:, q], sin[:, q])

        if not chains:
            continue
        # theta -> pi - theta on a whole chain keeps sin and the chain bonds fixed
        chain_uniform = np.stack([g.random(len(chains)) for g in generators])
        for c, move in enumerate(chains):
            local = cos[:, move.members] @ h[move.members]
            if len(move.weights):
                local = local + (cos[:, move.inner] * cos[:, move.outer]) @ move.weights
            accept = _accept(-2.0 * b * local, chain_uniform[:, c], temperature)
            cos[:, move.members] = np.where(accept[:, None], -cos[:, move.members], cos[:, move.members])

    return np.where(cos >= 0, 1, -1).astype(np.int8)


class Sampler(Protocol):
    def sample(
        self,
        e: EmbeddedIsing,
        protocol: AnnealProtocol,
        schedule: Schedule,
        cfg: EngineConfig,
        n_reads: Optional[int] = None,
    ) -> ReadSet: ...


class SpinVectorMonteCarlo:
    """Default back-end; reads are independent given their seeds."""

    def sample(
        self,
        e: EmbeddedIsing,
        protocol: AnnealProtocol,
        schedule: Schedule,
        cfg: EngineConfig,
        n_reads: Optional[int] = None,
    ) -> ReadSet:
        n_reads = cfg.total_reads if n_reads is None else n_reads
        if n_reads < 1:
            raise DimensionMismatch(f"need at least one read, got {n_reads}")
        if e.num_qubits != len(e.embedding.qubits) or e.logical.n != e.embedding.n_logical:
            raise DimensionMismatch("embedded problem does not match its embedding")
        initial_spins = self._initial_spins(e, protocol)

        trajectory = protocol.sweep_trajectory(cfg.sweeps_per_microsecond)
        a_values, b_values = schedule.a_at(trajectory), schedule.b_at(trajectory)

        gauge_index = np.arange(n_reads) // cfg.reads_per_batch % cfg.gauges
        gauges = {}
        jobs = []
        chunks = []
        for batch, start in enumerate(range(0, n_reads, cfg.reads_per_batch)):
            index = batch % cfg.gauges
            gauge = gauges.setdefault(index, self._gauge(e.num_qubits, index, cfg))
            problem = apply_gauge(e, gauge)
            h, weights = problem.h, problem.weights
            if cfg.autoscale:
                scale = max(np.abs(h).max(initial=0.0) / H_RANGE, np.abs(weights).max(initial=0.0) / J_RANGE)
                if scale > 0:
                    h, weights = h / scale, weights / scale
            nbrs, ws = _neighbour_table(problem, weights)
            chains = _chain_table(problem, weights) if cfg.chain_flips else ()
            theta0 = None
            if initial_spins is not None:
                theta0 = np.where(gauge * initial_spins > 0, 0.0, math.pi)
            reads = range(start, min(start + cfg.reads_per_batch, n_reads))
            for chunk in chunked(reads, cfg.chunk_size):
                seeds = [derive_seed(cfg.seed, "read", r) for r in chunk]
                chunks.append(chunk)
                jobs.append(delayed(_anneal_chunk)(
                    h, nbrs, ws, a_values, b_values, cfg.temperature, seeds, theta0, chains
                ))

        results = Parallel(n_jobs=cfg.n_jobs, prefer="threads")(jobs)
        readouts = np.empty((n_reads, e.num_qubits), dtype=np.int8)
        for chunk, gauged in zip(chunks, results):
            # undo the gauge so readouts refer to the original problem
            readouts[chunk.start:chunk.stop] = gauged * gauges[gauge_index[chunk.start]]

        spins = decode_majority(readouts, e.embedding, e.logical)
        energies = evaluate_ising_many(e.logical, spins) + e.logical.offset
        logger.debug("%s anneal: %d reads, %d sweeps each", protocol.kind, n_reads, len(trajectory))
        return ReadSet(
            readouts=readouts,
            decoded=((spins + 1) // 2).astype(np.int8),
            energies=np.asarray(energies, dtype=float),
            gauge_index=gauge_index,
            broken_chain_fraction=chain_break_fraction(readouts, e.embedding),
            t_run_us=protocol.duration,
        )

    @staticmethod
    def _initial_spins(e: EmbeddedIsing, protocol: AnnealProtocol) -> Optional[np.ndarray]:
        if protocol.kind == "forward":
            return None
        if protocol.initial_state is None:
            raise MissingInitialState("reverse annealing needs an initial state")
        bits = np.asarray(protocol.initial_state, dtype=np.int8)
        spins = 2 * bits - 1
        if len(spins) == e.embedding.n_logical:
            return e.expand_logical(spins)
        if len(spins) == e.num_qubits:
            return spins
        raise DimensionMismatch(
            f"initial state has {len(spins)} entries; expected {e.embedding.n_logical} logical "
            f"or {e.num_qubits} physical"
        )

    @staticmethod
    def _gauge(n_qubits: int, index: int, cfg: EngineConfig) -> np.ndarray:
        if not cfg.randomize_gauges:
            return np.ones(n_qubits, dtype=np.int8)
        rng = np.random.default_rng(derive_seed(cfg.seed, "gauge", index))
        return rng.choice(np.array([-1, 1], dtype=np.int8), size=n_qubits)


def run(
    e: EmbeddedIsing,
    protocol: AnnealProtocol,
    schedule: Schedule,
    cfg: EngineConfig,
    n_reads: Optional[int] = None,
    sampler: Optional[Sampler] = None,
) -> ReadSet:
    return (sampler or SpinVectorMonteCarlo()).sample(e, protocol, schedule, cfg, n_reads)
