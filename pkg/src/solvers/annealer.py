"""
Forward and reverse annealing on the clique-embedded problem, wrapped as solvers.
"""
import logging
import time
from typing import Optional, Tuple

import numpy as np

from src.chimera import ChimeraGraph, EmbeddedIsing, build_chimera, clique_embed, embed_ising
from src.engine import EngineConfig, ReadSet, Sampler, run
from src.models import Selection, SolverResult
from src.qubo import QuboInstance, qubo_to_ising
from src.schedule import AnnealProtocol, Schedule, build_forward_protocol, build_reverse_protocol, default_schedule
from src.solvers.greedy import greedy_search

logger = logging.getLogger(__name__)


def embed_instance(q: QuboInstance, chain_strength: float, graph: Optional[ChimeraGraph] = None) -> EmbeddedIsing:
    """Ising form of `q` on the native clique embedding of an (ideal by default) C_16."""
    graph = graph if graph is not None else build_chimera()
    return embed_ising(qubo_to_ising(q), clique_embed(graph, q.n), chain_strength)


def greedy_seed(q: QuboInstance) -> np.ndarray:
    """Greedy solution of `q` as a 0/1 vector."""
    return ((greedy_search(qubo_to_ising(q)) + 1) // 2).astype(np.int8)


def result_from_reads(solver: str, reads: ReadSet, batch_size: int, extra: Optional[dict] = None) -> SolverResult:
    """Best read as a SolverResult; the trace holds the running minimum after each batch."""
    best = reads.best_index()
    trace = [
        float(reads.energies[:stop].min())
        for stop in range(batch_size, reads.n_reads + batch_size, batch_size)
    ]
    return SolverResult(
        solver=solver,
        best=Selection.from_bits(reads.decoded[best], reads.energies[best]),
        objective_calls=reads.n_reads,
        trace=trace,
        elapsed_model_time=reads.n_reads * reads.t_run_us,
        extra={
            "t_run_us": reads.t_run_us,
            "unbroken_chain_fraction": reads.unbroken_fraction(),
            **(extra or {}),
        },
    )


def _anneal(
    solver: str,
    e: EmbeddedIsing,
    protocol: AnnealProtocol,
    schedule: Optional[Schedule],
    cfg: EngineConfig,
    n_reads: Optional[int],
    sampler: Optional[Sampler],
    extra: dict,
) -> Tuple[SolverResult, ReadSet]:
    started = time.perf_counter()
    reads = run(e, protocol, schedule or default_schedule(), cfg, n_reads=n_reads, sampler=sampler)
    result = result_from_reads(solver, reads, cfg.reads_per_batch, extra)
    return result.model_copy(update={"wall_time_s": time.perf_counter() - started}), reads


def forward_solve(
    q: QuboInstance,
    chain_strength: float,
    tau: float = 1.0,
    cfg: EngineConfig = EngineConfig(),
    schedule: Optional[Schedule] = None,
    graph: Optional[ChimeraGraph] = None,
    n_reads: Optional[int] = None,
    sampler: Optional[Sampler] = None,
) -> Tuple[SolverResult, ReadSet]:
    e = embed_instance(q, chain_strength, graph)
    protocol = build_forward_protocol(tau)
    return _anneal("forward", e, protocol, schedule, cfg, n_reads, sampler,
                   {"chain_strength": chain_strength, "tau_us": tau})


def reverse_solve(
    q: QuboInstance,
    chain_strength: float,
    tau: float = 1.0,
    rho: float = 0.0,
    s_pause: float = 0.5,
    initial=None,
    cfg: EngineConfig = EngineConfig(),
    schedule: Optional[Schedule] = None,
    graph: Optional[ChimeraGraph] = None,
    n_reads: Optional[int] = None,
    sampler: Optional[Sampler] = None,
) -> Tuple[SolverResult, ReadSet]:
    """Reverse anneal from `initial` (logical or physical bits); greedy seed when omitted."""
    if initial is None:
        initial = greedy_seed(q)
        logger.info("no initial state given; seeding reverse anneal with the greedy solution")
    e = embed_instance(q, chain_strength, graph)
    protocol = build_reverse_protocol(tau, rho, s_pause, initial)
    return _anneal("reverse", e, protocol, schedule, cfg, n_reads, sampler,
                   {"chain_strength": chain_strength, "tau_us": tau, "rho_us": rho, "s_pause": s_pause})
