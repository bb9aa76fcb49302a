"""
Greedy-seeded reverse annealing.

The greedy solution is loaded into every chain and reverse batches run until
the read budget is spent or the target value is reached. The seed stays a
candidate, so the result is never worse than greedy. Modeled time counts
anneals only (reads x (2 tau + rho)); the greedy descent is not charged.
"""
import logging
import time
from typing import Optional

from src.chimera import ChimeraGraph
from src.engine import EngineConfig, Sampler, run
from src.models import Selection, SolverResult
from src.qubo import TOLERANCE, QuboInstance, evaluate
from src.schedule import Schedule, build_reverse_protocol, default_schedule
from src.solvers.annealer import embed_instance, greedy_seed
from src.utils import derive_seed

logger = logging.getLogger(__name__)


def hybrid_reverse_solve(
    q: QuboInstance,
    chain_strength: float,
    tau: float = 1.0,
    rho: float = 0.0,
    s_pause: float = 0.5,
    budget: int = 1500,
    cfg: EngineConfig = EngineConfig(),
    schedule: Optional[Schedule] = None,
    graph: Optional[ChimeraGraph] = None,
    target: Optional[float] = None,
    sampler: Optional[Sampler] = None,
) -> SolverResult:
    started = time.perf_counter()
    seed_bits = greedy_seed(q)
    best = Selection.from_bits(seed_bits, evaluate(q, seed_bits))
    trace = [best.value]
    logger.debug("greedy seed value %.6f, cardinality %d", best.value, best.cardinality)

    protocol = build_reverse_protocol(tau, rho, s_pause, seed_bits)
    e = embed_instance(q, chain_strength, graph) if budget > 0 else None
    schedule = schedule or default_schedule()

    used = 0
    batch = 0
    while used < budget and not (target is not None and best.value <= target + TOLERANCE):
        n_reads = min(cfg.reads_per_batch, budget - used)
        batch_cfg = cfg.model_copy(update={"seed": derive_seed(cfg.seed, "hybrid", batch)})
        reads = run(e, protocol, schedule, batch_cfg, n_reads=n_reads, sampler=sampler)
        i = reads.best_index()
        if reads.energies[i] < best.value - TOLERANCE:
            best = Selection.from_bits(reads.decoded[i], reads.energies[i])
        trace.append(best.value)
        used += n_reads
        batch += 1

    return SolverResult(
        solver="hybrid",
        best=best,
        objective_calls=used,
        trace=trace,
        elapsed_model_time=used * protocol.duration,
        wall_time_s=time.perf_counter() - started,
        extra={
            "seed_value": trace[0],
            "batches": batch,
            "chain_strength": chain_strength,
            "tau_us": tau,
            "rho_us": rho,
            "s_pause": s_pause,
        },
    )
