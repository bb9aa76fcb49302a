import numpy as np
import pytest

from src.chimera import build_chimera, decode_majority
from src.engine import EngineConfig, ReadSet
from src.market import GbmParams
from src.qubo import BucketMap, evaluate, evaluate_ising_many
from src.registry import generate_instance
from src.solvers.annealer import embed_instance, forward_solve, greedy_seed, result_from_reads, reverse_solve
from src.solvers.exact import exact_solve
from src.solvers.greedy import greedy_solve
from src.solvers.hybrid import hybrid_reverse_solve

FAST = EngineConfig(sweeps_per_microsecond=20, reads_per_batch=10, gauges=2, seed=1)


class RecordingSampler:
    """Records each request and answers every read with the protocol's initial state."""

    def __init__(self):
        self.requests = []

    def sample(self, e, protocol, schedule, cfg, n_reads=None):
        n_reads = cfg.total_reads if n_reads is None else n_reads
        self.requests.append((protocol, cfg, n_reads))
        bits = np.asarray(protocol.initial_state or (0,) * e.embedding.n_logical, dtype=np.int8)
        decoded = np.tile(bits, (n_reads, 1))
        energies = np.full(n_reads, e.logical.offset + (2 * bits - 1) @ e.logical.h
                           + (2 * bits - 1) @ e.logical.J @ (2 * bits - 1))
        return ReadSet(
            readouts=np.ones((n_reads, e.num_qubits), dtype=np.int8),
            decoded=decoded,
            energies=energies,
            gauge_index=np.zeros(n_reads, dtype=int),
            broken_chain_fraction=np.zeros(n_reads),
            t_run_us=protocol.duration,
        )


@pytest.fixture(scope="module")
def graph():
    return build_chimera(4)


def _reads(energies, t_run=2.0):
    energies = np.asarray(energies, dtype=float)
    n = len(energies)
    return ReadSet(
        readouts=np.ones((n, 2), dtype=np.int8),
        decoded=np.zeros((n, 2), dtype=np.int8),
        energies=energies,
        gauge_index=np.zeros(n, dtype=int),
        broken_chain_fraction=np.zeros(n),
        t_run_us=t_run,
    )


def test_result_trace_follows_batches():
    result = result_from_reads("forward", _reads([0.0, 3.0, -1.0, 2.0, -4.0]), batch_size=2)
    assert result.trace == [0.0, -1.0, -4.0]
    assert result.best.value == -4.0
    assert result.objective_calls == 5
    assert result.elapsed_model_time == 10.0


def test_forward_solve_on_the_surrogate(make_qubo, graph):
    q = make_qubo(6, seed=2)
    result, reads = forward_solve(q, 4.0, tau=1.0, cfg=FAST, graph=graph)
    assert reads.n_reads == 20
    assert result.best.value == pytest.approx(evaluate(q, result.best.bits))
    assert result.extra["chain_strength"] == 4.0
    assert 0.0 <= result.extra["unbroken_chain_fraction"] <= 1.0


def test_reverse_defaults_to_the_greedy_seed(make_qubo, graph):
    q = make_qubo(6, seed=3)
    sampler = RecordingSampler()
    result, _ = reverse_solve(q, 4.0, tau=1.0, rho=8.0, s_pause=0.4, cfg=FAST, graph=graph, sampler=sampler)
    protocol, _, _ = sampler.requests[0]
    assert protocol.initial_state == tuple(greedy_seed(q).tolist())
    assert result.extra["t_run_us"] == 10.0
    assert result.best.value == pytest.approx(evaluate(q, greedy_seed(q)))


def test_hybrid_zero_budget_returns_the_seed(make_qubo):
    q = make_qubo(10, seed=4)
    result = hybrid_reverse_solve(q, 4.0, budget=0)
    seed = greedy_seed(q)
    assert result.best.bits == tuple(seed.tolist())
    assert result.best.value == pytest.approx(evaluate(q, seed))
    assert result.objective_calls == 0
    assert result.elapsed_model_time == 0.0


def test_hybrid_batches_until_budget(make_qubo, graph):
    q = make_qubo(6, seed=5)
    sampler = RecordingSampler()
    result = hybrid_reverse_solve(q, 3.0, tau=1.0, rho=1.0, budget=25, cfg=FAST, graph=graph, sampler=sampler)
    assert [n for _, _, n in sampler.requests] == [10, 10, 5]
    assert len({cfg.seed for _, cfg, _ in sampler.requests}) == 3
    assert result.objective_calls == 25
    assert result.elapsed_model_time == pytest.approx(25 * 3.0)
    assert result.extra["batches"] == 3


def test_hybrid_stops_at_target(make_qubo, graph):
    q = make_qubo(6, seed=6)
    target = evaluate(q, greedy_seed(q))
    sampler = RecordingSampler()
    result = hybrid_reverse_solve(q, 3.0, budget=100, cfg=FAST, graph=graph, target=target, sampler=sampler)
    assert not sampler.requests
    assert result.objective_calls == 0


def test_hybrid_never_worse_than_its_seed(make_qubo, graph):
    q = make_qubo(8, seed=7)
    result = hybrid_reverse_solve(q, 4.0, tau=1.0, rho=1.0, s_pause=0.4, budget=30, cfg=FAST, graph=graph)
    assert result.best.value <= result.extra["seed_value"] + 1e-9
    assert result.trace[0] == result.extra["seed_value"]


def _greedy_misses(n: int, wanted: int, scan: int = 400):
    misses = []
    for index in range(scan):
        q = generate_instance(n, index, GbmParams(), BucketMap(), seed=0)
        optimum = exact_solve(q).value
        if greedy_solve(q).best.value > optimum + 1e-9:
            misses.append((q, optimum))
            if len(misses) == wanted:
                break
    return misses


@pytest.mark.slow
def test_reverse_from_greedy_beats_forward_at_equal_budget():
    misses = _greedy_misses(16, 10)
    assert len(misses) == 10
    cfg = EngineConfig(sweeps_per_microsecond=50, reads_per_batch=200, seed=12)
    forward_p, reverse_p = [], []
    for q, optimum in misses:
        # 3 us each: forward tau=3, reverse 2*tau + rho with tau=rho=1
        _, reads = forward_solve(q, 5.0, tau=3.0, cfg=cfg)
        forward_p.append(np.mean(reads.energies <= optimum + 1e-9))
        best = 0.0
        for s_pause in (0.3, 0.4, 0.5, 0.6):
            _, reads = reverse_solve(q, 5.0, tau=1.0, rho=1.0, s_pause=s_pause, cfg=cfg)
            best = max(best, np.mean(reads.energies <= optimum + 1e-9))
        reverse_p.append(best)
    assert np.median(reverse_p) >= np.median(forward_p)
    assert np.median(reverse_p) > 0.0


@pytest.mark.slow
def test_chains_hold_together_more_as_chain_strength_grows(make_qubo, graph):
    q = make_qubo(12, seed=14, integer=False)
    cfg = EngineConfig(sweeps_per_microsecond=20, reads_per_batch=200, seed=8)
    unbroken = [forward_solve(q, j_f, cfg=cfg, graph=graph)[1].unbroken_fraction() for j_f in (0.2, 1.0, 5.0, 20.0)]
    assert all(later >= earlier - 0.01 for earlier, later in zip(unbroken, unbroken[1:]))
    assert unbroken[0] < unbroken[-1]
    assert unbroken[-1] >= 0.99


@pytest.mark.slow
def test_majority_vote_beats_first_qubit_decoding(make_qubo, graph):
    q = make_qubo(12, seed=21, integer=False)
    cfg = EngineConfig(sweeps_per_microsecond=20, reads_per_batch=300, seed=5)
    _, reads = forward_solve(q, 0.3, cfg=cfg, graph=graph)
    e = embed_instance(q, 0.3, graph)
    assert reads.unbroken_fraction() < 1.0
    first = reads.readouts[:, ::e.embedding.chain_length]
    majority = decode_majority(reads.readouts, e.embedding, e.logical)
    assert evaluate_ising_many(e.logical, majority).mean() <= evaluate_ising_many(e.logical, first).mean()
