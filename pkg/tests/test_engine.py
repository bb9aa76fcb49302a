import numpy as np
import pytest

from src.chimera import build_chimera
from src.engine import EngineConfig, SpinVectorMonteCarlo, _chain_table, apply_gauge, run, save_readset
from src.errors import DimensionMismatch, MissingInitialState
from src.qubo import QuboInstance, all_bitstrings, evaluate_many
from src.schedule import Schedule, build_forward_protocol, build_reverse_protocol, default_schedule
from src.solvers.annealer import embed_instance
from src.solvers.exact import exact_solve

FAST = EngineConfig(sweeps_per_microsecond=20, reads_per_batch=8, gauges=2, chunk_size=4, seed=3)


@pytest.fixture
def ten_qubits(logical_problem, make_qubo):
    return logical_problem(make_qubo(10, seed=7, integer=False))


def test_identity_gauge(ten_qubits):
    gauged = apply_gauge(ten_qubits, np.ones(10, dtype=np.int8))
    assert np.array_equal(gauged.h, ten_qubits.h)
    assert np.array_equal(gauged.weights, ten_qubits.weights)


def test_gauge_is_an_involution(ten_qubits):
    g = np.random.default_rng(1).choice([-1, 1], size=10)
    twice = apply_gauge(apply_gauge(ten_qubits, g), g)
    assert np.array_equal(twice.h, ten_qubits.h)
    assert np.array_equal(twice.weights, ten_qubits.weights)


def test_gauge_preserves_every_energy_exactly(ten_qubits):
    g = np.random.default_rng(2).choice([-1, 1], size=10)
    gauged = apply_gauge(ten_qubits, g)
    states = 2 * all_bitstrings(10).astype(float) - 1
    before = ten_qubits.energies(states)
    after = gauged.energies(states * g)
    assert np.array_equal(before, after)
    assert np.array_equal(np.sort(before), np.sort(gauged.energies(states)))


def test_gauge_must_cover_all_qubits(ten_qubits):
    with pytest.raises(DimensionMismatch):
        apply_gauge(ten_qubits, np.ones(9))


def test_free_spin_aligns_against_its_field(logical_problem):
    # h = +1 after the Ising transform of a = (2)
    e = logical_problem(QuboInstance.from_coefficients([2.0], [[0.0]]))
    cfg = EngineConfig(sweeps_per_microsecond=100, reads_per_batch=500, gauges=2, seed=5)
    reads = run(e, build_forward_protocol(1.0), default_schedule(), cfg)
    assert reads.n_reads == 1000
    assert (reads.readouts[:, 0] == -1).mean() >= 0.99


def test_pure_descent_keeps_a_local_minimum(logical_problem, make_qubo):
    q = make_qubo(8, seed=11, integer=False)
    ground = np.asarray(exact_solve(q).bits)
    frozen = Schedule(s=np.array([0.0, 1.0]), A=np.zeros(2), B=np.ones(2))
    cfg = EngineConfig(sweeps_per_microsecond=20, temperature=0.0, reads_per_batch=10, seed=2)
    protocol = build_reverse_protocol(1.0, 2.0, 0.5, ground)
    reads = run(logical_problem(q), protocol, frozen, cfg)
    assert np.all(reads.decoded == ground)


def test_reads_are_seed_deterministic(logical_problem, make_qubo):
    e = logical_problem(make_qubo(5, seed=1))
    protocol = build_forward_protocol(1.0)
    first = run(e, protocol, default_schedule(), FAST)
    second = run(e, protocol, default_schedule(), FAST.model_copy(update={"n_jobs": 2}))
    assert np.array_equal(first.readouts, second.readouts)
    assert np.array_equal(first.energies, second.energies)


def test_energies_match_decoded_bitstrings(logical_problem, make_qubo):
    q = make_qubo(5, seed=2)
    reads = run(logical_problem(q), build_forward_protocol(1.0), default_schedule(), FAST)
    assert np.allclose(reads.energies, evaluate_many(q, reads.decoded))
    assert reads.gauge_index.tolist() == [0] * 8 + [1] * 8
    assert reads.t_run_us == 1.0


def test_reverse_reads_report_full_duration(logical_problem, make_qubo):
    q = make_qubo(4, seed=3)
    protocol = build_reverse_protocol(1.0, 8.0, 0.5, [1, 0, 1, 0])
    reads = run(logical_problem(q), protocol, default_schedule(), FAST, n_reads=3)
    assert reads.n_reads == 3
    assert reads.t_run_us == 10.0


def test_reverse_needs_initial_state(logical_problem, make_qubo):
    e = logical_problem(make_qubo(4))
    with pytest.raises(MissingInitialState):
        run(e, build_reverse_protocol(1.0, 1.0, 0.5), default_schedule(), FAST)


def test_initial_state_length_is_checked(logical_problem, make_qubo):
    e = logical_problem(make_qubo(4))
    with pytest.raises(DimensionMismatch):
        run(e, build_reverse_protocol(1.0, 1.0, 0.5, [1, 0, 1]), default_schedule(), FAST)


def test_zero_reads_rejected(logical_problem, make_qubo):
    with pytest.raises(DimensionMismatch):
        SpinVectorMonteCarlo().sample(logical_problem(make_qubo(3)), build_forward_protocol(1.0), default_schedule(), FAST, 0)


def test_readset_csv(tmp_path, logical_problem, make_qubo):
    reads = run(logical_problem(make_qubo(5)), build_forward_protocol(1.0), default_schedule(), FAST, n_reads=4)
    path = tmp_path / "reads.csv"
    save_readset(reads, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "read_index,gauge_index,energy,cardinality,bitstring,t_run_us"
    assert len(lines) == 5


@pytest.mark.slow
def test_success_rate_is_gauge_independent(logical_problem, make_qubo):
    q = make_qubo(6, seed=4)
    target = exact_solve(q).value
    e = logical_problem(q)
    rates = []
    for seed in (1, 2):
        cfg = EngineConfig(sweeps_per_microsecond=20, reads_per_batch=400, gauges=1, seed=seed)
        reads = run(e, build_forward_protocol(1.0), default_schedule(), cfg)
        rates.append(np.mean(reads.energies <= target + 1e-9))
    p = np.mean(rates)
    sigma = np.sqrt(max(p * (1 - p), 1e-4) * 2 / 400)
    assert abs(rates[0] - rates[1]) <= 3 * sigma


def test_chain_table_lists_only_leaving_couplers(make_qubo):
    e = embed_instance(make_qubo(8, seed=6, integer=False), 4.0, build_chimera(4))
    owner = np.arange(e.num_qubits) // e.embedding.chain_length
    moves = _chain_table(e, e.weights)
    assert len(moves) == 8
    for c, move in enumerate(moves):
        assert np.all(owner[move.members] == c)
        assert np.all(owner[move.inner] == c)
        assert np.all(owner[move.outer] != c)
    crossing = (owner[e.edges[:, 0]] != owner[e.edges[:, 1]]).sum()
    assert sum(len(move.weights) for move in moves) == 2 * crossing


@pytest.mark.parametrize("chain_flips", [True, False])
def test_chain_reflection_undoes_a_flipped_chain(make_qubo, chain_flips):
    # strong bonds pin every rotor, so only a whole-chain move can repair bit 0
    q = make_qubo(8, seed=9, integer=False)
    ground = np.asarray(exact_solve(q).bits)
    start = ground.copy()
    start[0] ^= 1
    frozen = Schedule(s=np.array([0.0, 1.0]), A=np.zeros(2), B=np.ones(2))
    cfg = EngineConfig(sweeps_per_microsecond=10, temperature=0.0, reads_per_batch=6, seed=4, chain_flips=chain_flips)
    e = embed_instance(q, 20.0, build_chimera(4))
    reads = run(e, build_reverse_protocol(1.0, 1.0, 0.5, start), frozen, cfg)
    expected = ground if chain_flips else start
    assert np.all(reads.decoded == expected)
    assert reads.unbroken_fraction() == 1.0
