import numpy as np

from src.qubo import IsingInstance, evaluate_ising, qubo_to_ising
from src.solvers.exact import exact_solve
from src.solvers.greedy import greedy_search, greedy_solve


def _ising(h, J=None) -> IsingInstance:
    h = np.asarray(h, dtype=float)
    J = np.zeros((len(h), len(h))) if J is None else np.asarray(J, dtype=float)
    return IsingInstance(n=len(h), h=h, J=J)


def test_sign_rule_without_couplings():
    assert greedy_search(_ising([1.0, -2.0, 3.0])).tolist() == [-1, 1, -1]


def test_fields_update_after_each_fix():
    m = _ising([0.5, 0.5], [[0.0, -2.0], [0.0, 0.0]])
    spins = greedy_search(m)
    assert spins.tolist() == [-1, -1]
    assert evaluate_ising(m, spins) == -3.0


def test_zero_field_fixes_up():
    assert greedy_search(_ising([0.0, 0.0])).tolist() == [1, 1]


def test_deterministic(make_qubo):
    m = qubo_to_ising(make_qubo(20, seed=3))
    assert np.array_equal(greedy_search(m), greedy_search(m))


def test_greedy_solve_reports_qubo_value(make_qubo):
    q = make_qubo(8, seed=6)
    result = greedy_solve(q)
    assert result.objective_calls == 1
    assert result.best.value >= exact_solve(q).value - 1e-9
    assert result.trace == [result.best.value]
