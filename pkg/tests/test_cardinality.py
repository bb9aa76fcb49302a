import numpy as np
import pytest

from src.errors import InvalidConfig
from src.qubo import all_bitstrings, evaluate_many
from src.solvers.cardinality import MAX_ROUNDS, cardinality_search, delta_bound
from src.solvers.exact import exact_solve


def test_unconstrained_optimum_already_at_target(make_qubo):
    q = make_qubo(6, seed=1)
    target = exact_solve(q).cardinality
    result = cardinality_search(q, target, exact_solve)
    assert result.delta == 0.0
    assert result.rounds == 1
    assert result.attained


@pytest.mark.parametrize("seed", range(6))
def test_matches_constrained_brute_force(make_qubo, seed):
    q = make_qubo(6, seed=seed, integer=False)
    result = cardinality_search(q, 2, exact_solve)
    assert result.rounds <= MAX_ROUNDS
    assert abs(result.delta) <= delta_bound(q)
    if result.attained:
        bits = all_bitstrings(6)
        values = evaluate_many(q, bits)[bits.sum(axis=1) == 2]
        assert result.selection.cardinality == 2
        assert result.selection.value == pytest.approx(values.min())


def test_extreme_targets(make_qubo):
    q = make_qubo(5, seed=3)
    assert cardinality_search(q, 0, exact_solve).selection.cardinality == 0
    assert cardinality_search(q, 5, exact_solve).selection.cardinality == 5


def test_target_out_of_range(make_qubo):
    with pytest.raises(InvalidConfig):
        cardinality_search(make_qubo(4), 5, exact_solve)


def test_plateau_reports_closest(make_qubo):
    # a constant inner solver never changes cardinality
    q = make_qubo(4, seed=2)
    fixed = exact_solve(q)
    result = cardinality_search(q, (fixed.cardinality + 2) % 5, lambda shifted: fixed)
    assert not result.attained
    assert result.cardinality_not_attained
    assert result.rounds == MAX_ROUNDS
    assert np.array_equal(result.selection.as_array(), fixed.as_array())
