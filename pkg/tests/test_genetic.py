import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import LengthMismatch
from src.market import GbmParams
from src.qubo import BucketMap
from src.registry import generate_instance
from src.solvers.exact import exact_solve
from src.solvers.genetic import GaConfig, call_cost_us, ga_solve
from src.solvers.greedy import greedy_solve


def test_cost_model():
    assert call_cost_us(60) * 10_000 == pytest.approx(3e5)
    assert call_cost_us(30) == pytest.approx(7.5)


def test_population_must_equal_offspring_times_survivors():
    with pytest.raises(ValidationError):
        GaConfig(population=10, survivors=3, offspring_per_survivor=3)


def test_mutation_probabilities_sum_to_one():
    with pytest.raises(ValidationError):
        GaConfig(mutation={1: 0.5, 2: 0.2})


def test_seeded_optimum_is_best_after_first_ranking(make_qubo):
    q = make_qubo(10, seed=1, integer=False)
    optimum = exact_solve(q)
    result = ga_solve(q, GaConfig(max_iterations=0), initial=optimum.as_array())
    assert result.trace == [pytest.approx(optimum.value)]
    assert result.best.bits == optimum.bits


def test_early_stop_on_target(make_qubo):
    q = make_qubo(10, seed=2)
    optimum = exact_solve(q)
    cfg = GaConfig(target_value=optimum.value, seed=4)
    result = ga_solve(q, cfg, initial=optimum.as_array())
    assert result.extra["iterations"] == 0
    assert result.objective_calls == cfg.population
    assert result.elapsed_model_time == pytest.approx(cfg.population * call_cost_us(10))


def test_no_selection_pressure_is_a_fixed_point(make_qubo):
    q = make_qubo(6, seed=3)
    cfg = GaConfig(population=8, survivors=8, offspring_per_survivor=1, mutation={0: 1.0}, max_iterations=5)
    population = np.random.default_rng(0).integers(0, 2, size=(8, 6))
    result = ga_solve(q, cfg, initial_population=population)
    assert len(set(result.trace)) == 1
    assert result.extra["final_population_best"] == result.trace[0]
    assert result.objective_calls == 6 * 8


def test_trace_never_increases(make_qubo):
    result = ga_solve(make_qubo(16, seed=5), GaConfig(max_iterations=50, seed=9))
    assert all(later <= earlier for earlier, later in zip(result.trace, result.trace[1:]))
    assert result.trace[-1] == result.best.value
    assert len(result.trace) == 51


def test_call_budget(make_qubo):
    result = ga_solve(make_qubo(12, seed=6), GaConfig(max_objective_calls=1000, seed=1))
    assert result.objective_calls <= 1000


def test_initial_length_checked(make_qubo):
    with pytest.raises(LengthMismatch):
        ga_solve(make_qubo(5), initial=np.zeros(4))


def test_finds_small_optima(make_qubo):
    q = make_qubo(10, seed=8)
    optimum = exact_solve(q).value
    hits = sum(
        ga_solve(q, GaConfig(max_iterations=300, seed=seed)).best.value <= optimum + 1e-9
        for seed in range(20)
    )
    assert hits >= 16


@pytest.mark.slow
def test_greedy_seeded_ga_finds_every_n24_optimum():
    for index in range(30):
        q = generate_instance(24, index, GbmParams(), BucketMap(), seed=0)
        optimum = exact_solve(q).value
        cfg = GaConfig(seed=index, target_value=optimum, max_objective_calls=1_000_000)
        result = ga_solve(q, cfg, initial=greedy_solve(q).best.as_array())
        assert result.best.value == pytest.approx(optimum), q.metadata.instance_id
        assert result.objective_calls <= 1_000_000
