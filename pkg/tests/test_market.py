import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import InsufficientObservations, NotPositiveDefinite, ZeroVolatility
from src.market import (
    GbmParams,
    cholesky_factor,
    portfolio_sharpe,
    realized_stats,
    sharpe_ratio,
    simulate_log_returns,
    simulate_scenario,
    stats_from_log_returns,
)


def test_cholesky_identity():
    assert np.array_equal(cholesky_factor(np.eye(3)), np.eye(3))


def test_cholesky_two_by_two():
    corr = np.array([[1.0, 0.5], [0.5, 1.0]])
    lower = cholesky_factor(corr)
    assert np.allclose(lower, [[1.0, 0.0], [0.5, math.sqrt(0.75)]], atol=1e-12)
    assert np.allclose(lower @ lower.T, corr, atol=1e-9)


def test_cholesky_rejects_invalid_correlation():
    with pytest.raises(NotPositiveDefinite):
        cholesky_factor(np.array([[1.0, 1.2], [1.2, 1.0]]))


def test_params_reject_correlation_below_psd_bound():
    with pytest.raises(ValidationError):
        GbmParams(n_assets=5, correlation=-0.3)
    GbmParams(n_assets=5, correlation=-0.25)


def test_params_reject_horizon_not_multiple_of_step():
    with pytest.raises(ValidationError):
        GbmParams(horizon=1.0, dt=0.3)


def test_zero_volatility_prices_are_deterministic():
    params = GbmParams(n_assets=3, volatility=0.0, correlation=0.0)
    scenario = simulate_scenario(params)
    n = np.arange(params.n_steps + 1)
    expected = 100.0 * np.exp(0.075 * n / 12.0)
    for row in scenario.prices:
        assert np.allclose(row, expected, rtol=1e-12)


def test_single_step_with_zero_shock():
    params = GbmParams(n_assets=1, horizon=1.0 / 12.0)
    scenario = simulate_scenario(params, normals=np.zeros((1, 1)))
    assert scenario.prices[0, 1] == pytest.approx(100.0 * math.exp((0.075 - 0.01125) / 12.0))
    assert scenario.prices[0, 1] == pytest.approx(100.5327, abs=1e-4)


def test_log_returns_match_price_ratios():
    scenario = simulate_scenario(GbmParams(seed=3))
    ratios = np.log(scenario.prices[:, 1:] / scenario.prices[:, :-1])
    assert np.array_equal(scenario.log_returns, ratios)
    assert np.all(scenario.prices > 0)


def test_equal_seeds_give_identical_scenarios():
    first = simulate_scenario(GbmParams(seed=11))
    second = simulate_scenario(GbmParams(seed=11))
    assert np.array_equal(first.prices, second.prices)
    assert not np.array_equal(first.prices, simulate_scenario(GbmParams(seed=12)).prices)


def test_scenario_json_records_rng():
    data = simulate_scenario(GbmParams(n_assets=2, seed=5)).to_json()
    assert data["seed"] == 5
    assert data["rng_algorithm"] == "numpy-pcg64-ziggurat"
    assert len(data["prices"]) == 2 and len(data["prices"][0]) == 13


def test_constant_returns_raise_zero_volatility():
    log_returns = np.array([[0.01] * 12, np.linspace(-0.02, 0.02, 12)])
    with pytest.raises(ZeroVolatility):
        stats_from_log_returns(log_returns, 1 / 12, 1.0, 0.015)


def test_single_observation_is_insufficient():
    with pytest.raises(InsufficientObservations):
        stats_from_log_returns(np.array([[0.01], [0.02]]), 1 / 12, 1 / 12, 0.015)


def test_identical_paths_are_fully_correlated():
    path = np.random.default_rng(0).normal(size=12)
    stats = stats_from_log_returns(np.vstack([path, path]), 1 / 12, 1.0, 0.015)
    assert stats.corr[0, 1] == pytest.approx(1.0)
    assert np.array_equal(stats.corr, stats.corr.T)
    assert np.all(np.diag(stats.corr) == 1.0)


def test_sharpe_formula():
    assert sharpe_ratio(0.075, 0.015, 0.15) == pytest.approx(0.4)


def test_realized_stats_are_consistent():
    scenario = simulate_scenario(GbmParams(seed=2))
    stats = realized_stats(scenario)
    expected = (stats.realized_return - 0.015) / stats.realized_vol
    assert np.allclose(stats.sharpe, expected)
    log_stats = realized_stats(scenario, return_estimator="log")
    assert np.allclose(stats.realized_return - log_stats.realized_return, 0.5 * stats.realized_vol**2)


def test_portfolio_sharpe_of_empty_selection_is_nan():
    scenario = simulate_scenario(GbmParams(n_assets=4, seed=1))
    assert math.isnan(portfolio_sharpe(scenario, np.zeros(4)))
    assert math.isfinite(portfolio_sharpe(scenario, np.array([1, 0, 1, 0])))


@pytest.mark.slow
def test_one_step_mean_log_return():
    params = GbmParams(n_assets=1, horizon=1 / 12)
    returns = simulate_log_returns(params, 100_000)[:, 0, 0]
    expected = (0.075 - 0.5 * 0.15**2) / 12
    standard_error = 0.15 * math.sqrt(1 / 12) / math.sqrt(len(returns))
    assert abs(returns.mean() - expected) < 3 * standard_error


@pytest.mark.slow
def test_ensemble_correlation_and_sharpe():
    params = GbmParams(n_assets=24, seed=7)
    paths = simulate_log_returns(params, 10_000)
    correlations, sharpes = [], []
    upper = np.triu_indices(24, k=1)
    for log_returns in paths:
        stats = stats_from_log_returns(log_returns, params.dt, params.horizon, params.risk_free_rate)
        correlations.append(stats.corr[upper].mean())
        sharpes.append(stats.sharpe.mean())
    assert np.mean(correlations) == pytest.approx(0.1, abs=0.02)
    assert np.mean(sharpes) == pytest.approx(0.4, abs=0.05)
