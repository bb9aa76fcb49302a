"""
Correlated geometric Brownian motion scenarios and realized asset statistics.

Prices follow the exact log-normal step

    S(t_n) = S(t_{n-1}) * exp((mu - sigma^2/2) dt + sigma z_n sqrt(dt))

with the per-asset normals z correlated through the Cholesky factor of a
uniform correlation matrix.
"""
import logging
import math
from typing import Any, Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import InsufficientObservations, NotPositiveDefinite, ZeroVolatility

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy-pcg64-ziggurat"
PIVOT_TOLERANCE = 1e-12


class GbmParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_assets: int = Field(default=24, ge=1)
    drift: float = 0.075
    volatility: float = Field(default=0.15, ge=0.0)
    correlation: float = Field(default=0.1, ge=-1.0, le=1.0)
    risk_free_rate: float = 0.015
    horizon: float = Field(default=1.0, gt=0.0)
    dt: float = Field(default=1.0 / 12.0, gt=0.0)
    initial_price: float = Field(default=100.0, gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_grid_and_correlation(self) -> "GbmParams":
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or round(steps) < 1:
            raise ValueError(f"horizon {self.horizon} is not a multiple of dt {self.dt}")
        if self.n_assets > 1 and self.correlation < -1.0 / (self.n_assets - 1) - 1e-12:
            raise ValueError(
                f"correlation {self.correlation} below -1/(N-1) for N={self.n_assets}; "
                "matrix is not positive semidefinite"
            )
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def correlation_matrix(self) -> np.ndarray:
        corr = np.full((self.n_assets, self.n_assets), self.correlation)
        np.fill_diagonal(corr, 1.0)
        return corr


class MarketScenario(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: GbmParams
    prices: np.ndarray
    log_returns: np.ndarray
    rng_algorithm: str = RNG_ALGORITHM

    def to_json(self) -> Dict[str, Any]:
        return {
            "params": self.params.model_dump(),
            "prices": self.prices.tolist(),
            "seed": self.params.seed,
            "rng_algorithm": self.rng_algorithm,
        }


class AssetStats(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    realized_return: np.ndarray
    realized_vol: np.ndarray
    sharpe: np.ndarray
    corr: np.ndarray
    risk_free_rate: float


def cholesky_factor(corr: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == corr."""
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise NotPositiveDefinite(f"expected a square matrix, got shape {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise NotPositiveDefinite("correlation matrix is not symmetric")
    try:
        lower = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky decomposition failed: {exc}") from exc
    # squared diagonal of L are the pivots
    pivots = np.diag(lower) ** 2
    if np.any(~np.isfinite(pivots)) or np.any(pivots <= PIVOT_TOLERANCE):
        raise NotPositiveDefinite(
            f"pivot {float(np.min(pivots)):.3e} <= {PIVOT_TOLERANCE}; "
            "too few observations or invalid correlation"
        )
    return lower


def _correlation_factor(params: GbmParams) -> np.ndarray:
    if params.n_assets == 1 or params.correlation == 0.0:
        return np.eye(params.n_assets)
    return cholesky_factor(params.correlation_matrix())


def simulate_log_returns(params: GbmParams, n_paths: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Batch of independent scenarios, shape (n_paths, n_assets, n_steps)."""
    lower = _correlation_factor(params)
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    z = rng.standard_normal((n_paths, params.n_steps, params.n_assets))
    correlated = np.einsum("ij,psj->pis", lower, z)
    drift = (params.drift - 0.5 * params.volatility**2) * params.dt
    return drift + params.volatility * math.sqrt(params.dt) * correlated


def _prices_from_log_returns(params: GbmParams, log_returns: np.ndarray) -> np.ndarray:
    cumulative = np.cumsum(log_returns, axis=-1)
    start = np.zeros(log_returns.shape[:-1] + (1,))
    return params.initial_price * np.exp(np.concatenate([start, cumulative], axis=-1))


def simulate_scenario(params: GbmParams, normals: Optional[np.ndarray] = None) -> MarketScenario:
    """One scenario; `normals` (n_assets x n_steps, independent) replaces the generator draws."""
    if normals is None:
        log_returns = simulate_log_returns(params, 1)[0]
    else:
        normals = np.asarray(normals, dtype=float)
        if normals.shape != (params.n_assets, params.n_steps):
            raise ValueError(f"normals must have shape {(params.n_assets, params.n_steps)}")
        lower = _correlation_factor(params)
        drift = (params.drift - 0.5 * params.volatility**2) * params.dt
        log_returns = drift + params.volatility * math.sqrt(params.dt) * (lower @ normals)
    prices = _prices_from_log_returns(params, log_returns)
    # re-derive returns from prices so the ratio identity holds bit for bit
    exact_returns = np.log(prices[:, 1:] / prices[:, :-1])
    logger.debug("simulated %d assets x %d steps (seed=%d)", params.n_assets, params.n_steps, params.seed)
    return MarketScenario(params=params, prices=prices, log_returns=exact_returns)


def sharpe_ratio(realized_return: float | np.ndarray, risk_free_rate: float, realized_vol: float | np.ndarray):
    return (np.asarray(realized_return) - risk_free_rate) / np.asarray(realized_vol)


def stats_from_log_returns(
    log_returns: np.ndarray,
    dt: float,
    horizon: float,
    risk_free_rate: float,
    return_estimator: Literal["drift", "log"] = "drift",
) -> AssetStats:
    n_steps = log_returns.shape[1]
    if n_steps < 2:
        raise InsufficientObservations(f"need at least 2 returns per asset, got {n_steps}")

    spread = np.ptp(log_returns, axis=1)
    scale = np.maximum(1.0, np.abs(log_returns).max(axis=1))
    constant = spread <= 1e-12 * scale
    if np.any(constant):
        raise ZeroVolatility(f"constant log-returns for assets {np.flatnonzero(constant).tolist()}")

    realized_vol = log_returns.std(axis=1, ddof=1) * math.sqrt(1.0 / dt)
    realized_return = log_returns.sum(axis=1) / horizon
    if return_estimator == "drift":
        realized_return = realized_return + 0.5 * realized_vol**2

    if log_returns.shape[0] == 1:
        corr = np.ones((1, 1))
    else:
        corr = np.clip(np.corrcoef(log_returns), -1.0, 1.0)
        corr = 0.5 * (corr + corr.T)
        np.fill_diagonal(corr, 1.0)

    return AssetStats(
        realized_return=realized_return,
        realized_vol=realized_vol,
        sharpe=sharpe_ratio(realized_return, risk_free_rate, realized_vol),
        corr=corr,
        risk_free_rate=risk_free_rate,
    )


def realized_stats(
    scenario: MarketScenario,
    r0: Optional[float] = None,
    return_estimator: Literal["drift", "log"] = "drift",
) -> AssetStats:
    """Annualized per-asset return, volatility and Sharpe plus the realized correlation matrix."""
    params = scenario.params
    risk_free = params.risk_free_rate if r0 is None else r0
    return stats_from_log_returns(scenario.log_returns, params.dt, params.horizon, risk_free, return_estimator)


def portfolio_sharpe(scenario: MarketScenario, bits: np.ndarray, r0: Optional[float] = None) -> float:
    """Equal-weight Sharpe ratio of the selected assets; nan for an empty selection."""
    bits = np.asarray(bits, dtype=bool)
    if not bits.any():
        return float("nan")
    params = scenario.params
    risk_free = params.risk_free_rate if r0 is None else r0
    weights = bits / bits.sum()
    # equal-weight, rebalanced each step, in simple returns
    simple = np.expm1(scenario.log_returns)
    portfolio = np.log1p(weights @ simple)[None, :]
    stats = stats_from_log_returns(portfolio, params.dt, params.horizon, risk_free)
    return float(stats.sharpe[0])
