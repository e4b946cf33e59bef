"""Unit and property tests for the entry/exit threshold mechanism."""

import numpy as np
import pytest

from fcmarket.herding import HerdingParams
from fcmarket.market import (
    CHARTIST,
    FUNDAMENTALIST,
    Agent,
    Heterogeneity,
    MarketConfig,
    MarketState,
    SimulationOutput,
    run,
)
from fcmarket.pricing import PriceHistory
from fcmarket.soi import (
    SoiConfig,
    convergence_summary,
    entry_exit_step,
    realized_volatility,
    run_soi,
)


def _pool_state(n_active, n_inactive):
    agents = [Agent(strategy=FUNDAMENTALIST, active=True) for _ in range(n_active)]
    agents += [Agent(strategy=FUNDAMENTALIST, active=False) for _ in range(n_inactive)]
    hist = PriceHistory(60, initial=1000.0)
    return MarketState(agents=agents, hist=hist)


# ---------------------------------------------------------------- validation


def test_config_validation():
    with pytest.raises(ValueError):
        SoiConfig(n0=0)
    with pytest.raises(ValueError):
        SoiConfig(n0=7000, n_pool=6000)
    with pytest.raises(ValueError):
        SoiConfig(window=0)
    with pytest.raises(ValueError):
        SoiConfig(threshold=0.0)
    with pytest.raises(ValueError):
        SoiConfig(p_enter=1.5)
    # disabled mechanism is a legal configuration
    SoiConfig(p_enter=0.0, p_exit=0.0)


def test_realized_volatility():
    r = np.array([1.0, -1.0, 2.0, -2.0])
    assert realized_volatility(r, 4) == pytest.approx(1.5)
    assert realized_volatility(r, 2) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        realized_volatility(r, 5)


# ------------------------------------------------------------ entry and exit


def test_entry_above_threshold_recruits_fundamentalists():
    cfg = SoiConfig(n_pool=100, n0=10, threshold=1.0, p_enter=1.0, p_exit=1.0)
    state = _pool_state(10, 90)
    for a in state.agents[:10]:
        a.strategy = CHARTIST
    entry_exit_step(state, vol=2.0, config=cfg, rng=np.random.default_rng(0))
    assert state.n_active == 100
    # entrants arrive as fundamentalists; incumbents keep their strategy
    assert state.n_c == 10


def test_exit_below_threshold_keeps_at_least_one():
    cfg = SoiConfig(n_pool=100, n0=10, threshold=1.0, p_enter=1.0, p_exit=1.0)
    state = _pool_state(10, 90)
    entry_exit_step(state, vol=0.5, config=cfg, rng=np.random.default_rng(0))
    assert state.n_active == 1


def test_exactly_at_threshold_is_a_dead_band():
    cfg = SoiConfig(n_pool=100, n0=10, threshold=1.0, p_enter=1.0, p_exit=1.0)
    state = _pool_state(10, 90)
    entry_exit_step(state, vol=1.0, config=cfg, rng=np.random.default_rng(0))
    assert state.n_active == 10


# --------------------------------------------------------------- coupled run


def test_disabled_mechanism_matches_plain_market():
    n = 120
    market = MarketConfig(
        heterogeneity=Heterogeneity(),
        herding=HerdingParams(n_agents=n, r=0.5, delta=0.003, aggregate=False),
    )
    soi = SoiConfig(n_pool=n, n0=n, p_enter=0.0, p_exit=0.0)
    a = run_soi(market, soi, 20_000, seed=6)
    b = run(market, 20_000, seed=6)
    assert np.array_equal(a.prices, b.prices)
    assert np.array_equal(a.x_series, b.x_series)
    assert np.array_equal(a.n_series, b.n_series)


def test_threshold_extremes_drive_population_to_the_boundaries():
    market = MarketConfig(heterogeneity=Heterogeneity())
    # an unreachable threshold drains the market toward the single-agent floor
    drain = SoiConfig(n_pool=600, n0=500, threshold=1e9, p_enter=0.05, p_exit=0.05)
    out = run_soi(market, drain, 40_000, seed=1)
    assert out.n_series[-1] < 50
    assert np.all(np.diff(out.n_series.astype(int)) <= 0)
    # a trivially low threshold fills the pool
    fill = SoiConfig(n_pool=600, n0=50, threshold=1e-9, p_enter=0.05, p_exit=0.05)
    out = run_soi(market, fill, 40_000, seed=1)
    assert out.n_series[-1] == 600
    assert np.all(np.diff(out.n_series.astype(int)) >= 0)


def test_restoring_drift_toward_equilibrium_population():
    market = MarketConfig(heterogeneity=Heterogeneity())
    lo = run_soi(market, SoiConfig(n0=50), 150_000, seed=2)
    hi = run_soi(market, SoiConfig(n0=5000), 150_000, seed=2)
    assert lo.n_series[-1] > 2 * lo.n_series[0]
    assert hi.n_series[-1] < hi.n_series[0] / 2


def test_convergence_summary():
    out = SimulationOutput(
        prices=np.zeros(6), returns=np.zeros(5),
        x_series=np.zeros(6), n_series=np.array([10, 20, 100, 110, 120, 115]),
        seed=0,
    )
    info = convergence_summary(out, band_center=100.0)
    assert info["n_final"] == 115
    assert info["steps_to_band"] == 2
