"""Self-organized intermittency: volatility-thresholded agent entry and exit.

A trailing mean-absolute-return above the threshold attracts inactive agents
into the market; below it, active agents drop out.  The active count then
drifts toward the population size whose fluctuations sit right at the
threshold, which is the intermittent regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import (
    CHARTIST,
    FUNDAMENTALIST,
    MarketConfig,
    MarketState,
    SimulationOutput,
    _kernel_run,
)


@dataclass
class SoiConfig:
    """Threshold mechanism parameters.

    Defaults were frozen after calibration so that runs started anywhere in
    [50, 5000] converge to a common band around a few hundred active agents.
    """

    n_pool: int = 6000
    n0: int = 500
    window: int = 100
    threshold: float = 0.88
    p_enter: float = 0.003
    p_exit: float = 0.003

    def __post_init__(self):
        if not 0 < self.n0 <= self.n_pool:
            raise ValueError("need 0 < n0 <= n_pool")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")
        for p in (self.p_enter, self.p_exit):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


def realized_volatility(returns, window: int) -> float:
    """Mean absolute return over the trailing window."""
    r = np.asarray(returns, dtype=float)
    if r.size < window:
        raise ValueError(f"need at least {window} returns, have {r.size}")
    return float(np.mean(np.abs(r[-window:])))


def entry_exit_step(state: MarketState, vol: float, config: SoiConfig,
                    rng: np.random.Generator) -> MarketState:
    """Apply one activation/deactivation sweep given the current volatility.

    Above the threshold inactive agents enter (as fundamentalists) with
    probability p_enter each; below it active agents leave with probability
    p_exit each, never dropping the active count under 1.  Exactly at the
    threshold nothing happens.
    """
    if vol > config.threshold:
        for a in state.agents:
            if not a.active and rng.random() < config.p_enter:
                a.active = True
                a.strategy = FUNDAMENTALIST
    elif vol < config.threshold:
        n_active = state.n_active
        for a in state.agents:
            if a.active and n_active > 1 and rng.random() < config.p_exit:
                a.active = False
                n_active -= 1
    return state


def run_soi(market_config: MarketConfig, soi_config: SoiConfig, steps: int,
            seed: int) -> SimulationOutput:
    """Coupled run: market steps with an entry/exit sweep every `window` steps.

    With p_enter = p_exit = 0 the output is bit-identical to market.run with
    N = n0 (the entry/exit random draws are skipped entirely).
    """
    soi_on = soi_config.p_enter > 0.0 or soi_config.p_exit > 0.0
    return _kernel_run(
        market_config, steps, seed,
        pool=soi_config.n_pool, n_active=soi_config.n0,
        soi_on=soi_on, window=soi_config.window, threshold=soi_config.threshold,
        p_enter=soi_config.p_enter, p_exit=soi_config.p_exit,
    )


def convergence_summary(output: SimulationOutput, band_center: float,
                        band_factor: float = 2.0) -> dict:
    """First entry time into the band around band_center and the final count."""
    n = output.n_series
    lo, hi = band_center / band_factor, band_center * band_factor
    inside = (n >= lo) & (n <= hi)
    idx = np.flatnonzero(inside)
    return {
        "n_final": int(n[-1]),
        "steps_to_band": int(idx[0]) if idx.size else -1,
    }
