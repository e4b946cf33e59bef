"""The full coupled market: agent roster, price-dependent switching, main loop.

Agents switch strategy independently (Bernoulli per agent per step) with
probabilities that combine the herding terms with optional exponential price
signals; the post-switch roster sets the excess demand that moves the price.
The hot loop is compiled with numba; a given (config, steps, seed) triple is
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .herding import HerdingParams
from .pricing import PriceHistory, PricingParams

FUNDAMENTALIST = 0
CHARTIST = 1


@dataclass
class Agent:
    strategy: int = FUNDAMENTALIST
    m_i: int = 30
    b_i: float = 1.0
    active: bool = True

    def __post_init__(self):
        if self.strategy not in (FUNDAMENTALIST, CHARTIST):
            raise ValueError("strategy must be FUNDAMENTALIST or CHARTIST")
        if self.m_i < 2:
            raise ValueError("m_i must be at least 2")
        if self.b_i < 0.0:
            raise ValueError("b_i must be nonnegative")


@dataclass
class Heterogeneity:
    """Uniform bounds for quenched per-agent horizons and strengths."""

    m_range: tuple[int, int] = (10, 50)
    b_range: tuple[float, float] = (0.0, 2.0)

    def __post_init__(self):
        if not 2 <= self.m_range[0] <= self.m_range[1]:
            raise ValueError("m_range must satisfy 2 <= lo <= hi")
        if not 0.0 <= self.b_range[0] <= self.b_range[1]:
            raise ValueError("b_range must satisfy 0 <= lo <= hi")


@dataclass
class MarketConfig:
    pricing: PricingParams = field(default_factory=PricingParams)
    herding: HerdingParams = field(
        default_factory=lambda: HerdingParams(n_agents=500, r=0.5, delta=0.003, aggregate=False)
    )
    use_price_terms: bool = True
    heterogeneity: Optional[Heterogeneity] = None
    exp_cap: float = 10.0
    x0: float = 0.5  # initial chartist fraction

    def __post_init__(self):
        if self.exp_cap < 1.0:
            raise ValueError("exp_cap must be at least 1")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValueError("x0 must lie in [0, 1]")
        if self.heterogeneity is not None:
            # history capacity must cover the largest possible window
            if self.heterogeneity.m_range[1] < 2:
                raise ValueError("invalid heterogeneity ranges")


@dataclass
class MarketState:
    agents: list[Agent]
    hist: PriceHistory
    t: int = 0

    @property
    def n_active(self) -> int:
        return sum(a.active for a in self.agents)

    @property
    def n_c(self) -> int:
        return sum(a.active and a.strategy == CHARTIST for a in self.agents)

    @property
    def n_f(self) -> int:
        return self.n_active - self.n_c


@dataclass
class SimulationOutput:
    """Per-step time series of one run; returns[t] = prices[t+1] - prices[t]."""

    prices: np.ndarray
    returns: np.ndarray
    x_series: np.ndarray
    n_series: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.returns) != len(self.prices) - 1:
            raise ValueError("returns must be one shorter than prices")
        if len(self.x_series) != len(self.prices) or len(self.n_series) != len(self.prices):
            raise ValueError("inconsistent series lengths")

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("t,price,return,x,n\n")
            n = len(self.prices)
            for t in range(n):
                ret = repr(float(self.returns[t])) if t < n - 1 else ""
                fh.write(f"{t},{float(self.prices[t])!r},{ret},"
                         f"{float(self.x_series[t])!r},{int(self.n_series[t])}\n")

    @staticmethod
    def from_csv(path) -> "SimulationOutput":
        with open(path) as fh:
            rows = [line.rstrip("\n") for line in fh if not line.startswith("#")]
        if not rows or rows[0] != "t,price,return,x,n":
            raise ValueError(f"{path} is not a simulation CSV")
        cells = [row.split(",") for row in rows[1:]]
        return SimulationOutput(
            prices=np.array([float(c[1]) for c in cells]),
            returns=np.array([float(c[2]) for c in cells[:-1]]),
            x_series=np.array([float(c[3]) for c in cells]),
            n_series=np.array([int(c[4]) for c in cells], dtype=np.int64),
            seed=-1,
        )


def transition_probabilities(agent: Agent, state: MarketState, config: MarketConfig) -> tuple[float, float]:
    """Per-step (p_to_f, p_to_c) for one active agent.

    The side matching the agent's current strategy is the one acted on; the
    other is reported as 0.  Exponential price signals are capped at
    config.exp_cap before the final clamp to 1.
    """
    if not agent.active:
        raise ValueError("inactive agents do not switch")
    h = config.herding
    pr = config.pricing
    n = state.n_active
    n_c = state.n_c
    n_f = n - n_c
    p = state.hist.current
    if config.use_price_terms:
        e_f = min(math.exp(min(pr.gamma * abs(p - pr.p_f), math.log(config.exp_cap))), config.exp_cap)
        if len(state.hist) >= agent.m_i:
            force = (agent.b_i / (agent.m_i - 1)) * (p - state.hist.moving_average(agent.m_i))
        else:
            force = 0.0
        e_c = min(math.exp(min(abs(force), math.log(config.exp_cap))), config.exp_cap)
    else:
        e_f = e_c = 1.0
    if agent.strategy == CHARTIST:
        p_to_f = min(h.beta * (1.0 + h.delta) * (h.k2 + n_f / n) * e_f, 1.0)
        return p_to_f, 0.0
    p_to_c = min(h.beta * (1.0 - h.delta) * (h.k1 + n_c / n) * e_c, 1.0)
    return 0.0, p_to_c


def market_step(state: MarketState, config: MarketConfig, rng: np.random.Generator) -> MarketState:
    """One full step: independent switches, then demand, then price update.

    Pure-python reference path; `run` uses the compiled kernel instead.
    """
    pr = config.pricing
    probs = []
    for a in state.agents:
        if not a.active:
            probs.append(None)
            continue
        probs.append(transition_probabilities(a, state, config))
    for a, pp in zip(state.agents, probs):
        if pp is None:
            continue
        p_to_f, p_to_c = pp
        if a.strategy == CHARTIST:
            if rng.random() < p_to_f:
                a.strategy = FUNDAMENTALIST
        else:
            if rng.random() < p_to_c:
                a.strategy = CHARTIST
    chartists = [
        (a.m_i, a.b_i)
        for a in state.agents
        if a.active and a.strategy == CHARTIST and len(state.hist) >= a.m_i
    ]
    from .pricing import excess_demand, price_step

    ed = excess_demand(state.hist, state.n_c, state.n_f, chartists, pr)
    price_step(state.hist, ed, pr.sigma, rng)
    state.t += 1
    return state


@njit(cache=True)
def _market_kernel(seed, n_steps, strategy, active, m_arr, b_arr,
                   beta, k1, k2, delta, gamma, sigma, p_f, p0,
                   use_exp, log_cap, exp_cap,
                   soi_on, window, threshold, p_enter, p_exit,
                   prices, x_out, n_out):
    np.random.seed(seed)
    pool = strategy.shape[0]
    P = np.empty(n_steps + 1)
    S = np.empty(n_steps + 2)
    P[0] = p0
    S[0] = 0.0
    S[1] = p0
    n_active = 0
    n_c = 0
    for i in range(pool):
        if active[i]:
            n_active += 1
            if strategy[i] == 1:
                n_c += 1
    force = np.zeros(pool)
    for t in range(n_steps):
        p = P[t]
        for i in range(pool):
            if active[i]:
                m = m_arr[i]
                if t + 1 >= m:
                    pm = (S[t + 1] - S[t + 1 - m]) / m
                    force[i] = (b_arr[i] / (m - 1.0)) * (p - pm)
                else:
                    force[i] = 0.0
        inv_n = 1.0 / n_active
        n_f = n_active - n_c
        if use_exp:
            arg = gamma * abs(p - p_f)
            e_f = exp_cap if arg > log_cap else math.exp(arg)
        else:
            e_f = 1.0
        base_cf = beta * (1.0 + delta) * (k2 + n_f * inv_n) * e_f
        if base_cf > 1.0:
            base_cf = 1.0
        base_fc = beta * (1.0 - delta) * (k1 + n_c * inv_n)
        dc = 0
        for i in range(pool):
            if not active[i]:
                continue
            if strategy[i] == 1:
                if np.random.random() < base_cf:
                    strategy[i] = 0
                    dc -= 1
            else:
                if use_exp:
                    arg = abs(force[i])
                    e_c = exp_cap if arg > log_cap else math.exp(arg)
                else:
                    e_c = 1.0
                prob = base_fc * e_c
                if prob > 1.0:
                    prob = 1.0
                if np.random.random() < prob:
                    strategy[i] = 1
                    dc += 1
        n_c += dc
        n_f = n_active - n_c
        ed = (n_f * inv_n) * gamma * (p_f - p)
        for i in range(pool):
            if active[i] and strategy[i] == 1:
                ed += inv_n * force[i]
        p_next = p + ed + sigma * np.random.standard_normal()
        P[t + 1] = p_next
        S[t + 2] = S[t + 1] + p_next
        prices[t] = p
        x_out[t] = n_c * inv_n
        n_out[t] = n_active
        if soi_on and (t + 1) % window == 0 and t + 1 >= window:
            vol = 0.0
            for k in range(t + 1 - window, t + 1):
                vol += abs(P[k + 1] - P[k])
            vol /= window
            if vol > threshold:
                for i in range(pool):
                    if not active[i]:
                        if np.random.random() < p_enter:
                            active[i] = True
                            strategy[i] = 0
                            n_active += 1
            elif vol < threshold:
                for i in range(pool):
                    if active[i] and n_active > 1:
                        if np.random.random() < p_exit:
                            active[i] = False
                            n_active -= 1
                            if strategy[i] == 1:
                                n_c -= 1


def build_roster(config: MarketConfig, pool: int, n_active: int, rng: np.random.Generator):
    """Quenched agent attributes and initial strategies for a pool of agents.

    Heterogeneous attributes are drawn once; the first ``n_active`` agents
    start active, with round(x0 * n_active) of them chartists.
    """
    if not 1 <= n_active <= pool:
        raise ValueError("need 1 <= n_active <= pool")
    het = config.heterogeneity
    if het is not None:
        m_arr = rng.integers(het.m_range[0], het.m_range[1] + 1, size=pool).astype(np.int64)
        b_arr = rng.uniform(het.b_range[0], het.b_range[1], size=pool)
    else:
        m_arr = np.full(pool, config.pricing.m, dtype=np.int64)
        b_arr = np.full(pool, config.pricing.b, dtype=float)
    strategy = np.zeros(pool, dtype=np.int8)
    n_c0 = int(round(config.x0 * n_active))
    strategy[:n_c0] = CHARTIST
    active = np.zeros(pool, dtype=np.bool_)
    active[:n_active] = True
    return strategy, active, m_arr, b_arr


def _kernel_run(config: MarketConfig, steps: int, seed: int,
                pool: int, n_active: int,
                soi_on: bool = False, window: int = 1, threshold: float = 0.0,
                p_enter: float = 0.0, p_exit: float = 0.0) -> SimulationOutput:
    h = config.herding
    pr = config.pricing
    max_m = config.heterogeneity.m_range[1] if config.heterogeneity else pr.m
    if steps < max_m:
        raise ValueError(f"steps must cover the warm-up window ({max_m})")
    ss = np.random.SeedSequence(seed)
    roster_seed, kernel_seed = ss.generate_state(2)
    rng = np.random.default_rng(roster_seed)
    strategy, active, m_arr, b_arr = build_roster(config, pool, n_active, rng)
    prices = np.empty(steps)
    x_out = np.empty(steps)
    n_out = np.empty(steps, dtype=np.int64)
    _market_kernel(
        np.int64(kernel_seed), steps, strategy, active, m_arr, b_arr,
        h.beta, h.k1, h.k2, h.delta, pr.gamma, pr.sigma, pr.p_f, pr.p_f,
        config.use_price_terms, math.log(config.exp_cap), config.exp_cap,
        soi_on, window, threshold, p_enter, p_exit,
        prices, x_out, n_out,
    )
    return SimulationOutput(
        prices=prices,
        returns=np.diff(prices),
        x_series=x_out,
        n_series=n_out,
        seed=seed,
    )


def run(config: MarketConfig, steps: int, seed: int) -> SimulationOutput:
    """Full deterministic simulation; same (config, seed) gives identical output."""
    n = config.herding.n_agents
    return _kernel_run(config, steps, seed, pool=n, n_active=n)
