"""Price-level building blocks: moving average, chartist force, mean reversion.

All updates are linear in the price, so the dynamics is scale-free; defaults
(p_f = 1000, sigma = 1) only fix an arbitrary unit.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter


@dataclass
class PricingParams:
    """Strengths and scales of the two trading styles.

    gamma: fundamentalist pull toward p_f per step, in (0, 1)
    b:     chartist trend-following strength
    m:     moving-average window in steps (>= 2)
    sigma: amplitude of the exogenous Gaussian noise
    p_f:   fundamental price level
    """

    gamma: float = 0.01
    b: float = 1.0
    m: int = 30
    sigma: float = 1.0
    p_f: float = 1000.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")


class PriceHistory:
    """Ring buffer of the most recent prices.

    The moving average over window m uses the last m prices including the
    current one, so a constant history has zero force and an exact linear
    trend a*t gives force/(m-1) = a/2 for every m.
    """

    def __init__(self, capacity: int, initial: float | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self._buf: deque[float] = deque(maxlen=capacity)
        self.capacity = capacity
        if initial is not None:
            self._buf.append(float(initial))

    def __len__(self) -> int:
        return len(self._buf)

    @property
    def current(self) -> float:
        if not self._buf:
            raise ValueError("history is empty")
        return self._buf[-1]

    def push(self, price: float) -> None:
        self._buf.append(float(price))

    def moving_average(self, m: int) -> float:
        if m < 1:
            raise ValueError("window must be positive")
        if m > len(self._buf):
            raise ValueError(f"need {m} buffered prices, have {len(self._buf)}")
        it = iter(reversed(self._buf))
        return sum(next(it) for _ in range(m)) / m


def moving_average(hist: PriceHistory, m: int) -> float:
    """Arithmetic mean of the last m buffered prices (errors if fewer exist)."""
    return hist.moving_average(m)


def chartist_force(p: float, p_m: float) -> float:
    """Signed distance between the price and its smoothed profile."""
    return p - p_m


def effective_potential(d: float, b: float, m: int) -> float:
    """Quadratic potential of the linear force: -(b / (2(m-1))) d^2."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return -(b / (2.0 * (m - 1))) * d * d


def chartist_step(hist: PriceHistory, params: PricingParams, rng: np.random.Generator) -> float:
    """Next price under pure trend following (does not advance the buffer)."""
    p = hist.current
    p_m = hist.moving_average(params.m)
    return p + (params.b / (params.m - 1)) * chartist_force(p, p_m) + params.sigma * rng.standard_normal()


def fundamentalist_step(p: float, params: PricingParams, rng: np.random.Generator) -> float:
    """Next price under pure mean reversion toward p_f."""
    return p + params.gamma * (params.p_f - p) + params.sigma * rng.standard_normal()


def excess_demand(hist: PriceHistory, n_c: int, n_f: int, agents, params: PricingParams) -> float:
    """Net buy pressure of a roster of agents.

    ``agents`` iterates over the chartists as (m_i, b_i) pairs; every
    chartist window must be covered by the buffered history.  The
    homogeneous case collapses to
    (N_f/N) gamma (p_f - p) + (N_c/N) (b/(M-1)) (p - p_M).
    """
    n = n_c + n_f
    if n < 1:
        raise ValueError("empty market")
    p = hist.current
    ed = (n_f / n) * params.gamma * (params.p_f - p)
    for m_i, b_i in agents:
        p_mi = hist.moving_average(m_i)
        ed += (b_i / (m_i - 1)) * (p - p_mi) / n
    return ed


def price_step(hist: PriceHistory, ed: float, sigma: float, rng: np.random.Generator) -> float:
    """Linearized price formation p(t+1) = p(t) + ED + sigma xi; advances the buffer."""
    p_next = hist.current + ed + sigma * rng.standard_normal()
    hist.push(p_next)
    return p_next


def simulate_fundamentalist(params: PricingParams, steps: int, rng: np.random.Generator,
                            p0: float | None = None) -> np.ndarray:
    """Trajectory of the pure fundamentalist price, exact AR(1) around p_f."""
    if p0 is None:
        p0 = params.p_f
    noise = params.sigma * rng.standard_normal(steps)
    # y_t = (1-gamma) y_{t-1} + noise with y = p - p_f
    y = lfilter([1.0], [1.0, -(1.0 - params.gamma)], noise, zi=[(1.0 - params.gamma) * (p0 - params.p_f)])[0]
    return params.p_f + y


def simulate_chartist(params: PricingParams, steps: int, rng: np.random.Generator,
                      p0: float | None = None) -> np.ndarray:
    """Trajectory of the pure chartist price (warm start: m copies of p0)."""
    if p0 is None:
        p0 = params.p_f
    m = params.m
    coef = params.b / (m - 1)
    buf = np.empty(steps + m)
    buf[:m] = p0
    noise = params.sigma * rng.standard_normal(steps)
    run_sum = p0 * m
    for t in range(steps):
        p = buf[m + t - 1]
        p_m = run_sum / m
        buf[m + t] = p + coef * (p - p_m) + noise[t]
        run_sum += buf[m + t] - buf[t]
    return buf[m:]


def ar1_stationary_variance(params: PricingParams) -> float:
    """Closed-form long-run variance of p - p_f for the fundamentalist process."""
    a = 1.0 - params.gamma
    return params.sigma**2 / (1.0 - a * a)
