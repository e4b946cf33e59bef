"""Stylized-fact estimators for return series.

Pure functions: autocorrelation, volatility autocorrelation, excess
kurtosis, Hill tail exponent and aggregational-Gaussianity kurtosis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class StatsReport:
    acf_returns: np.ndarray
    acf_squared: np.ndarray
    excess_kurtosis: float
    tail_exponent: float
    tail_stderr: float
    aggregation_kurtosis: dict[int, float]
    n_samples: int


def acf(series, max_lag: int):
    """Sample autocorrelation at lags 1..max_lag (mean-removed, lag-0 normalized)."""
    x = np.asarray(series, dtype=float)
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if x.size <= 3 * max_lag:
        raise ValueError("series must be longer than 3 * max_lag")
    y = x - x.mean()
    denom = float(np.dot(y, y))
    if denom == 0.0:
        raise ValueError("constant series has no autocorrelation")
    out = np.empty(max_lag)
    for lag in range(1, max_lag + 1):
        out[lag - 1] = float(np.dot(y[:-lag], y[lag:])) / denom
    return out


def volatility_acf(returns, max_lag: int):
    """Autocorrelation of squared returns (volatility-clustering diagnostic)."""
    r = np.asarray(returns, dtype=float)
    return acf(r * r, max_lag)


def excess_kurtosis(returns) -> float:
    """Fourth standardized moment minus 3."""
    r = np.asarray(returns, dtype=float)
    if r.size < 1000:
        raise ValueError("need at least 1000 samples")
    y = r - r.mean()
    var = float(np.mean(y * y))
    if var == 0.0:
        raise ValueError("zero-variance series")
    return float(np.mean(y**4) / var**2 - 3.0)


def tail_exponent(returns, tail_fraction: float = 0.05) -> tuple[float, float]:
    """Hill estimate of the power-law exponent of |returns|, with stderr alpha/sqrt(k)."""
    if not 0.0 < tail_fraction <= 0.2:
        raise ValueError("tail_fraction must lie in (0, 0.2]")
    a = np.abs(np.asarray(returns, dtype=float))
    a = a[a > 0]
    k = int(math.floor(a.size * tail_fraction))
    if k < 200:
        raise ValueError(f"need at least 200 tail samples, have {k}")
    srt = np.sort(a)
    top = srt[-k:]
    x_k = srt[-k - 1]
    alpha = k / float(np.sum(np.log(top / x_k)))
    return alpha, alpha / math.sqrt(k)


def aggregation_kurtosis(returns, horizons) -> dict[int, float]:
    """Excess kurtosis of non-overlapping sums of returns at each horizon."""
    r = np.asarray(returns, dtype=float)
    out = {}
    for h in sorted(horizons):
        if h < 1:
            raise ValueError("horizons must be positive")
        n_blocks = r.size // h
        if n_blocks < 1000:
            raise ValueError(f"horizon {h} leaves fewer than 1000 aggregated samples")
        agg = r[: n_blocks * h].reshape(n_blocks, h).sum(axis=1)
        out[h] = excess_kurtosis(agg)
    return out


def compute_report(returns, max_lag: int = 50,
                   tail_fraction: float = 0.05,
                   horizons=(1, 10, 100)) -> StatsReport:
    r = np.asarray(returns, dtype=float)
    alpha, se = tail_exponent(r, tail_fraction)
    return StatsReport(
        acf_returns=acf(r, max_lag),
        acf_squared=volatility_acf(r, max_lag),
        excess_kurtosis=excess_kurtosis(r),
        tail_exponent=alpha,
        tail_stderr=se,
        aggregation_kurtosis=aggregation_kurtosis(r, horizons),
        n_samples=int(r.size),
    )
