"""Two-strategy herding chain and its stationary-density / first-passage oracles.

The population splits into chartists (count ``n_c``) and fundamentalists
(``n_f = N - n_c``).  Per step, at most one agent switches group; the switch
probabilities combine imitation (proportional to the size of the arrival
group) with a spontaneous self-conversion floor, optionally biased toward the
fundamentalist group.  Alongside the simulated chain this module provides
three independent routes to the stationary law of the chartist fraction
``x = n_c / N`` (closed form, quadrature of the continuum drift/diffusion,
and a large-N approximation) plus the analytic mean switching time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit
from scipy import special


@dataclass
class HerdingParams:
    """Parameters of the switching dynamics.

    ``beta`` is the per-agent rate-speed.  When ``aggregate`` is true the
    parameters drive the one-switch-per-step chain and the total per-step
    switch probability is required to stay <= 1 over every reachable state;
    set ``aggregate=False`` for per-agent Bernoulli use (market module),
    where each individual probability is clamped instead.

    If ``r`` is given, the self-conversion scalars are tied to the
    population size as ``k1 = k2 = r / n_agents``.
    """

    n_agents: int
    beta: Optional[float] = None
    k1: float = 0.0
    k2: float = 0.0
    delta: float = 0.0
    r: Optional[float] = None
    aggregate: bool = True

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be a positive integer")
        if self.r is not None:
            if not 0.0 < self.r < 1.0:
                raise ValueError("r must lie in (0, 1)")
            self.k1 = self.k2 = self.r / self.n_agents
        if self.beta is None:
            # default keeps the chain comparable with the headline speed 0.02
            # after rescaling the aggregate rate by the population size
            self.beta = 0.02 / self.n_agents if self.aggregate else 0.02
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")
        if self.k1 < 0.0 or self.k2 < 0.0:
            raise ValueError("k1 and k2 must be nonnegative")
        if self.aggregate:
            pmax = self.max_step_probability()
            if pmax > 1.0 + 1e-12:
                raise ValueError(
                    f"per-step switch probability can reach {pmax:.4g} > 1; "
                    "reduce beta (the bound is checked over every state)"
                )

    @property
    def epsilon(self) -> float:
        """Control parameter K*N separating bimodal from unimodal behavior."""
        return self.k1 * self.n_agents

    def max_step_probability(self) -> float:
        """Largest p_up + p_down over all states n_c in [0, N]."""
        n = self.n_agents
        nc = np.arange(n + 1, dtype=float)
        nf = n - nc
        pu = self.beta * (1.0 - self.delta) * nf * (self.k1 + nc / n)
        pd = self.beta * (1.0 + self.delta) * nc * (self.k2 + nf / n)
        return float(np.max(pu + pd))


@dataclass
class HerdingState:
    """Macroscopic state of the chain: chartist count and step counter."""

    n_c: int
    t: int = 0

    def n_f(self, params: HerdingParams) -> int:
        return params.n_agents - self.n_c

    def x(self, params: HerdingParams) -> float:
        return self.n_c / params.n_agents


@dataclass
class DensityCurve:
    """Probability density of the chartist fraction on a uniform midpoint grid.

    The grid lives strictly inside (0, 1) so that integrable endpoint
    singularities are never evaluated.  ``density`` is normalized by
    midpoint quadrature on construction helpers; use :meth:`integral`
    to check.
    """

    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.density.shape:
            raise ValueError("grid and density must be 1-d arrays of equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.grid[0] <= 0.0 or self.grid[-1] >= 1.0:
            raise ValueError("grid must lie strictly inside (0, 1)")
        if np.any(self.density < 0):
            raise ValueError("density must be nonnegative")

    @staticmethod
    def midpoints(grid_size: int) -> np.ndarray:
        if grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        return (np.arange(grid_size) + 0.5) / grid_size

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def integral(self) -> float:
        return float(np.sum(self.density) * self.dx)

    def normalized(self) -> "DensityCurve":
        z = self.integral()
        if not np.isfinite(z) or z <= 0.0:
            raise ValueError("normalization integral diverged")
        return DensityCurve(self.grid, self.density / z)

    def mean(self) -> float:
        return float(np.sum(self.grid * self.density) * self.dx)

    def l1_distance(self, other: "DensityCurve") -> float:
        if self.grid.shape != other.grid.shape or not np.allclose(self.grid, other.grid):
            raise ValueError("curves must share the same grid")
        return float(np.sum(np.abs(self.density - other.density)) * self.dx)

    def coarsen(self, n_bins: int) -> np.ndarray:
        """Probability mass per equal-width bin on [0, 1]."""
        if len(self.grid) % n_bins != 0:
            raise ValueError("grid size must be a multiple of n_bins")
        per = len(self.grid) // n_bins
        return self.density.reshape(n_bins, per).sum(axis=1) * self.dx

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("x,density\n")
            for x, d in zip(self.grid, self.density):
                fh.write(f"{float(x)!r},{float(d)!r}\n")


@dataclass
class PassageStats:
    """Switching statistics of a trajectory of the chartist fraction."""

    n_switches: int
    t0_empirical: float
    t0_stderr: float
    t1: float  # mean residence below the lower band (bubble formation)
    t2: float  # mean residence above the upper band (bubble duration)
    t0_analytic: float = math.nan


def _check_state(state: HerdingState, params: HerdingParams) -> None:
    if not 0 <= state.n_c <= params.n_agents:
        raise ValueError(f"n_c={state.n_c} outside [0, {params.n_agents}]")


def asymmetric_rates(state: HerdingState, params: HerdingParams) -> tuple[float, float]:
    """Per-step probabilities of n_c -> n_c + 1 and n_c -> n_c - 1."""
    _check_state(state, params)
    n = params.n_agents
    n_c = state.n_c
    n_f = n - n_c
    p_up = params.beta * (1.0 - params.delta) * n_f * (params.k1 + n_c / n)
    p_down = params.beta * (1.0 + params.delta) * n_c * (params.k2 + n_f / n)
    return p_up, p_down


def symmetric_rates(state: HerdingState, params: HerdingParams) -> tuple[float, float]:
    """Asymmetry-free rates; requires delta == 0."""
    if params.delta != 0.0:
        raise ValueError("symmetric_rates requires delta = 0")
    return asymmetric_rates(state, params)


def step(state: HerdingState, params: HerdingParams, rng: np.random.Generator) -> HerdingState:
    """Advance the chain by one step (at most one agent switches)."""
    p_up, p_down = asymmetric_rates(state, params)
    u = rng.random()
    n_c = state.n_c
    if u < p_up:
        n_c += 1
    elif u < p_up + p_down:
        n_c -= 1
    return HerdingState(n_c=n_c, t=state.t + 1)


@njit(cache=True)
def _chain_kernel(n_c0, n, beta, k1, k2, delta, uniforms, out):
    n_c = n_c0
    for t in range(uniforms.shape[0]):
        u = uniforms[t]
        p_up = beta * (1.0 - delta) * (n - n_c) * (k1 + n_c / n)
        p_down = beta * (1.0 + delta) * n_c * (k2 + (n - n_c) / n)
        if u < p_up:
            n_c += 1
        elif u < p_up + p_down:
            n_c -= 1
        out[t] = n_c
    return out


def simulate(
    params: HerdingParams,
    steps: int,
    seed=None,
    n_c0: Optional[int] = None,
) -> np.ndarray:
    """Run the chain and return the n_c trajectory (int32, one entry per step).

    ``seed`` may be an integer, a SeedSequence or a Generator.
    """
    if not params.aggregate:
        raise ValueError("simulate requires aggregate-chain parameters")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n_c0 is None:
        n_c0 = params.n_agents // 2
    if not 0 <= n_c0 <= params.n_agents:
        raise ValueError("n_c0 outside [0, N]")
    out = np.empty(steps, dtype=np.int32)
    # draw uniforms in chunks to bound memory on very long runs
    chunk = 20_000_000
    done = 0
    n_c = n_c0
    while done < steps:
        m = min(chunk, steps - done)
        u = rng.random(m)
        _chain_kernel(n_c, params.n_agents, params.beta, params.k1, params.k2,
                      params.delta, u, out[done:done + m])
        n_c = int(out[done + m - 1])
        done += m
    return out


def occupancy_histogram(n_c_traj: np.ndarray, n_agents: int, n_bins: int = 50) -> np.ndarray:
    """Probability mass of x = n_c / N per equal-width bin on [0, 1]."""
    x = n_c_traj / n_agents
    counts, _ = np.histogram(x, bins=n_bins, range=(0.0, 1.0))
    return counts / counts.sum()


def stationary_symmetric(eps: float, grid_size: int = 2000) -> DensityCurve:
    """Closed-form equilibrium density  x^(eps-1) (1-x)^(eps-1), normalized."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    x = DensityCurve.midpoints(grid_size)
    logd = (eps - 1.0) * (np.log(x) + np.log1p(-x))
    d = np.exp(logd - logd.max())
    return DensityCurve(x, d).normalized()


def drift(x: float, params: HerdingParams) -> float:
    """Continuum drift of the chartist fraction, including 1/N^2 terms."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x outside [0, 1]")
    b, d = params.beta, params.delta
    n = params.n_agents
    return b * (
        -2.0 * d * x * (1.0 - x)
        + (1.0 - d) * params.k1 * (1.0 - x)
        - (1.0 + d) * params.k2 * x
        - d / n**2
    )


def diffusion(x: float, params: HerdingParams) -> float:
    """Continuum diffusion of the chartist fraction, including 1/N^2 terms."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x outside [0, 1]")
    b, d = params.beta, params.delta
    n = params.n_agents
    return b * (
        (2.0 / n) * x * (1.0 - x)
        + ((1.0 - d) / n) * params.k1 * (1.0 - x)
        + ((1.0 + d) / n) * params.k2 * x
        - (2.0 * d / n**2) * (x - 0.5)
    )


def stationary_numeric(params: HerdingParams, grid_size: int = 2000) -> DensityCurve:
    """Stationary density by quadrature:  C/D(x) * exp( int^x 2A/D )."""
    x = DensityCurve.midpoints(grid_size)
    a = np.array([drift(xi, params) for xi in x])
    dcoef = np.array([diffusion(xi, params) for xi in x])
    if np.any(dcoef <= 0.0):
        raise ValueError("diffusion coefficient is not positive on the grid")
    dx = 1.0 / grid_size
    inner = np.cumsum(2.0 * a / dcoef) * dx
    logp = inner - np.log(dcoef)
    d = np.exp(logp - logp.max())
    return DensityCurve(x, d).normalized()


def stationary_approx(params: HerdingParams, grid_size: int = 2000) -> DensityCurve:
    """Large-N stationary density  x^(r(1-d)-1) (1-x)^(r(1+d)-1) exp(-2 d N x)."""
    if params.r is None:
        raise ValueError("stationary_approx requires the r parameterization")
    r, d, n = params.r, params.delta, params.n_agents
    x = DensityCurve.midpoints(grid_size)
    logd = (
        (r * (1.0 - d) - 1.0) * np.log(x)
        + (r * (1.0 + d) - 1.0) * np.log1p(-x)
        - 2.0 * d * n * x
    )
    dens = np.exp(logd - logd.max())
    return DensityCurve(x, dens).normalized()


def analytic_switching_time(n_agents: int, beta: float, eps: float) -> float:
    """Mean steps between metastable switches: (N/beta) * pi * cos(pi e) / ((1-2e) sin(pi e)).

    The 0/0 point at eps = 0.5 is evaluated by its continuous extension
    (series of tan(z)/z around z = 0, relative error < 1e-6).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    u = eps - 0.5
    z = math.pi * u
    # cos(pi e) / ((1-2e) sin(pi e)) == tan(pi u) / (2 u)
    if abs(z) < 0.1:
        f = (math.pi / 2.0) * (1.0 + z * z / 3.0 + 2.0 * z**4 / 15.0)
    else:
        f = math.tan(z) / (2.0 * u)
    return (n_agents / beta) * math.pi * f


def mean_first_passage_time(params: HerdingParams) -> float:
    """Analytic mean switching time of the symmetric chain, in steps."""
    if params.delta != 0.0:
        raise ValueError("mean_first_passage_time applies to the symmetric case")
    return analytic_switching_time(params.n_agents, params.beta, params.epsilon)


def measure_switching(
    trajectory: np.ndarray,
    lower: float = 0.25,
    upper: float = 0.75,
    t0_analytic: float = math.nan,
) -> PassageStats:
    """Count metastable switches as alternating crossings of two bands.

    A switch is recorded each time the trajectory, having last touched one
    band, first touches the other.  Residence times below (t1) and above
    (t2) are the spans between consecutive alternations.
    """
    if not 0.0 < lower < upper < 1.0:
        raise ValueError("bands must satisfy 0 < lower < upper < 1")
    x = np.asarray(trajectory, dtype=float)
    if x.size == 0:
        return PassageStats(0, math.nan, math.nan, math.nan, math.nan, t0_analytic)
    region = np.full(x.shape, -1, dtype=np.int8)
    region[x <= lower] = 0
    region[x >= upper] = 1
    idx = np.flatnonzero(region >= 0)
    if idx.size == 0:
        return PassageStats(0, math.nan, math.nan, math.nan, math.nan, t0_analytic)
    r = region[idx]
    change = np.flatnonzero(np.diff(r) != 0) + 1
    times = idx[np.concatenate(([0], change))]
    labels = r[np.concatenate(([0], change))]
    n_switches = len(change)
    if n_switches == 0:
        return PassageStats(0, math.nan, math.nan, math.nan, math.nan, t0_analytic)
    intervals = np.diff(times).astype(float)
    low_res = intervals[labels[:-1] == 0]
    high_res = intervals[labels[:-1] == 1]
    t0_emp = float(intervals.mean())
    t0_se = float(intervals.std(ddof=1) / math.sqrt(len(intervals))) if len(intervals) > 1 else math.nan
    t1 = float(low_res.mean()) if low_res.size else math.nan
    t2 = float(high_res.mean()) if high_res.size else math.nan
    return PassageStats(n_switches, t0_emp, t0_se, t1, t2, t0_analytic)


def symmetric_mode_structure(curve: DensityCurve) -> str:
    """Classify the midpoint of a symmetric density via a second difference.

    Returns 'minimum', 'maximum' or 'flat' at mid-grid.
    """
    n = len(curve.grid)
    mid = n // 2
    d2 = curve.density[mid + 1] - 2.0 * curve.density[mid] + curve.density[mid - 1]
    scale = max(abs(curve.density[mid]), 1e-300) * 1e-8
    if d2 > scale:
        return "minimum"
    if d2 < -scale:
        return "maximum"
    return "flat"


def beta_density_value(eps: float, x: float) -> float:
    """Independent oracle: exact Beta(eps, eps) density at x."""
    return x ** (eps - 1.0) * (1.0 - x) ** (eps - 1.0) / special.beta(eps, eps)
