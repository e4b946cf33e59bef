"""Shared utilities for the test suite: atom-aware binning and seed splitting.

The chain lives on the N+1 atoms x = n/N.  Histogram edges are shifted by
half an atom spacing so every atom sits at a bin center and no probability
mass straddles an edge; theory curves are binned through their CDF so the
comparison is exact up to quadrature error.
"""

from __future__ import annotations

import numpy as np

from fcmarket.herding import DensityCurve


def atom_edges(n_agents: int, n_bins: int = 50) -> np.ndarray:
    """Bin edges centered on the lattice x = n/N, covering [0, 1]."""
    return np.linspace(-0.5 / n_agents, 1.0 + 0.5 / n_agents, n_bins + 1)


def atom_histogram(n_c_traj: np.ndarray, n_agents: int, edges: np.ndarray) -> np.ndarray:
    """Empirical probability mass per bin for an integer n_c trajectory."""
    atoms = np.arange(n_agents + 1) / n_agents
    idx = np.clip(np.searchsorted(edges, atoms, side="right") - 1, 0, len(edges) - 2)
    counts = np.zeros(len(edges) - 1)
    occ = np.bincount(np.asarray(n_c_traj, dtype=np.int64), minlength=n_agents + 1)
    np.add.at(counts, idx, occ)
    return counts / counts.sum()


def curve_cdf(curve: DensityCurve):
    """Piecewise-linear CDF nodes of a midpoint-grid density curve."""
    x = np.concatenate(([0.0], curve.grid + curve.dx / 2.0))
    c = np.concatenate(([0.0], np.cumsum(curve.density) * curve.dx))
    return x, c / c[-1]


def binned_theory(curve: DensityCurve, edges: np.ndarray) -> np.ndarray:
    """Probability mass of the curve inside each histogram bin."""
    x, c = curve_cdf(curve)
    mass = np.diff(np.interp(np.clip(edges, 0.0, 1.0), x, c))
    return mass / mass.sum()


def quantile_starts(curve: DensityCurve, n_agents: int, k: int) -> list[int]:
    """Initial chartist counts at k evenly spaced quantiles of the curve."""
    x, c = curve_cdf(curve)
    qs = (np.arange(k) + 0.5) / k
    return [int(round(float(np.interp(q, c, x)) * n_agents)) for q in qs]


def cell_seed(master_seed: int, cell_index: int) -> int:
    """Independent per-cell seed derived from a master seed."""
    return int(np.random.SeedSequence((master_seed, cell_index)).generate_state(1)[0])
