"""Command-line surface: config parsing, experiment subcommands, CSV emission.

Every output file starts with ``#`` comment lines recording the tool
version, the resolved configuration and the seed, so any artifact can be
reproduced from its own header.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .herding import (
    HerdingParams,
    measure_switching,
    occupancy_histogram,
    simulate,
    stationary_approx,
    stationary_numeric,
    stationary_symmetric,
    DensityCurve,
)
from .market import Heterogeneity, MarketConfig, SimulationOutput, run
from .pricing import PricingParams
from .soi import SoiConfig, convergence_summary, run_soi
from .stats import compute_report

_VALID_KEYS = {
    "herding": {"n", "beta", "epsilon", "k1", "k2", "delta", "r"},
    "pricing": {"gamma", "b", "m", "sigma", "p_f"},
    "market": {"use_price_terms", "heterogeneous", "m_min", "m_max",
               "b_min", "b_max", "exp_cap", "x0", "beta"},
    "soi": {"n_pool", "n0", "window", "threshold", "p_enter", "p_exit"},
}


@dataclass
class RunManifest:
    subcommand: str
    config_path: str | None = None
    seed: int = 0
    out_dir: str = "."
    steps: int = 1_000_000
    extra: dict = field(default_factory=dict)


@dataclass
class ResolvedConfig:
    market: MarketConfig
    soi: SoiConfig
    chain: HerdingParams  # aggregate one-switch-per-step parameterization
    raw: dict


def parse_config(text: str) -> ResolvedConfig:
    """Parse the INI-style config document and fill in documented defaults.

    Unknown keys are rejected with the list of valid keys; invariant
    violations surface as the underlying constructor errors.
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"config syntax error: {exc}") from exc
    for section in cp.sections():
        if section not in _VALID_KEYS:
            raise ValueError(
                f"unknown section [{section}]; valid sections: {sorted(_VALID_KEYS)}"
            )
        for key in cp[section]:
            if key not in _VALID_KEYS[section]:
                raise ValueError(
                    f"unknown key '{key}' in [{section}]; valid keys: "
                    f"{sorted(_VALID_KEYS[section])}"
                )

    def get(section, key, cast, default):
        if cp.has_option(section, key):
            return cast(cp.get(section, key))
        return default

    n = get("herding", "n", int, 500)
    delta = get("herding", "delta", float, 0.003)
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    r = get("herding", "r", float, None)
    epsilon = get("herding", "epsilon", float, None)
    k1 = get("herding", "k1", float, None)
    k2 = get("herding", "k2", float, None)
    if r is None and epsilon is None and k1 is None:
        r = 0.5  # default regime: bimodal, epsilon = 0.5
    if epsilon is not None and k1 is None:
        k1 = k2 = epsilon / n
    if k2 is None:
        k2 = k1
    chain_beta = get("herding", "beta", float, None)
    if r is not None:
        chain = HerdingParams(n_agents=n, beta=chain_beta, delta=delta, r=r)
    else:
        chain = HerdingParams(n_agents=n, beta=chain_beta, delta=delta, k1=k1, k2=k2)

    pricing = PricingParams(
        gamma=get("pricing", "gamma", float, 0.01),
        b=get("pricing", "b", float, 1.0),
        m=get("pricing", "m", int, 30),
        sigma=get("pricing", "sigma", float, 1.0),
        p_f=get("pricing", "p_f", float, 1000.0),
    )

    heterogeneous = get("market", "heterogeneous", lambda s: s.lower() in ("1", "true", "yes"), True)
    het = None
    if heterogeneous:
        het = Heterogeneity(
            m_range=(get("market", "m_min", int, 10), get("market", "m_max", int, 50)),
            b_range=(get("market", "b_min", float, 0.0), get("market", "b_max", float, 2.0)),
        )
    market_beta = get("market", "beta", float, 0.02)
    market_herding = HerdingParams(
        n_agents=n, beta=market_beta, delta=delta,
        k1=chain.k1, k2=chain.k2, aggregate=False,
    )
    market = MarketConfig(
        pricing=pricing,
        herding=market_herding,
        use_price_terms=get("market", "use_price_terms",
                            lambda s: s.lower() in ("1", "true", "yes"), True),
        heterogeneity=het,
        exp_cap=get("market", "exp_cap", float, 10.0),
        x0=get("market", "x0", float, 0.5),
    )

    soi = SoiConfig(
        n_pool=get("soi", "n_pool", int, 6000),
        n0=get("soi", "n0", int, 500),
        window=get("soi", "window", int, 100),
        threshold=get("soi", "threshold", float, SoiConfig.threshold),
        p_enter=get("soi", "p_enter", float, SoiConfig.p_enter),
        p_exit=get("soi", "p_exit", float, SoiConfig.p_exit),
    )

    raw = {
        "n": n, "delta": delta, "r": r, "k1": chain.k1, "k2": chain.k2,
        "chain_beta": chain.beta, "market_beta": market_beta,
        "gamma": pricing.gamma, "b": pricing.b, "m": pricing.m,
        "sigma": pricing.sigma, "p_f": pricing.p_f,
        "use_price_terms": market.use_price_terms,
        "heterogeneous": heterogeneous, "exp_cap": market.exp_cap, "x0": market.x0,
        "soi_n_pool": soi.n_pool, "soi_n0": soi.n0, "soi_window": soi.window,
        "soi_threshold": soi.threshold, "soi_p_enter": soi.p_enter,
        "soi_p_exit": soi.p_exit,
    }
    return ResolvedConfig(market=market, soi=soi, chain=chain, raw=raw)


def _load_config(manifest: RunManifest) -> ResolvedConfig:
    if manifest.config_path:
        text = Path(manifest.config_path).read_text()
    else:
        text = ""
    return parse_config(text)


def _header(manifest: RunManifest, cfg: ResolvedConfig, seed=None) -> list[str]:
    lines = [f"fcmarket v{__version__}", f"seed={manifest.seed if seed is None else seed}"]
    lines += [f"config {k}={v}" for k, v in sorted(cfg.raw.items())]
    return lines


def cell_seed(master_seed: int, cell_index: int) -> int:
    """Documented splitting rule: SeedSequence entropy (master_seed, cell_index)."""
    return int(np.random.SeedSequence((master_seed, cell_index)).generate_state(1)[0])


def _write_series_csv(path, header_lines, columns, rows):
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _cmd_herding(manifest: RunManifest, cfg: ResolvedConfig, out: Path):
    traj = simulate(cfg.chain, manifest.steps, seed=manifest.seed)
    x = traj / cfg.chain.n_agents
    _write_series_csv(out / "herding_x.csv", _header(manifest, cfg),
                      ["t", "x"], ((t, repr(float(v))) for t, v in enumerate(x)))
    stats = measure_switching(x)
    _write_series_csv(out / "herding_switching.csv", _header(manifest, cfg),
                      ["n_switches", "t0_empirical", "t0_stderr", "t1", "t2"],
                      [(stats.n_switches, stats.t0_empirical, stats.t0_stderr,
                        stats.t1, stats.t2)])
    return [out / "herding_x.csv", out / "herding_switching.csv"]


def _cmd_stationary(manifest: RunManifest, cfg: ResolvedConfig, out: Path):
    grid = int(manifest.extra.get("grid", 2000))
    hdr = _header(manifest, cfg)
    files = []
    sym = stationary_symmetric(cfg.chain.epsilon, grid)
    sym.to_csv(out / "stationary_symmetric.csv", hdr)
    files.append(out / "stationary_symmetric.csv")
    num = stationary_numeric(cfg.chain, grid)
    num.to_csv(out / "stationary_numeric.csv", hdr)
    files.append(out / "stationary_numeric.csv")
    if cfg.chain.r is not None:
        approx = stationary_approx(cfg.chain, grid)
        approx.to_csv(out / "stationary_approx.csv", hdr)
        files.append(out / "stationary_approx.csv")
    traj = simulate(cfg.chain, manifest.steps, seed=manifest.seed)
    masses = occupancy_histogram(traj, cfg.chain.n_agents, n_bins=50)
    centers = (np.arange(50) + 0.5) / 50
    _write_series_csv(out / "stationary_histogram.csv", hdr,
                      ["x", "density"],
                      ((repr(float(c)), repr(float(m * 50))) for c, m in zip(centers, masses)))
    files.append(out / "stationary_histogram.csv")
    return files


def _cmd_simulate(manifest: RunManifest, cfg: ResolvedConfig, out: Path):
    output = run(cfg.market, manifest.steps, manifest.seed)
    output.to_csv(out / "simulation.csv", _header(manifest, cfg))
    return [out / "simulation.csv"]


def _cmd_soi(manifest: RunManifest, cfg: ResolvedConfig, out: Path):
    n0_list = manifest.extra.get("n0")
    if n0_list:
        n0_values = [int(v) for v in str(n0_list).split(",")]
    else:
        n0_values = [cfg.soi.n0]
    files = []
    summary = []
    for i, n0 in enumerate(n0_values):
        soi_cfg = SoiConfig(
            n_pool=max(cfg.soi.n_pool, n0), n0=n0, window=cfg.soi.window,
            threshold=cfg.soi.threshold, p_enter=cfg.soi.p_enter, p_exit=cfg.soi.p_exit,
        )
        seed = cell_seed(manifest.seed, i)
        output = run_soi(cfg.market, soi_cfg, manifest.steps, seed)
        path = out / f"soi_n{n0}.csv"
        output.to_csv(path, _header(manifest, cfg, seed=seed))
        files.append(path)
        tail = output.n_series[int(0.8 * len(output.n_series)):]
        band_center = float(np.median(tail))
        info = convergence_summary(output, band_center)
        summary.append((seed, n0, info["n_final"], info["steps_to_band"]))
    _write_series_csv(out / "soi_summary.csv", _header(manifest, cfg),
                      ["seed", "n0", "n_final", "steps_to_band"], summary)
    files.append(out / "soi_summary.csv")
    return files


def _cmd_stats(manifest: RunManifest, cfg: ResolvedConfig, out: Path):
    input_path = manifest.extra.get("input")
    if not input_path:
        raise ValueError("stats requires --input CSV")
    output = SimulationOutput.from_csv(input_path)
    report = compute_report(output.returns,
                            max_lag=int(manifest.extra.get("max_lag", 50)))
    hdr = _header(manifest, cfg)
    rows = [("excess_kurtosis", repr(report.excess_kurtosis)),
            ("tail_exponent", repr(report.tail_exponent)),
            ("tail_stderr", repr(report.tail_stderr)),
            ("n_samples", report.n_samples)]
    for h, k in sorted(report.aggregation_kurtosis.items()):
        rows.append((f"aggregation_kurtosis_{h}", repr(k)))
    _write_series_csv(out / "stats_report.csv", hdr, ["key", "value"], rows)
    _write_series_csv(out / "acf_returns.csv", hdr, ["lag", "acf"],
                      ((l + 1, repr(float(v))) for l, v in enumerate(report.acf_returns)))
    _write_series_csv(out / "acf_squared.csv", hdr, ["lag", "acf"],
                      ((l + 1, repr(float(v))) for l, v in enumerate(report.acf_squared)))
    return [out / "stats_report.csv", out / "acf_returns.csv", out / "acf_squared.csv"]


_SWEEPABLE = {"n", "epsilon", "delta", "beta"}


def _cmd_sweep(manifest: RunManifest, cfg: ResolvedConfig, out: Path):
    param = manifest.extra.get("param")
    values = manifest.extra.get("values")
    if param not in _SWEEPABLE:
        raise ValueError(f"sweep --param must be one of {sorted(_SWEEPABLE)}")
    if not values:
        raise ValueError("sweep requires --values")
    files = []
    summary = []
    for i, raw_value in enumerate(str(values).split(",")):
        base = cfg.chain
        n = base.n_agents
        beta = base.beta
        delta = base.delta
        eps = base.epsilon
        if param == "n":
            n = int(raw_value)
            beta = None  # rescaled default per population size
        elif param == "epsilon":
            eps = float(raw_value)
        elif param == "delta":
            delta = float(raw_value)
        elif param == "beta":
            beta = float(raw_value)
        params = HerdingParams(n_agents=n, beta=beta, delta=delta, k1=eps / n, k2=eps / n)
        seed = cell_seed(manifest.seed, i)
        traj = simulate(params, manifest.steps, seed=seed)
        stats = measure_switching(traj / n)
        path = out / f"sweep_{param}_{raw_value}.csv"
        _write_series_csv(path, _header(manifest, cfg, seed=seed),
                          ["param", "value", "seed", "n_switches", "t0_empirical"],
                          [(param, raw_value, seed, stats.n_switches, stats.t0_empirical)])
        files.append(path)
        summary.append((param, raw_value, seed, stats.n_switches, stats.t0_empirical))
    _write_series_csv(out / "sweep_summary.csv", _header(manifest, cfg),
                      ["param", "value", "seed", "n_switches", "t0_empirical"], summary)
    files.append(out / "sweep_summary.csv")
    return files


_COMMANDS = {
    "herding": _cmd_herding,
    "stationary": _cmd_stationary,
    "simulate": _cmd_simulate,
    "soi": _cmd_soi,
    "stats": _cmd_stats,
    "sweep": _cmd_sweep,
}


def run_subcommand(manifest: RunManifest) -> list:
    """Execute one subcommand; returns the list of artifact paths."""
    if manifest.subcommand not in _COMMANDS:
        raise ValueError(f"unknown subcommand '{manifest.subcommand}'")
    cfg = _load_config(manifest)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _COMMANDS[manifest.subcommand](manifest, cfg, out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcmarket",
                                     description="Minimal fundamentalist/chartist market model")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--steps", type=int, default=1_000_000)
        p.add_argument("--out", default=".")
        if name == "stationary":
            p.add_argument("--grid", type=int, default=2000)
        if name == "soi":
            p.add_argument("--n0", default=None)
        if name == "stats":
            p.add_argument("--input", default=None)
            p.add_argument("--max-lag", type=int, default=50, dest="max_lag")
        if name == "sweep":
            p.add_argument("--param", default=None)
            p.add_argument("--values", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    extra = {k: v for k, v in vars(args).items()
             if k not in {"subcommand", "config", "seed", "steps", "out"} and v is not None}
    manifest = RunManifest(
        subcommand=args.subcommand,
        config_path=args.config,
        seed=args.seed,
        out_dir=args.out,
        steps=args.steps,
        extra=extra,
    )
    try:
        run_subcommand(manifest)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
