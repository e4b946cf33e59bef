"""Minimal fundamentalist/chartist market model with analytic oracles."""

__version__ = "0.1.0"

from .herding import (
    DensityCurve,
    HerdingParams,
    HerdingState,
    PassageStats,
    analytic_switching_time,
    asymmetric_rates,
    diffusion,
    drift,
    mean_first_passage_time,
    measure_switching,
    simulate,
    stationary_approx,
    stationary_numeric,
    stationary_symmetric,
    step,
    symmetric_rates,
)
from .market import (
    Agent,
    Heterogeneity,
    MarketConfig,
    MarketState,
    SimulationOutput,
    market_step,
    run,
    transition_probabilities,
)
from .pricing import (
    PriceHistory,
    PricingParams,
    chartist_force,
    chartist_step,
    effective_potential,
    excess_demand,
    fundamentalist_step,
    moving_average,
    price_step,
)
from .soi import SoiConfig, entry_exit_step, realized_volatility, run_soi
from .stats import (
    StatsReport,
    acf,
    aggregation_kurtosis,
    compute_report,
    excess_kurtosis,
    tail_exponent,
    volatility_acf,
)
