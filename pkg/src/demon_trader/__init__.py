"""Fluctuation-trapping trading rules, a mean-reverting price simulator and
the backtests that go with them."""

__version__ = "0.1.0"

from .market_model import (
    CASH,
    PortfolioState,
    PricePanel,
    PriceSeries,
    ReturnSeries,
    TradeRecord,
    execute_all_in,
    returns_from_wealth,
    wealth,
)
from .sde_sim import EnsembleConfig, GouParams, SimConfig, simulate_path
from .strategies import BinomialModel, Md1Params, Md2Params, Md3Params
from .backtest import (
    BacktestConfig,
    BacktestResult,
    enumerate_md1_expectation,
    run_index,
    run_md3,
    run_single,
    split_intervals,
)
from .experiments import SweepResult, ensemble_mean_return, estimate_m_c, sweep_m, sweep_to_plateau

__all__ = [
    "CASH", "PortfolioState", "PricePanel", "PriceSeries", "ReturnSeries", "TradeRecord",
    "execute_all_in", "returns_from_wealth", "wealth",
    "EnsembleConfig", "GouParams", "SimConfig", "simulate_path",
    "BinomialModel", "Md1Params", "Md2Params", "Md3Params",
    "BacktestConfig", "BacktestResult", "enumerate_md1_expectation", "run_index", "run_md3",
    "run_single", "split_intervals",
    "SweepResult", "ensemble_mean_return", "estimate_m_c", "sweep_m", "sweep_to_plateau",
]
