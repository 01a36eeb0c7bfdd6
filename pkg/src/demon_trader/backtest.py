"""Tick-by-tick backtests with proportional costs, plus the exact MD1 average.

Conventions used throughout:

* The portfolio starts in cash with ``initial_wealth``.
* A decision at tick ``t`` uses prices up to and including ``t`` and is
  executed at the price of tick ``t``.
* Windowed rules (MD2, MD3) hold cash on ticks ``0..m-2``.
* Wealth is marked to market every tick; there is no forced final sale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Union

import numpy as np

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
from .strategies import (
    BinomialModel,
    Md1Params,
    Md2Params,
    Md3Params,
    WarmupError,
    _with_cash,
    md1_decide,
    md2_decide,
    md3_choose,
    ratio_scores,
)

MAX_ENUMERATION_N = 20


@dataclass(frozen=True)
class BacktestConfig:
    cost_rate: float = 0.0
    initial_wealth: float = 1.0

    def __post_init__(self):
        if not 0 <= self.cost_rate < 1:
            raise ValueError("cost_rate must lie in [0, 1)")
        if not self.initial_wealth > 0:
            raise ValueError("initial_wealth must be positive")


@dataclass(frozen=True, eq=False)
class BacktestResult:
    wealth_path: np.ndarray
    quantity_path: np.ndarray
    holdings: tuple
    trades: List[TradeRecord]
    returns: ReturnSeries
    initial_wealth: float = 1.0

    @property
    def cumulative_return(self) -> float:
        """``log(W_final / W_0)`` with ``W_0`` the stake before any trade."""
        return math.log(self.wealth_path[-1] / self.initial_wealth)


def _returns(w: np.ndarray, w0: float) -> ReturnSeries:
    # anchored on the stake so that a cost paid on tick 0 shows up in day 0
    return returns_from_wealth(np.concatenate([[w0], w]))


def warmup(strategy) -> int:
    """Number of ticks before the rule may act."""
    return strategy.m - 1 if isinstance(strategy, (Md2Params, Md3Params)) else 0


def run_single(series: PriceSeries, strategy: Union[Md1Params, Md2Params], cfg: BacktestConfig = BacktestConfig()) -> BacktestResult:
    """Play MD1 or MD2 on one security."""
    if not isinstance(strategy, (Md1Params, Md2Params)):
        raise TypeError(f"run_single takes Md1Params or Md2Params, got {type(strategy).__name__}")
    start = warmup(strategy)
    if len(series) < start + 1:
        raise WarmupError(f"warm-up: series of length {len(series)} is shorter than m={strategy.m}")

    sid = series.security_id
    state = PortfolioState(CASH, 0.0, cfg.initial_wealth)
    n = len(series)
    w = np.empty(n)
    q = np.empty(n)
    holdings = []
    trades = []
    for t in range(n):
        price = float(series.prices[t])
        if t >= start:
            if isinstance(strategy, Md1Params):
                target = md1_decide(price, strategy, state.held_asset, sid)
            else:
                target = md2_decide(series, t, strategy, state.held_asset)
            state, trade = execute_all_in(state, target, price, cfg.cost_rate, tick=t)
            if trade is not None:
                trades.append(trade)
        w[t] = wealth(state, {sid: price})
        q[t] = state.quantity
        holdings.append(state.held_asset)
    return BacktestResult(w, q, tuple(holdings), trades, _returns(w, cfg.initial_wealth), cfg.initial_wealth)


def run_md3(panel: PricePanel, p: Md3Params, cfg: BacktestConfig = BacktestConfig()) -> BacktestResult:
    """Rotate the whole portfolio among the panel securities and cash."""
    n = len(panel)
    if n < p.m:
        raise WarmupError(f"warm-up: panel of length {n} is shorter than m={p.m}")
    cm = _with_cash(panel.matrix())
    assets = (CASH,) + panel.ids
    state = PortfolioState(CASH, 0.0, cfg.initial_wealth)
    j = 0
    w = np.empty(n)
    q = np.empty(n)
    holdings = []
    trades = []
    for t in range(n):
        if t >= p.m - 1:
            k = md3_choose(ratio_scores(cm, t, p.m, j), j)
            if k != j:
                state, trade = execute_all_in(
                    state, assets[k], float(cm[k if k else j, t]), cfg.cost_rate,
                    held_price=float(cm[j, t]), tick=t,
                )
                trades.append(trade)
                j = k
        w[t] = state.cash + state.quantity * cm[j, t] if j else state.cash
        q[t] = state.quantity
        holdings.append(state.held_asset)
    return BacktestResult(w, q, tuple(holdings), trades, _returns(w, cfg.initial_wealth), cfg.initial_wealth)


@dataclass(frozen=True, eq=False)
class IndexResult:
    components: dict
    wealth_path: np.ndarray
    initial_wealth: float

    @property
    def cumulative_return(self) -> float:
        return math.log(self.wealth_path[-1] / self.initial_wealth)


def run_index_detail(panel: PricePanel, p: Md2Params, cfg: BacktestConfig = BacktestConfig()) -> IndexResult:
    """MD2 on every security separately, each staked with ``initial_wealth``."""
    components = {s.security_id: run_single(s, p, cfg) for s in panel.securities}
    total = np.zeros(len(panel))
    for res in components.values():
        total = total + res.wealth_path
    return IndexResult(components, total, cfg.initial_wealth * len(components))


def run_index(panel: PricePanel, p: Md2Params, cfg: BacktestConfig = BacktestConfig()) -> float:
    """``log(sum_j W_j(T) / (N * W0))`` for independent per-security MD2 runs."""
    detail = run_index_detail(panel, p, cfg)
    final = math.fsum(res.wealth_path[-1] for res in detail.components.values())
    return math.log(final / (len(panel.securities) * cfg.initial_wealth))


def split_intervals(panel: PricePanel, parts: int, min_part_length: int = 1) -> List[PricePanel]:
    """Contiguous sub-panels of near-equal length, longer ones first."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    n = len(panel)
    if n < parts * min_part_length:
        raise ValueError(f"panel of length {n} is too short for {parts} parts of >= {min_part_length} ticks")
    base, extra = divmod(n, parts)
    out = []
    start = 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        out.append(panel.slice(start, start + size))
        start += size
    return out


# -- vectorised engine -------------------------------------------------------


def holdings_from_signal(signal: np.ndarray, start: int = 0) -> np.ndarray:
    """Boolean "holds the security" array from a decision signal.

    ``signal`` has shape ``(n_paths, n_ticks)``; positive means buy, negative
    means go to cash, zero keeps the previous holding. Ticks before ``start``
    hold cash.
    """
    n_paths, n_ticks = signal.shape
    held = np.zeros((n_paths, n_ticks), dtype=bool)
    cur = np.zeros(n_paths, dtype=bool)
    for t in range(start, n_ticks):
        s = signal[:, t]
        cur = np.where(s > 0, True, np.where(s < 0, False, cur))
        held[:, t] = cur
    return held


def log_wealth_from_holdings(prices: np.ndarray, held: np.ndarray, cost_rate: float = 0.0) -> np.ndarray:
    """Final ``log(W_T / W_0)`` per path for an all-in holding pattern."""
    growth = np.log(prices[:, 1:] / prices[:, :-1])
    carried = np.where(held[:, :-1], growth, 0.0).sum(axis=1)
    if cost_rate == 0.0:
        return carried
    prev = np.concatenate([np.zeros((held.shape[0], 1), dtype=bool), held[:, :-1]], axis=1)
    n_trades = np.count_nonzero(held != prev, axis=1)
    return carried + n_trades * math.log1p(-cost_rate)


def md2_signal(prices: np.ndarray, m: int) -> np.ndarray:
    """Window excess for every path and tick; ticks before ``m-1`` are 0.

    Same sequential summation order as :func:`strategies.window_excess`.
    """
    n_ticks = prices.shape[1]
    signal = np.zeros_like(prices)
    if n_ticks < m:
        return signal
    cur = prices[:, m - 1 :]
    acc = np.zeros_like(cur)
    for j in range(m):
        acc = acc + (prices[:, m - 1 - j : n_ticks - j] - cur)
    signal[:, m - 1 :] = acc
    return signal


def md2_log_returns(prices: np.ndarray, m: int, cost_rate: float = 0.0) -> np.ndarray:
    held = holdings_from_signal(md2_signal(prices, m), start=m - 1)
    return log_wealth_from_holdings(prices, held, cost_rate)


def md1_log_returns(prices: np.ndarray, a_global: float, cost_rate: float = 0.0) -> np.ndarray:
    held = holdings_from_signal(a_global - prices)
    return log_wealth_from_holdings(prices, held, cost_rate)


def binomial_paths_all(model: BinomialModel, n: int) -> np.ndarray:
    """Every one of the ``2**n`` equiprobable binomial price paths."""
    codes = np.arange(2 ** n, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(n, dtype=np.int64)) & 1
    return model.a1 + model.amp * (2.0 * bits - 1.0)


def enumerate_md1_expectation(model: BinomialModel, n: int, cfg: BacktestConfig = BacktestConfig()) -> float:
    """Exact mean of ``R(t_n)`` for MD1 with ``A = a1`` over all ``2**n`` paths."""
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"n must lie in 1..{MAX_ENUMERATION_N}, got {n}")
    paths = binomial_paths_all(model, n)
    r = md1_log_returns(paths, model.a1, cfg.cost_rate)
    return math.fsum(r) / paths.shape[0]
