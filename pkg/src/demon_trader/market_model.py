"""Price containers and all-in wealth accounting.

A portfolio is always "all in": it holds either cash or a single security,
never both. Wealth is marked to market at every tick and returns are natural
log ratios of consecutive wealth values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np


class Cash(enum.Enum):
    CASH = "CASH"

    def __repr__(self) -> str:
        return "CASH"


CASH = Cash.CASH
Asset = Union[Cash, Hashable]


class PricingError(ValueError):
    """Raised when a holding cannot be valued or a trade price is invalid."""


def _frozen_prices(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("prices must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """One security's prices on an integer tick axis.

    ``labels`` are optional ISO-8601 dates, one per tick.
    """

    security_id: Hashable
    prices: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        prices = _frozen_prices(self.prices)
        object.__setattr__(self, "prices", prices)
        if prices.size < 1:
            raise ValueError("a price series needs at least one price")
        if not np.all(prices > 0) or not np.all(np.isfinite(prices)):
            raise ValueError(f"non-positive or non-finite price in series {self.security_id!r}")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != prices.size:
                raise ValueError("labels and prices differ in length")
            if any(b <= a for a, b in zip(labels, labels[1:])):
                raise ValueError("labels must be strictly increasing")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.prices.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.security_id == other.security_id
            and self.labels == other.labels
            and np.array_equal(self.prices, other.prices)
        )

    def slice(self, start: int, stop: int) -> "PriceSeries":
        labels = None if self.labels is None else self.labels[start:stop]
        return PriceSeries(self.security_id, self.prices[start:stop], labels)

    def scaled(self, factor: float) -> "PriceSeries":
        return PriceSeries(self.security_id, self.prices * factor, self.labels)


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Several price series sharing one tick axis."""

    securities: Tuple[PriceSeries, ...]

    def __post_init__(self):
        secs = tuple(self.securities)
        if not secs:
            raise ValueError("a panel needs at least one security")
        lengths = {len(s) for s in secs}
        if len(lengths) != 1:
            raise ValueError("all panel series must have the same length")
        ids = [s.security_id for s in secs]
        if len(set(ids)) != len(ids):
            raise ValueError("security ids in a panel must be unique")
        if any(s.security_id == CASH for s in secs):
            raise ValueError("CASH is reserved and cannot be a panel security")
        object.__setattr__(self, "securities", secs)

    def __len__(self) -> int:
        return len(self.securities[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PricePanel):
            return NotImplemented
        return self.securities == other.securities

    @property
    def ids(self) -> Tuple[Hashable, ...]:
        return tuple(s.security_id for s in self.securities)

    @property
    def labels(self) -> Optional[Tuple[str, ...]]:
        return self.securities[0].labels

    def matrix(self) -> np.ndarray:
        """Prices as an ``(n_securities, n_ticks)`` array."""
        return np.vstack([s.prices for s in self.securities])

    def series(self, security_id) -> PriceSeries:
        for s in self.securities:
            if s.security_id == security_id:
                return s
        raise KeyError(security_id)

    def prices_at(self, t: int) -> dict:
        return {s.security_id: float(s.prices[t]) for s in self.securities}

    def slice(self, start: int, stop: int) -> "PricePanel":
        return PricePanel(tuple(s.slice(start, stop) for s in self.securities))


@dataclass(frozen=True)
class PortfolioState:
    held_asset: Asset = CASH
    quantity: float = 0.0
    cash: float = 1.0

    def __post_init__(self):
        if self.quantity < 0 or self.cash < 0:
            raise ValueError("quantity and cash must be non-negative")
        if self.held_asset == CASH and self.quantity != 0:
            raise ValueError("a cash position cannot hold securities")
        if self.held_asset != CASH and self.cash != 0:
            raise ValueError("all-in rule: a security position holds no cash")


class Side(enum.Enum):
    BUY = "BUY"
    SELL = "SELL"
    SWITCH = "SWITCH"


@dataclass(frozen=True)
class TradeRecord:
    tick: int
    side: Side
    security_id: Hashable
    price: float
    quantity: float
    cost_paid: float


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    daily: np.ndarray
    cumulative: np.ndarray

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0


def wealth(state: PortfolioState, current_prices: Mapping) -> float:
    if state.held_asset == CASH:
        return state.cash
    try:
        price = current_prices[state.held_asset]
    except KeyError:
        raise PricingError(f"unpriced holding: {state.held_asset!r}") from None
    return state.cash + state.quantity * price


def returns_from_wealth(wealth_path: Sequence[float]) -> ReturnSeries:
    """Daily and cumulative log returns of a wealth path.

    ``cumulative`` is the running sum of ``daily``, so ``cumulative[-1]``
    is ``log(W[-1] / W[0])`` up to accumulation rounding.
    """
    w = np.asarray(wealth_path, dtype=np.float64)
    if w.ndim != 1 or w.size < 2:
        raise ValueError("need a wealth path of length >= 2")
    if not np.all(w > 0):
        raise ValueError("wealth must be strictly positive")
    daily = np.log(w[1:] / w[:-1])
    return ReturnSeries(daily=daily, cumulative=np.cumsum(daily))


def _check_trade_args(price: float, cost_rate: float):
    if not 0 <= cost_rate < 1:
        raise ValueError(f"cost_rate must lie in [0, 1), got {cost_rate}")
    if not price > 0:
        raise PricingError(f"trade price must be positive, got {price}")


def execute_all_in(
    state: PortfolioState,
    target: Asset,
    price: float,
    cost_rate: float = 0.0,
    *,
    held_price: Optional[float] = None,
    tick: int = 0,
) -> Tuple[PortfolioState, Optional[TradeRecord]]:
    """Move the whole portfolio into ``target``.

    ``price`` is the price of the security being bought, or of the security
    being sold when ``target`` is CASH. A security-to-security switch also
    needs ``held_price`` and pays ``cost_rate`` on both legs.
    """
    if target == state.held_asset:
        return state, None
    _check_trade_args(price, cost_rate)
    keep = 1.0 - cost_rate

    if target == CASH:
        value = state.quantity * price
        new = PortfolioState(CASH, 0.0, value * keep)
        return new, TradeRecord(tick, Side.SELL, state.held_asset, price, state.quantity, cost_rate * value)

    if state.held_asset == CASH:
        qty = state.cash * keep / price
        new = PortfolioState(target, qty, 0.0)
        return new, TradeRecord(tick, Side.BUY, target, price, qty, cost_rate * state.cash)

    if held_price is None:
        raise PricingError("a switch between securities needs the held security's price")
    _check_trade_args(held_price, cost_rate)
    sell_value = state.quantity * held_price
    proceeds = sell_value * keep
    qty = proceeds * keep / price
    cost = cost_rate * sell_value + cost_rate * proceeds
    return PortfolioState(target, qty, 0.0), TradeRecord(tick, Side.SWITCH, target, price, qty, cost)


def log_delta(a1: float, amp: float) -> float:
    """Log of the per-round-trip wealth multiplier ``(A + a) / (A - a)``."""
    return math.log((a1 + amp) / (a1 - amp))
