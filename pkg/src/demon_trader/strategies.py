"""Decision rules for the fluctuation-trapping demons.

* MD1 compares the price with a known fundamental level.
* MD2 compares the price with its own trailing moving average.
* MD3 rotates among several securities and cash using a ratio z-score.

All rules are wealth independent: they see prices and the identity of the
current holding, nothing else. An exact tie always keeps the current
position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence, Tuple

import numpy as np

from .market_model import CASH, Asset, PricePanel, PriceSeries

SIGMA_EPS = 1e-12
# scores are O(1) and carry ~1e-15 relative rounding; closer than this is a tie
SCORE_TIE_TOL = 1e-9


class WarmupError(ValueError):
    """Not enough price history for the requested window."""


@dataclass(frozen=True)
class Md1Params:
    a_global: float

    def __post_init__(self):
        if not self.a_global > 0:
            raise ValueError("a_global must be positive")


@dataclass(frozen=True)
class Md2Params:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")


@dataclass(frozen=True)
class Md3Params:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")


@dataclass(frozen=True)
class BinomialModel:
    a1: float
    amp: float

    def __post_init__(self):
        if not self.a1 > 0 or self.amp < 0 or not self.amp < self.a1:
            raise ValueError("need 0 <= amp < a1")


def _threshold_decide(signal: float, security: Hashable, current: Asset) -> Asset:
    # signal > 0: price below its reference, go long; < 0: go to cash.
    if signal > 0:
        return security
    if signal < 0:
        return CASH
    return current


def md1_decide(price: float, p: Md1Params, current: Asset, security: Hashable = "X1") -> Asset:
    return _threshold_decide(p.a_global - price, security, current)


def _check_window(t: int, m: int, n: int):
    if t < m - 1:
        raise WarmupError(f"warm-up: tick {t} has fewer than m={m} prices of history")
    if t >= n:
        raise IndexError(f"tick {t} outside series of length {n}")


def window_excess(prices: Sequence[float], t: int, m: int) -> float:
    """Sum of ``X(t-j) - X(t)`` over the window ``j = 0..m-1``.

    Positive means the moving average sits above the current price. Summed
    sequentially from ``j = 0`` so that a flat window gives exactly zero.
    """
    _check_window(t, m, len(prices))
    x_t = float(prices[t])
    total = 0.0
    for j in range(m):
        total += float(prices[t - j]) - x_t
    return total


def moving_average(series: PriceSeries, t: int, m: int) -> float:
    """Mean of the ``m`` most recent prices, the current one included."""
    return float(series.prices[t]) + window_excess(series.prices, t, m) / m


def md2_decide(series: PriceSeries, t: int, p: Md2Params, current: Asset) -> Asset:
    return _threshold_decide(window_excess(series.prices, t, p.m), series.security_id, current)


def _with_cash(matrix: np.ndarray) -> np.ndarray:
    return np.vstack([np.ones((1, matrix.shape[1])), matrix])


def _asset_index(panel: PricePanel, asset: Asset) -> int:
    if asset == CASH:
        return 0
    return 1 + panel.ids.index(asset)


def ratio_stats(cash_matrix: np.ndarray, t: int, m: int, j: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Window statistics of ``X_j / X_k`` for every asset row ``k``.

    ``cash_matrix`` has cash as row 0. Returns the current ratio, its window
    mean and its window standard deviation, one entry per ``k``.
    """
    _check_window(t, m, cash_matrix.shape[1])
    window = cash_matrix[:, t - m + 1 : t + 1]
    ratios = window[j] / window
    r = ratios.mean(axis=1)
    sigma = np.sqrt(((ratios - r[:, None]) ** 2).mean(axis=1))
    return ratios[:, -1], r, sigma


def ratio_scores(cash_matrix: np.ndarray, t: int, m: int, j: int) -> np.ndarray:
    current, r, sigma = ratio_stats(cash_matrix, t, m, j)
    degenerate = sigma < SIGMA_EPS * r
    safe_sigma = np.where(degenerate, 1.0, sigma)
    scores = np.where(degenerate, 0.0, (current - r) / safe_sigma)
    scores[j] = 0.0
    return scores


def md3_stats(panel: PricePanel, t: int, m: int, j: Asset, k: Asset) -> Tuple[float, float]:
    ji, ki = _asset_index(panel, j), _asset_index(panel, k)
    _, r, sigma = ratio_stats(_with_cash(panel.matrix()), t, m, ji)
    if ji == ki:
        return 1.0, 0.0
    return float(r[ki]), float(sigma[ki])


def md3_score(panel: PricePanel, t: int, m: int, j: Asset, k: Asset) -> float:
    ji, ki = _asset_index(panel, j), _asset_index(panel, k)
    return float(ratio_scores(_with_cash(panel.matrix()), t, m, ji)[ki])


def md3_choose(scores: np.ndarray, j: int) -> int:
    """Index with the strictly positive best score, else stay at ``j``.

    Scores within ``SCORE_TIE_TOL`` of the best count as tied and the lowest
    index wins (cash first, then panel order). With ``m = 2`` every
    non-degenerate score is exactly +-1, so ties are the common case there.
    """
    best = float(scores.max())
    if best <= SCORE_TIE_TOL:
        return j
    return int(np.flatnonzero(scores >= best - SCORE_TIE_TOL * max(1.0, best))[0])


def md3_decide(panel: PricePanel, t: int, p: Md3Params, current: Asset) -> Asset:
    j = _asset_index(panel, current)
    k = md3_choose(ratio_scores(_with_cash(panel.matrix()), t, p.m, j), j)
    return CASH if k == 0 else panel.ids[k - 1]


def binomial_path(model: BinomialModel, n: int, seed: int, security_id: Hashable = "X1") -> PriceSeries:
    """``n`` independent prices, each ``a1 + amp`` or ``a1 - amp`` with equal odds."""
    rng = np.random.default_rng(seed)
    phi = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return PriceSeries(security_id, model.a1 + model.amp * phi)
