# %% [markdown]
# # Trapping fluctuations with a known fundamental
#
# Prices jump between `A - a` and `A + a` with equal odds. The MD1 rule
# buys whenever the price is below `A` and sells whenever it is above.
# Every low-then-high pair of days multiplies wealth by
# `delta = (A + a) / (A - a)`.

# %%
import math

import numpy as np

from demon_trader import BacktestConfig, BinomialModel, Md1Params, PriceSeries, enumerate_md1_expectation, run_single
from demon_trader.market_model import Side

model = BinomialModel(a1=2.0, amp=1.0)
delta = (model.a1 + model.amp) / (model.a1 - model.amp)

# %% [markdown]
# ## One hand-picked trajectory
# The same configuration recurs at ticks 2, 5 and 7, and each time the
# wealth has grown by one more factor of `delta`.

# %%
xs = np.array([1, 1, 3, 1, 1, 3, 1, 3], dtype=float)
res = run_single(PriceSeries("X1", xs), Md1Params(model.a1))
for t, (x, w, q) in enumerate(zip(xs, res.wealth_path, res.quantity_path)):
    print(f"t={t}  price={x:.0f}  shares={q:5.2f}  wealth={w:5.1f}")
print("shares bought:", [t.quantity for t in res.trades if t.side is Side.BUY])

# %% [markdown]
# ## Exact average over every trajectory
# With `n` ticks there are `n - 1` consecutive pairs and each is a
# low-then-high pair with probability 1/4, so the exact mean is
# `(n - 1) / 4 * log(delta)`. The enumeration confirms it.

# %%
for n in (2, 4, 8, 12, 16):
    exact = enumerate_md1_expectation(model, n)
    print(f"n={n:2d}  <R>={exact:.6f}  (n-1)/4 log(delta)={(n - 1) / 4 * math.log(delta):.6f}")

# %% [markdown]
# ## Costs
# A round trip costs two legs. With `c = 0.3%` the pair gain becomes
# `log(delta) + 2 log(1 - c)`, still comfortably positive here.

# %%
for cost in (0.0, 0.003, 0.03):
    print(f"cost={cost:<6} <R(12)>={enumerate_md1_expectation(model, 12, BacktestConfig(cost)):.5f}")
