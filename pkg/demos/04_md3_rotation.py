# %% [markdown]
# # Rotating between securities and cash
#
# MD3 holds one asset at a time (cash counts as an asset priced at 1). For
# every alternative it z-scores the current price ratio against its
# `m`-day history and jumps to the alternative that looks cheapest, if any
# looks cheap at all.

# %%
import numpy as np

from demon_trader import BacktestConfig, GouParams, Md3Params, PricePanel, PriceSeries, SimConfig, run_md3
from demon_trader.market_model import CASH
from demon_trader.sde_sim import simulate_batch

# three independent mean-reverting names around different levels
p = GouParams(alpha=1.2, a0=1.0, beta=0.02)
batch = simulate_batch(p, SimConfig(n_units=750, substeps=8, seed=3), [0, 1, 2])
levels = (12.0, 40.0, 95.0)
panel = PricePanel(tuple(
    PriceSeries(sid, batch.prices[i] * lvl)
    for i, (sid, lvl) in enumerate(zip(("AAA", "BBB", "CCC"), levels))
))

# %%
for m in (3, 10, 25, 60):
    res = run_md3(panel, Md3Params(m), BacktestConfig(cost_rate=0.001))
    time_in = {a: sum(h == a for h in res.holdings) / len(res.holdings) for a in (CASH,) + panel.ids}
    share = "  ".join(f"{'cash' if a is CASH else a}={v:.0%}" for a, v in time_in.items())
    print(f"m={m:3d}  R={res.cumulative_return:+.3f}  trades={len(res.trades):4d}  {share}")

# %% [markdown]
# Multiplying any one security by a constant leaves every decision
# unchanged, because only price ratios relative to their own history enter.

# %%
scaled = PricePanel((panel.series("AAA").scaled(1000.0), panel.series("BBB"), panel.series("CCC")))
a = run_md3(panel, Md3Params(10))
b = run_md3(scaled, Md3Params(10))
print("same trades after rescaling AAA:", [(t.tick, t.security_id) for t in a.trades] == [(t.tick, t.security_id) for t in b.trades])
print("final holdings:", a.holdings[-1], "| final wealth:", np.round(a.wealth_path[-1], 2))
