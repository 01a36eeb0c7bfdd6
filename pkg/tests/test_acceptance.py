"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N PASS|FAIL`` line (repeated in the pytest
terminal summary) before asserting.
"""

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from demon_trader.backtest import (
    BacktestConfig,
    enumerate_md1_expectation,
    holdings_from_signal,
    md2_signal,
    run_md3,
    run_single,
)
from demon_trader.cli import main
from demon_trader.experiments import (
    interior_maximum,
    mean_and_stderr,
    monotone_to_plateau,
    ensemble_mean_return,
    sweep_m,
    sweep_to_plateau,
)
from demon_trader.market_model import CASH, PortfolioState, PricePanel, PriceSeries, Side, execute_all_in
from demon_trader.sde_sim import EnsembleConfig, GouParams, SimConfig, simulate_batch
from demon_trader.strategies import BinomialModel, Md1Params, Md2Params, Md3Params

from fixtures.make_fixtures import GOLDEN, GOLDEN_RUNS, QUOTES, golden_argv

SEED = 20261016
SIM = SimConfig(n_units=1000, substeps=16, seed=SEED)
PATHS = 2000
A0, BETA = 2.0, 0.01


def gou(alpha, mu=0.0, beta=BETA):
    return GouParams(alpha=alpha, a0=A0, beta=beta, mu=mu)


# -- 1 ------------------------------------------------------------------------


def mc_md1(model, n, n_paths, seed):
    """Independent vectorised MD1 run on sampled binomial paths."""
    rng = np.random.default_rng(seed)
    x = model.a1 + model.amp * np.where(rng.random((n_paths, n)) < 0.5, -1.0, 1.0)
    held = np.zeros(n_paths, dtype=bool)
    log_w = np.zeros(n_paths)
    for t in range(n):
        if t:
            log_w += np.where(held, np.log(x[:, t] / x[:, t - 1]), 0.0)
        held = np.where(x[:, t] < model.a1, True, np.where(x[:, t] > model.a1, False, held))
    return log_w


def test_criterion_1_md1_enumeration(criterion):
    model = BinomialModel(2.0, 1.0)
    log_delta = math.log(3.0)
    t0 = time.perf_counter()
    exact = {n: enumerate_md1_expectation(model, n) for n in (4, 8, 12)}
    runtime = time.perf_counter() - t0
    more = {n: enumerate_md1_expectation(model, n) for n in (10, 16, 20)}
    values = {**exact, **more}

    r = mc_md1(model, 8, 100_000, SEED)
    mc_mean, mc_se = mean_and_stderr(r)
    doubling = {n: values[2 * n] / values[n] for n in (8, 10)}
    slope = (values[12] - values[8]) / 4 / log_delta
    print("  exact <R(n)>: " + ", ".join(f"n={n}: {v:.6f}" for n, v in sorted(values.items())))
    print(f"  n=8 exact {exact[8]:.6f} vs n/8 log(delta) {log_delta:.6f}: ratio {exact[8] / log_delta:.4f}")
    print(f"  slope per tick / log(delta) = {slope:.6f} (n/8 rule predicts 0.125)")
    print("  E(2n)/E(n): " + ", ".join(f"n={n}: {v:.4f}" for n, v in doubling.items()))
    print(f"  Monte Carlo n=8, 1e5 paths: {mc_mean:.5f} +- {mc_se:.5f}; runtime {runtime:.3f}s")
    ok = criterion(1, "MD1 enumeration oracle", {
        "E(2n) within 5% of 2 E(n) for n>=8": all(abs(v / 2 - 1) <= 0.05 for v in doubling.values()),
        "Monte Carlo within 3 SE": abs(mc_mean - exact[8]) <= 3 * mc_se,
        "runtime < 1 s": runtime < 1.0,
    })
    assert ok


# -- 2 ------------------------------------------------------------------------


def test_criterion_2_no_fluctuation_null(criterion):
    s = sweep_m(range(1, 31), gou(1.2, beta=0.0), SIM, EnsembleConfig(4, SEED))
    ok = criterion(2, "no-fluctuation null", {
        "R == 0 exactly for m=1..30": all(r.mean_r == 0.0 and r.stderr == 0.0 for r in s.rows),
    })
    assert ok


# -- 3 ------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_3_random_walk_null(criterion):
    m_values = [1, 2, 5, 10, 20, 40]
    s = sweep_m(m_values, gou(0.0), SIM, EnsembleConfig(PATHS, SEED))
    for i, r in enumerate(s.rows):
        # diagnostic: time in the security times the Ito drift of log X, on the same paths
        prices = simulate_batch(gou(0.0), SIM, range(PATHS), (i,)).prices
        units_held = holdings_from_signal(md2_signal(prices, r.m), start=r.m - 1)[:, :-1].sum(axis=1)
        drift = -0.5 * BETA ** 2 * float(np.mean(units_held))
        print(f"  m={r.m}: {r.mean_r:+.5f} +- {r.stderr:.5f}   -beta^2/2 * <units held> = {drift:+.5f}")
    ok = criterion(3, "random-walk null", {
        f"|<R(m={r.m})>| <= 3 SE": abs(r.mean_r) <= 3 * r.stderr for r in s.rows
    })
    assert ok


# -- 4 ------------------------------------------------------------------------


def show(s):
    for r in s.rows:
        print(f"  m={r.m}: {r.mean_r:.5f} +- {r.stderr:.5f}")
    print(f"  m_c = {s.m_c}")


@pytest.mark.slow
def test_criterion_4_mean_reversion_plateau(criterion):
    ens = EnsembleConfig(PATHS, SEED)
    m20, se20 = ensemble_mean_return(gou(1.2), Md2Params(20), SIM, ens, stream_prefix=(1000,))
    print(f"  alpha=1.2, <R(m=20)> = {m20:.5f} +- {se20:.5f}")
    sweeps = {}
    for alpha in (1.2, 2.4, 0.3):
        sweeps[alpha] = sweep_to_plateau(gou(alpha), SIM, ens)
        print(f"  alpha={alpha}")
        show(sweeps[alpha])
    m_c = {a: s.m_c for a, s in sweeps.items()}
    ok = criterion(4, "mean-reversion gain and plateau", {
        "<R(20)> > 3 SE": m20 > 3 * se20,
        "nondecreasing to plateau": monotone_to_plateau(sweeps[1.2]),
        "m_c defined": all(v is not None for v in m_c.values()),
        "m_c(2.4) <= m_c(0.3)": None not in (m_c[2.4], m_c[0.3]) and m_c[2.4] <= m_c[0.3],
    })
    assert ok


# -- 5 ------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_5_drifting_attractor(criterion):
    ens = EnsembleConfig(PATHS, SEED)
    grid = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 60]
    drift = sweep_m(grid, gou(1.2, mu=0.004), SIM, ens)
    print("  alpha=1.2, mu=+0.004")
    show(drift)
    m_c0 = sweep_to_plateau(gou(1.2), SIM, ens).m_c
    m_max = interior_maximum(drift)
    print(f"  interior maximum at m={m_max}; mu=0 m_c = {m_c0}")
    last = drift.rows[-1]
    top = max(drift.rows, key=lambda r: r.mean_r)
    ok = criterion(5, "drifting attractor", {
        "interior maximum": m_max is not None,
        "decline at large m": last.mean_r < top.mean_r - 3 * math.hypot(last.stderr, top.stderr),
        "max within factor 2 of mu=0 m_c": m_max is not None and m_c0 is not None and m_c0 / 2 <= m_max <= 2 * m_c0,
    })
    assert ok


# -- 6 ------------------------------------------------------------------------

CASES = 1000


def trade_signature(res):
    return [(t.tick, t.side, t.security_id) for t in res.trades]


def walk(rng, n, vol=0.03):
    return rng.uniform(0.5, 50) * np.exp(np.cumsum(rng.normal(0, vol, n)))


def test_criterion_6_property_suites(criterion):
    rng = np.random.default_rng(SEED)

    md2_scale = True
    for _ in range(CASES):
        xs = walk(rng, int(rng.integers(8, 60)))
        m = int(rng.integers(1, 8))
        lam = float(np.exp(rng.uniform(-6, 6)))
        a = run_single(PriceSeries("S", xs), Md2Params(m))
        b = run_single(PriceSeries("S", xs * lam), Md2Params(m))
        md2_scale &= trade_signature(a) == trade_signature(b)

    md3_scale = True
    for _ in range(CASES):
        n, m = int(rng.integers(10, 40)), int(rng.integers(2, 8))
        cols = [walk(rng, n) for _ in range(3)]
        victim = int(rng.integers(3))
        scaled = [c * (float(np.exp(rng.uniform(-5, 5))) if i == victim else 1.0) for i, c in enumerate(cols)]
        a = run_md3(PricePanel(tuple(PriceSeries(k, c) for k, c in zip("ABC", cols))), Md3Params(m))
        b = run_md3(PricePanel(tuple(PriceSeries(k, c) for k, c in zip("ABC", scaled))), Md3Params(m))
        md3_scale &= trade_signature(a) == trade_signature(b)

    cost_mono = True
    for _ in range(CASES):
        xs = walk(rng, int(rng.integers(8, 60)))
        m = int(rng.integers(1, 8))
        c1, c2 = sorted(rng.uniform(0, 0.01, 2))
        lo = run_single(PriceSeries("S", xs), Md2Params(m), BacktestConfig(c1)).cumulative_return
        hi = run_single(PriceSeries("S", xs), Md2Params(m), BacktestConfig(c2)).cumulative_return
        cost_mono &= hi <= lo

    all_in = True
    for _ in range(CASES):
        state = PortfolioState(CASH, 0.0, 1.0)
        prices = {k: float(rng.uniform(0.1, 10)) for k in "AB"}
        c = float(rng.uniform(0, 0.01))
        for _ in range(int(rng.integers(1, 20))):
            target = [CASH, "A", "B"][int(rng.integers(3))]
            prices = {k: v * float(np.exp(rng.normal(0, 0.1))) for k, v in prices.items()}
            held = state.held_asset
            px = prices[target] if target != CASH else prices.get(held, 1.0)
            state, _ = execute_all_in(state, target, px, c, held_price=prices.get(held))
            all_in &= state.cash * state.quantity == 0

    md1_increase = True
    n_paths = 0
    for n in range(1, 13):
        for phi in itertools.product((-1.0, 1.0), repeat=n):
            res = run_single(PriceSeries("X1", 2.0 + np.array(phi)), Md1Params(2.0))
            buys = [t.quantity for t in res.trades if t.side is Side.BUY]
            md1_increase &= all(b > a for a, b in zip(buys, buys[1:]))
            n_paths += 1
    print(f"  {CASES} random cases per suite; MD1 check over all {n_paths} binomial paths with n <= 12")

    ok = criterion(6, "property suites", {
        "MD2 global scale": md2_scale,
        "MD3 per-security scale": md3_scale,
        "cost monotonicity": cost_mono,
        "all-in invariant": all_in,
        "MD1 buy quantity increases": md1_increase,
    })
    assert ok


# -- 7 ------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_7_sde_moment(criterion):
    p = gou(0.0)
    chunks = [range(lo, min(lo + 1000, 30_000)) for lo in range(0, 30_000, 1000)]
    final = np.concatenate([simulate_batch(p, SIM, list(c), (7,)).prices[:, -1] for c in chunks])
    mean, se = mean_and_stderr(final)
    print(f"  mean X(T) = {mean:.6f} +- {se:.6f} (x0 = {p.x0})")
    ok = criterion(7, "SDE moment check", {"within 3 SE of x0": abs(mean - p.x0) <= 3 * se})
    assert ok


# -- 8 ------------------------------------------------------------------------


def test_criterion_8_golden_fixtures(criterion, tmp_path):
    stable = {}
    for name, argv in GOLDEN_RUNS:
        outs = []
        for attempt in range(2):
            out = tmp_path / f"{name}-{attempt}"
            assert main(golden_argv(argv, out)) == 0
            outs.append({p.name: p.read_bytes() for p in out.iterdir() if p.name != "manifest.json"})
        golden = {p.name: p.read_bytes() for p in (GOLDEN / name).iterdir()}
        stable[name] = outs[0] == outs[1] == golden
    ok = criterion(8, "golden-file runs on synthetic fixtures", {
        f"{name} byte-identical": v for name, v in stable.items()
    })
    assert ok


# -- 9 ------------------------------------------------------------------------


def test_criterion_9_replay_determinism(criterion, tmp_path, capsys):
    runs = {
        "simulate": (["simulate", "--alpha", "1.2", "--a0", "2", "--beta", "0.01", "--units", "300",
                      "--seed", "5"], tmp_path / "path.csv"),
        "sweep": (["sweep", "--alpha", "1.2", "--a0", "2", "--beta", "0.01", "--units", "200", "--substeps", "4",
                   "--paths", "1200", "--m", "1,3,8", "--seed", "5"], tmp_path / "sweep.csv"),
        "backtest": (["backtest", "--panel", str(QUOTES / "panel.txt"), "--strategy", "index", "--m", "3,9",
                      "--split", "halves", "--cost", "0.001"], tmp_path / "bt"),
        "enumerate": (["enumerate", "--A", "2", "--a", "1", "--n", "12"], tmp_path / "enum.csv"),
    }
    checks = {}
    for name, (argv, out) in runs.items():
        assert main(argv + ["--out", str(out)]) == 0
        manifest = out / "manifest.json" if out.is_dir() else Path(str(out) + ".manifest.json")
        recorded = json.loads(manifest.read_text())["outputs"]
        for workers in ("1", "2", "4"):
            code = main(["replay", str(manifest), "--workers", workers])
            checks[f"{name} workers={workers}"] = code == 0
        checks[f"{name} digests unchanged"] = json.loads(manifest.read_text())["outputs"] == recorded
    capsys.readouterr()
    ok = criterion(9, "replay determinism", checks)
    assert ok
