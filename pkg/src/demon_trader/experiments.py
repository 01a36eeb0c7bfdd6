"""Monte Carlo ensembles and window-length sweeps of MD2 on simulated paths.

Paths are processed in fixed-size chunks whose contents depend only on the
path indices, and per-path returns are reduced in path order with
``math.fsum``. Results are therefore identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .backtest import BacktestConfig, md2_log_returns
from .sde_sim import EnsembleConfig, GouParams, SimConfig, simulate_batch
from .strategies import Md2Params

CHUNK_PATHS = 512
MIN_SWEEP_ROWS = 8
PLATEAU_SE = 2.0
ASYMPTOTE_SIGNIFICANCE = 3.0


class MCUndefinedError(ValueError):
    """The sweep shows no plateau, so the characteristic window is undefined."""


@dataclass(frozen=True)
class SweepRow:
    m: int
    mean_r: float
    stderr: float
    n_paths: int
    floored_paths: int = 0


@dataclass(frozen=True)
class SweepResult:
    rows: Tuple[SweepRow, ...]
    m_c: Optional[int] = None

    @property
    def m_values(self) -> np.ndarray:
        return np.array([r.m for r in self.rows])

    @property
    def means(self) -> np.ndarray:
        return np.array([r.mean_r for r in self.rows])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([r.stderr for r in self.rows])

    @property
    def floored_paths(self) -> int:
        return sum(r.floored_paths for r in self.rows)


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    vals = [float(v) for v in values]
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean, math.sqrt(var / n)


def _chunk_returns(args) -> Tuple[np.ndarray, int]:
    p, sim, indices, prefix, m_values, cost_rate = args
    batch = simulate_batch(p, sim, indices, prefix)
    out = np.stack([md2_log_returns(batch.prices, m, cost_rate) for m in m_values])
    return out, batch.floored_paths


def path_returns(
    p: GouParams,
    m_values: Sequence[int],
    sim: SimConfig,
    n_paths: int,
    stream_prefix: Sequence[int] = (),
    cost_rate: float = 0.0,
    workers: int = 1,
) -> Tuple[np.ndarray, int]:
    """Final log return of MD2 per ``(m, path)`` on shared simulated paths.

    Path ``i`` uses stream ``(sim.seed, *stream_prefix, i)``. Returns the
    ``(len(m_values), n_paths)`` array and the number of floored paths.
    """
    jobs = [
        (p, sim, list(range(lo, min(lo + CHUNK_PATHS, n_paths))), tuple(stream_prefix), tuple(m_values), cost_rate)
        for lo in range(0, n_paths, CHUNK_PATHS)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_returns, jobs))
    else:
        parts = [_chunk_returns(job) for job in jobs]
    returns = np.concatenate([r for r, _ in parts], axis=1)
    return returns, sum(f for _, f in parts)


def ensemble_mean_return(
    p: GouParams,
    strat: Md2Params,
    sim: SimConfig,
    ens: EnsembleConfig,
    cfg: BacktestConfig = BacktestConfig(),
    workers: int = 1,
    stream_prefix: Sequence[int] = (),
) -> Tuple[float, float]:
    """Mean and standard error of MD2's final log return across paths."""
    sim = SimConfig(sim.n_units, sim.substeps, ens.base_seed)
    r, _ = path_returns(p, [strat.m], sim, ens.n_paths, stream_prefix, cfg.cost_rate, workers)
    return mean_and_stderr(r[0])


def sweep_m(
    m_values: Sequence[int],
    p: GouParams,
    sim: SimConfig,
    ens: EnsembleConfig,
    cfg: BacktestConfig = BacktestConfig(),
    workers: int = 1,
) -> SweepResult:
    """One independent ensemble per window length; row ``i`` uses streams ``(seed, i, path)``."""
    m_values = [int(m) for m in m_values]
    if not m_values:
        raise ValueError("m_values is empty")
    if any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ValueError("m_values must be strictly ascending")
    sim = SimConfig(sim.n_units, sim.substeps, ens.base_seed)
    rows = []
    for i, m in enumerate(m_values):
        r, floored = path_returns(p, [m], sim, ens.n_paths, (i,), cfg.cost_rate, workers)
        mean, se = mean_and_stderr(r[0])
        rows.append(SweepRow(m, mean, se, ens.n_paths, floored))
    result = SweepResult(tuple(rows))
    try:
        return SweepResult(result.rows, estimate_m_c(result))
    except MCUndefinedError:
        return result


DEFAULT_GRID = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256)


def _top_quartile(sweep: SweepResult) -> List[SweepRow]:
    """Rows whose ``m`` lies in the upper quarter of the swept range (at least two)."""
    lo, hi = sweep.rows[0].m, sweep.rows[-1].m
    cut = lo + 0.75 * (hi - lo)
    top = [r for r in sweep.rows if r.m >= cut]
    return top if len(top) >= 2 else list(sweep.rows[-2:])


def plateau_detected(sweep: SweepResult) -> bool:
    """Top-quartile means agree pairwise within 2 combined standard errors
    and their average is significantly positive."""
    top = _top_quartile(sweep)
    for i, a in enumerate(top):
        for b in top[i + 1 :]:
            if abs(a.mean_r - b.mean_r) > PLATEAU_SE * math.hypot(a.stderr, b.stderr):
                return False
    asym = math.fsum(r.mean_r for r in top) / len(top)
    asym_se = math.sqrt(math.fsum(r.stderr ** 2 for r in top)) / len(top)
    return asym > 0 and asym > ASYMPTOTE_SIGNIFICANCE * asym_se


def estimate_m_c(sweep: SweepResult) -> int:
    """Smallest ``m`` reaching 90% of the large-``m`` asymptote.

    The asymptote is the mean over the top quartile of ``m`` values.
    """
    if len(sweep.rows) < MIN_SWEEP_ROWS:
        raise MCUndefinedError(f"m_c undefined: need >= {MIN_SWEEP_ROWS} sweep rows")
    if not plateau_detected(sweep):
        raise MCUndefinedError("m_c undefined: no plateau above noise")
    top = _top_quartile(sweep)
    asym = math.fsum(r.mean_r for r in top) / len(top)
    for row in sweep.rows:
        if row.mean_r >= 0.9 * asym:
            return row.m
    raise MCUndefinedError("m_c undefined")


def sweep_to_plateau(
    p: GouParams,
    sim: SimConfig,
    ens: EnsembleConfig,
    cfg: BacktestConfig = BacktestConfig(),
    grid: Sequence[int] = DEFAULT_GRID,
    min_rows: int = MIN_SWEEP_ROWS,
    workers: int = 1,
) -> SweepResult:
    """Walk ``grid`` until the curve levels off.

    Row ``i`` is exactly the row :func:`sweep_m` would produce for
    ``grid[i]``, so the result equals ``sweep_m(grid[:k])`` for the ``k``
    at which a plateau was first detected (or the whole grid).
    """
    sim = SimConfig(sim.n_units, sim.substeps, ens.base_seed)
    rows: List[SweepRow] = []
    for i, m in enumerate(grid):
        r, floored = path_returns(p, [m], sim, ens.n_paths, (i,), cfg.cost_rate, workers)
        mean, se = mean_and_stderr(r[0])
        rows.append(SweepRow(int(m), mean, se, ens.n_paths, floored))
        if len(rows) >= min_rows and plateau_detected(SweepResult(tuple(rows))):
            break
    result = SweepResult(tuple(rows))
    try:
        return SweepResult(result.rows, estimate_m_c(result))
    except MCUndefinedError:
        return result


def monotone_to_plateau(sweep: SweepResult, n_se: float = PLATEAU_SE) -> bool:
    """Every mean stays within ``n_se`` combined SE of the running maximum."""
    best = sweep.rows[0]
    for row in sweep.rows[1:]:
        if row.mean_r < best.mean_r - n_se * math.hypot(row.stderr, best.stderr):
            return False
        if row.mean_r > best.mean_r:
            best = row
    return True


def interior_maximum(sweep: SweepResult, n_se: float = 3.0) -> Optional[int]:
    """``m`` of the maximum if it beats both the first and last rows by ``n_se`` SE."""
    means = sweep.means
    i = int(np.argmax(means))
    top = sweep.rows[i]
    for edge in (sweep.rows[0], sweep.rows[-1]):
        if top.mean_r - edge.mean_r <= n_se * math.hypot(top.stderr, edge.stderr):
            return None
    return top.m
