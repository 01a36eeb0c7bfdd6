"""Mean-reverting geometric price paths integrated with the Milstein scheme.

The price is pulled toward an attractor level ``A`` that itself grows
exponentially::

    dX = alpha * (A - X) dt + beta * X dW
    dA = mu * A dt

Noise comes from per-path counter-based (Philox) uniform streams turned into
normals by the Box-Muller transform. Every path draws its stream from a
:class:`numpy.random.SeedSequence` keyed on ``(seed, *stream_key)``, so a
path's values never depend on how paths are batched or scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .market_model import PriceSeries

TWO_PI = 2.0 * math.pi
FLOOR_FRACTION = 1e-12


@dataclass(frozen=True)
class GouParams:
    alpha: float
    a0: float
    beta: float
    mu: float = 0.0
    x0: Optional[float] = None

    def __post_init__(self):
        if self.x0 is None:
            object.__setattr__(self, "x0", self.a0)
        if not self.a0 > 0 or not self.x0 > 0:
            raise ValueError("a0 and x0 must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    n_units: int = 1000
    substeps: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 1 or self.substeps < 1:
            raise ValueError("n_units and substeps must be >= 1")


@dataclass(frozen=True)
class EnsembleConfig:
    n_paths: int = 30000
    base_seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Simulated prices for a batch of paths, shape ``(n_paths, n_units + 1)``."""

    prices: np.ndarray
    floored: np.ndarray

    @property
    def floored_paths(self) -> int:
        return int(np.count_nonzero(self.floored))


def normal_pair(uniform_source: Callable[[], float]) -> Tuple[float, float]:
    """Two independent standard normals from two uniforms (Box-Muller)."""
    u1 = uniform_source()
    while u1 <= 0.0:
        u1 = uniform_source()
    u2 = uniform_source()
    radius = math.sqrt(-2.0 * math.log(u1))
    angle = TWO_PI * u2
    return radius * math.cos(angle), radius * math.sin(angle)


def box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Vectorised Box-Muller; returns normals interleaved as ``z0, z1, z0, z1...``.

    ``u1`` must lie in ``(0, 1]``.
    """
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = TWO_PI * u2
    out = np.empty(u1.shape[:-1] + (2 * u1.shape[-1],))
    out[..., 0::2] = radius * np.cos(angle)
    out[..., 1::2] = radius * np.sin(angle)
    return out


def path_generator(seed: int, stream_key: Sequence[int]) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in stream_key))
    return np.random.Generator(np.random.Philox(ss))


def path_normals(seed: int, stream_key: Sequence[int], n: int) -> np.ndarray:
    """``n`` standard normals for one path stream."""
    gen = path_generator(seed, stream_key)
    n_pairs = (n + 1) // 2
    u = gen.random(2 * n_pairs).reshape(n_pairs, 2)
    # Generator.random is [0, 1); flip the first uniform into (0, 1] for the log.
    return box_muller(1.0 - u[:, 0], u[:, 1])[:n]


def milstein_step(x, a, p: GouParams, dt: float, dw):
    """One Milstein update; works on floats and arrays alike."""
    return x + p.alpha * (a - x) * dt + p.beta * x * dw + 0.5 * p.beta * p.beta * x * (dw * dw - dt)


def attractor_update(a: float, mu: float, dt: float) -> float:
    return a * math.exp(mu * dt)


def _integrate(p: GouParams, c: SimConfig, normals: np.ndarray) -> PathBatch:
    """Integrate a batch given normals of shape ``(n_units * substeps, n_paths)``."""
    n_paths = normals.shape[1]
    dt = 1.0 / c.substeps
    sqrt_dt = math.sqrt(dt)
    floor = FLOOR_FRACTION * p.a0

    out = np.empty((c.n_units + 1, n_paths))
    floored = np.zeros(n_paths, dtype=bool)
    x = np.full(n_paths, float(p.x0))
    a = float(p.a0)
    out[0] = x
    k = 0
    for unit in range(1, c.n_units + 1):
        for _ in range(c.substeps):
            x = milstein_step(x, a, p, dt, sqrt_dt * normals[k])
            a = attractor_update(a, p.mu, dt)
            k += 1
            bad = x <= 0.0
            if bad.any():
                x = np.where(bad, floor, x)
                floored |= bad
        out[unit] = x
    return PathBatch(prices=np.ascontiguousarray(out.T), floored=floored)


def simulate_batch(
    p: GouParams, c: SimConfig, path_indices: Sequence[int], stream_prefix: Sequence[int] = ()
) -> PathBatch:
    """Simulate the paths whose streams are ``(c.seed, *stream_prefix, index)``."""
    n_steps = c.n_units * c.substeps
    normals = np.empty((n_steps, len(path_indices)))
    for col, idx in enumerate(path_indices):
        normals[:, col] = path_normals(c.seed, (*stream_prefix, idx), n_steps)
    return _integrate(p, c, normals)


def simulate_path(p: GouParams, c: SimConfig, path_index: int = 0, stream_prefix: Sequence[int] = ()) -> PriceSeries:
    """One path sampled at integer ticks ``0..n_units``.

    Paths that hit the positivity floor are still returned; use
    :func:`simulate_batch` to see the floor flags.
    """
    batch = simulate_batch(p, c, [path_index], stream_prefix)
    return PriceSeries(security_id=f"path{path_index}", prices=batch.prices[0])


def exact_deterministic_path(p: GouParams, n_units: int) -> np.ndarray:
    """Closed-form solution for ``beta = 0`` at integer ticks (test aid)."""
    t = np.arange(n_units + 1, dtype=np.float64)
    if p.mu == 0.0:
        return p.a0 + (p.x0 - p.a0) * np.exp(-p.alpha * t)
    # x' = alpha (a0 e^{mu t} - x)
    k = p.alpha * p.a0 / (p.alpha + p.mu) if p.alpha + p.mu != 0 else None
    if k is None:
        return (p.x0 + p.alpha * p.a0 * t) * np.exp(-p.alpha * t)
    return k * np.exp(p.mu * t) + (p.x0 - k) * np.exp(-p.alpha * t)
