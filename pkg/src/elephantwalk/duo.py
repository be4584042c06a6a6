"""Two independent elephant random walks: difference process and collisions.

The walks of a pair share the seed and replica of a :class:`StreamKey` and
use streams ``2s`` and ``2s + 1``, so pairs built from distinct base
streams never overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .erw import CRITICAL_P, Regime, WalkParams, classify, is_critical, simulate
from .rng import StreamKey

MIN_GRID = 16


@dataclass(frozen=True)
class PairParams:
    first: WalkParams
    second: WalkParams

    @classmethod
    def of(cls, p: float, q: float, p2: float, q2: float) -> "PairParams":
        return cls(WalkParams(p, q), WalkParams(p2, q2))

    @property
    def max_p(self) -> float:
        return max(self.first.p, self.second.p)

    @property
    def regime(self) -> Regime:
        """Regime of the more persistent walk, which dominates the difference."""
        if is_critical(self.max_p):
            return Regime.CRITICAL
        return classify(self.max_p)


@dataclass
class CollisionRecord:
    horizon: int
    collision_times: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(self.collision_times.size)

    @property
    def last(self) -> int | None:
        return int(self.collision_times[-1]) if self.collision_times.size else None


@dataclass(frozen=True)
class DistanceStat:
    horizon: int
    running_max_plus: float
    running_max_minus: float


def pair_keys(key: StreamKey) -> tuple[StreamKey, StreamKey]:
    return key.with_stream(2 * key.stream), key.with_stream(2 * key.stream + 1)


def simulate_pair(pair: PairParams, n_steps: int, key: StreamKey) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = pair_keys(key)
    return simulate(pair.first, n_steps, k1), simulate(pair.second, n_steps, k2)


def _difference(paths) -> np.ndarray:
    a, b = (np.asarray(x, dtype=np.int64) for x in paths)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paths must be 1-d and of equal length, got {a.shape} and {b.shape}")
    return a - b


def collisions(paths: tuple[np.ndarray, np.ndarray], horizon: int | None = None) -> CollisionRecord:
    """All ``1 <= n <= horizon`` with ``S_n = S'_n``."""
    d = _difference(paths)
    n_max = d.size - 1
    if horizon is None:
        horizon = n_max
    if not 1 <= horizon <= n_max:
        raise ValueError(f"horizon must lie in [1, {n_max}], got {horizon}")
    times = np.flatnonzero(d[1 : horizon + 1] == 0) + 1
    return CollisionRecord(int(horizon), times)


def lil_constant_theory(pair: PairParams) -> float:
    """``sqrt(1/(3 - 4p) + 1/(3 - 4p'))`` for two diffusive walks."""
    p, p2 = pair.first.p, pair.second.p
    for v in (p, p2):
        if not v < CRITICAL_P or is_critical(v):
            raise ValueError(f"LIL constant needs p < 3/4 for both walks, got {v}")
    return math.sqrt(1.0 / (3.0 - 4.0 * p) + 1.0 / (3.0 - 4.0 * p2))


def normalizer(pair: PairParams, n) -> np.ndarray:
    """Scale of the difference at time ``n``.

    Iterated-log form when ``max(p, p') < 3/4``, the ``log n log log log n``
    form at 3/4, and the divergence rate ``n^(2 max(p, p') - 1)`` above.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < MIN_GRID):
        raise ValueError(f"normaliser needs n >= {MIN_GRID}")
    regime = pair.regime
    if regime is Regime.DIFFUSIVE:
        return np.sqrt(2.0 * n * np.log(np.log(n)))
    if regime is Regime.CRITICAL:
        return np.sqrt(2.0 * n * np.log(n) * np.log(np.log(np.log(n))))
    return n ** (2.0 * pair.max_p - 1.0)


def _check_grid(grid: Sequence[int], n_max: int) -> np.ndarray:
    g = np.asarray(grid, dtype=np.int64)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be a non-empty strictly increasing sequence")
    if g[0] < MIN_GRID:
        raise ValueError(f"grid entries must be >= {MIN_GRID} (got {g[0]})")
    if g[-1] > n_max:
        raise ValueError(f"grid exceeds path length {n_max}")
    return g


def distance_statistic(paths: tuple[np.ndarray, np.ndarray], pair: PairParams,
                       grid: Sequence[int]) -> list[DistanceStat]:
    """Running maxima of ``+-(S_n - S'_n) / normaliser(n)`` along ``grid``."""
    d = _difference(paths)
    g = _check_grid(grid, d.size - 1)
    ratio = d[g] / normalizer(pair, g)
    plus = np.maximum.accumulate(ratio)
    minus = np.maximum.accumulate(-ratio)
    return [DistanceStat(int(h), float(a), float(b)) for h, a, b in zip(g, plus, minus)]


def divergence_ratio(paths: tuple[np.ndarray, np.ndarray], pair: PairParams,
                     horizons: Sequence[int]) -> np.ndarray:
    """``|S_n - S'_n| / n^(2 max(p, p') - 1)``; settles at a positive limit
    in the superdiffusive regime."""
    if pair.regime is not Regime.SUPERDIFFUSIVE:
        raise ValueError(f"divergence ratio needs max(p, p') > 3/4, got {pair.max_p}")
    d = _difference(paths)
    h = np.asarray(horizons, dtype=np.int64)
    if np.any(h < 1) or np.any(h > d.size - 1):
        raise ValueError("horizons must lie in [1, path length]")
    return np.abs(d[h]) / h.astype(float) ** (2.0 * pair.max_p - 1.0)


def default_grid(horizon: int) -> list[int]:
    """Doubling grid ``16, 32, ...`` closed by ``horizon``."""
    if horizon < MIN_GRID:
        raise ValueError(f"horizon must be >= {MIN_GRID}")
    out, h = [], MIN_GRID
    while h < horizon:
        out.append(h)
        h *= 2
    out.append(horizon)
    return out


@dataclass(frozen=True)
class CollideRow:
    replica: int
    horizon: int
    count: int
    last_collision: int | None
    stat_plus: float
    stat_minus: float


def collide_replica(pair: PairParams, horizon: int, key: StreamKey,
                    grid: Sequence[int] | None = None) -> CollideRow:
    """Simulate one pair and summarise it; distance statistics are NaN when
    ``horizon < 16``."""
    paths = simulate_pair(pair, horizon, key)
    rec = collisions(paths)
    if horizon < MIN_GRID:
        plus = minus = math.nan
    else:
        stat = distance_statistic(paths, pair, grid if grid is not None else default_grid(horizon))[-1]
        plus, minus = stat.running_max_plus, stat.running_max_minus
    return CollideRow(key.replica, horizon, rec.count, rec.last, plus, minus)
