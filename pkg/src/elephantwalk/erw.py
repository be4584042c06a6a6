"""Single elephant random walks: samplers, exact finite-n law, moments.

Conditionally on the past, step ``n + 1`` copies a uniformly chosen
earlier step with probability ``p`` and flips it otherwise.  Summing over
the chosen index gives

    P(X_{n+1} = +1 | S_n) = 1/2 + (2p - 1) S_n / (2n),

so ``(n, S_n)`` is a Markov chain.  ``simulate`` uses that closed form and
keeps O(1) state; ``simulate_naive`` stores the history and draws the
index, and exists as a test oracle.

Paths are int64 arrays ``path[n] = S_n`` for ``n = 0..n_steps``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from numba import njit

from .rng import StreamKey, block_uniforms, uniform_at

EXACT_LAW_MAX_N = 2**12
CRITICAL_P = 0.75
_CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class WalkParams:
    """Memory parameter ``p`` and first-step probability ``q``."""

    p: float
    q: float = 0.5

    def __post_init__(self):
        if not 0.0 <= float(self.p) <= 1.0:
            raise ValueError(f"memory parameter p must lie in [0, 1], got {self.p}")
        if not 0.0 <= float(self.q) <= 1.0:
            raise ValueError(f"first-step probability q must lie in [0, 1], got {self.q}")

    @property
    def regime(self) -> "Regime":
        return classify(self.p)


@dataclass(frozen=True)
class WalkState:
    n: int
    position: int


@dataclass(frozen=True)
class ExactLaw:
    """Exact distribution of ``S_n`` on ``{-n, -n+2, ..., n}``."""

    n: int
    support: np.ndarray
    pmf: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.support, self.pmf)}

    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.support - m) ** 2, self.pmf))


class Regime(enum.Enum):
    DIFFUSIVE = "diffusive"
    CRITICAL = "critical"
    SUPERDIFFUSIVE = "superdiffusive"


def is_critical(p) -> bool:
    if isinstance(p, Fraction):
        return p == Fraction(3, 4)
    return abs(float(p) - CRITICAL_P) < _CRITICAL_TOL


def classify(p) -> Regime:
    if is_critical(p):
        return Regime.CRITICAL
    return Regime.DIFFUSIVE if float(p) < CRITICAL_P else Regime.SUPERDIFFUSIVE


def step_probability(params: WalkParams, state: WalkState) -> float:
    """P(X_{n+1} = +1 | S_n) for ``n >= 1``."""
    if state.n < 1:
        raise ValueError("step_probability needs n >= 1; the first step is Bernoulli(q)")
    if abs(state.position) > state.n:
        raise ValueError(f"|S_n| = {abs(state.position)} exceeds n = {state.n}")
    return 0.5 + (2.0 * params.p - 1.0) * state.position / (2.0 * state.n)


# -- samplers ----------------------------------------------------------------

@njit(cache=True, nogil=True)
def _walk_kernel(p, q, seed, replica, stream, out):
    # uniform counter n drives step n + 1
    n_steps = out.shape[0] - 1
    drift = 2.0 * p - 1.0
    out[0] = 0
    s = 1 if uniform_at(seed, replica, stream, np.uint64(0)) < q else -1
    out[1] = s
    n = 1
    while n < n_steps:
        u0, u1 = block_uniforms(seed, replica, stream, np.uint64(n >> 1))
        u = u1 if n & 1 else u0
        s += 1 if u < 0.5 + drift * s / (2.0 * n) else -1
        n += 1
        out[n] = s
        if n < n_steps and (n & 1):
            s += 1 if u1 < 0.5 + drift * s / (2.0 * n) else -1
            n += 1
            out[n] = s


@njit(cache=True, nogil=True)
def _walk_at_horizons(p, q, seed, replica0, stream, horizons, out):
    drift = 2.0 * p - 1.0
    n_max = horizons[-1]
    for r in range(out.shape[0]):
        rep = replica0 + np.uint64(r)
        u_first, u1 = block_uniforms(seed, rep, stream, np.uint64(0))
        s = 1 if u_first < q else -1
        h = 0
        while horizons[h] == 0:
            out[r, h] = 0
            h += 1
        if horizons[h] == 1:
            out[r, h] = s
            h += 1
        n = 1
        while n < n_max:
            if n & 1:
                u = u1
            else:
                u, u1 = block_uniforms(seed, rep, stream, np.uint64(n >> 1))
            s += 1 if u < 0.5 + drift * s / (2.0 * n) else -1
            n += 1
            if n == horizons[h]:
                out[r, h] = s
                h += 1


@njit(cache=True, nogil=True)
def _naive_kernel(p, q, seed, replica, stream, out):
    # Philox block n (two uniforms) drives step n + 1: index, then coin
    n_steps = out.shape[0] - 1
    steps = np.empty(n_steps, dtype=np.int8)
    steps[0] = 1 if uniform_at(seed, replica, stream, np.uint64(0)) < q else -1
    out[0] = 0
    out[1] = steps[0]
    for n in range(1, n_steps):
        u_idx, u_coin = block_uniforms(seed, replica, stream, np.uint64(n))
        j = int(u_idx * n)
        if j >= n:
            j = n - 1
        x = steps[j] if u_coin < p else -steps[j]
        steps[n] = x
        out[n + 1] = out[n] + x


def _key_words(key: StreamKey):
    return np.uint64(key.seed), np.uint64(key.replica), np.uint64(key.stream)


def simulate(params: WalkParams, n_steps: int, key: StreamKey) -> np.ndarray:
    """One ERW path ``S_0..S_{n_steps}`` using the Markov closed form."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    out = np.empty(n_steps + 1, dtype=np.int64)
    _walk_kernel(float(params.p), float(params.q), *_key_words(key), out)
    return out


def simulate_naive(params: WalkParams, n_steps: int, key: StreamKey) -> np.ndarray:
    """Literal sampler: stores every step and copies/flips ``X_{U_n}``."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    out = np.empty(n_steps + 1, dtype=np.int64)
    _naive_kernel(float(params.p), float(params.q), *_key_words(key), out)
    return out


def simulate_many(params: WalkParams, horizons: Sequence[int], replicas: int,
                  key: StreamKey) -> np.ndarray:
    """Positions at ``horizons`` for replicas ``key.replica + r``.

    Matches ``simulate`` path by path but keeps no history, so it is the
    workhorse for large replica counts.  Returns shape ``(replicas, len(horizons))``.
    """
    hz = np.asarray(horizons, dtype=np.int64)
    if hz.ndim != 1 or hz.size == 0 or np.any(np.diff(hz) <= 0) or hz[0] < 0:
        raise ValueError("horizons must be a non-empty strictly increasing sequence of n >= 0")
    if hz[-1] < 1:
        raise ValueError("largest horizon must be >= 1")
    out = np.empty((replicas, hz.size), dtype=np.int64)
    _walk_at_horizons(float(params.p), float(params.q), *_key_words(key), hz, out)
    return out


def states(path: np.ndarray) -> Iterator[WalkState]:
    for n, s in enumerate(path):
        yield WalkState(n, int(s))


def doubling_horizons(start: int, stop: int) -> list[int]:
    """``start, 2*start, 4*start, ...`` capped by ``stop`` (always included)."""
    if start < 1 or stop < start:
        raise ValueError("need 1 <= start <= stop")
    out = []
    h = start
    while h < stop:
        out.append(h)
        h *= 2
    out.append(stop)
    return out


# -- exact law ---------------------------------------------------------------

def exact_law(params: WalkParams, n: int) -> ExactLaw:
    """Forward recursion over ``(n, S_n)``; O(n^2)."""
    if not 1 <= n <= EXACT_LAW_MAX_N:
        raise ValueError(f"exact_law needs 1 <= n <= {EXACT_LAW_MAX_N}, got {n}")
    p, q = float(params.p), float(params.q)
    # probs[i] = P(S_m = -m + 2i)
    probs = np.array([1.0 - q, q])
    for m in range(1, n):
        pos = -m + 2.0 * np.arange(m + 1)
        up = 0.5 + (2.0 * p - 1.0) * pos / (2.0 * m)
        nxt = np.zeros(m + 2)
        nxt[1:] += probs * up
        nxt[:-1] += probs * (1.0 - up)
        probs = nxt
    support = np.arange(-n, n + 1, 2, dtype=np.int64)
    return ExactLaw(n, support, probs)


def exact_moments(params: WalkParams, n: int) -> tuple[float, float]:
    """Mean and variance of ``S_n`` from the first/second moment recursions.

    E[S_{m+1}]   = (1 + a/m) E[S_m]
    E[S_{m+1}^2] = (1 + 2a/m) E[S_m^2] + 1,   a = 2p - 1
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = 2.0 * float(params.p) - 1.0
    mean = 2.0 * float(params.q) - 1.0
    second = 1.0
    for m in range(1, n):
        mean *= 1.0 + a / m
        second = second * (1.0 + 2.0 * a / m) + 1.0
    return mean, second - mean * mean


def superdiffusive_limit_estimate(params: WalkParams, horizons: Sequence[int],
                                  key: StreamKey) -> np.ndarray:
    """``S_n / n^(2p-1)`` along one path at each horizon (p > 3/4 only)."""
    if classify(params.p) is not Regime.SUPERDIFFUSIVE:
        raise ValueError(f"superdiffusive limit needs p > 3/4, got p = {params.p}")
    hz = np.asarray(horizons, dtype=np.int64)
    values = simulate_many(params, hz, 1, key)[0]
    return values / hz.astype(float) ** (2.0 * params.p - 1.0)
