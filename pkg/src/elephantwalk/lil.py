"""Block quantities behind the law of the iterated logarithm on geometric grids.

With ``t_k = alpha^k`` the increments ``X(t_{k+1}) - X(t_k)`` have
variances ``gamma_k`` and lag-``j`` correlations ``delta_j = L_j / L_0``,
where

    L_j = h(alpha^j) - alpha^-rho (h(alpha^(j+1)) + h(alpha^|j-1|)) + alpha^-2rho h(alpha^j).

The events ``A_k = {increment_k > sqrt(gamma_k) a_k}``, with
``a_k^2 = 2 log log t_{k+1}``, feed the Erdos-Renyi form of the second
Borel-Cantelli lemma: ``er_ratio`` evaluates its covariance-sum ratio
exactly, pair terms through :func:`elephantwalk.bvn.phi_many`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bvn import normal_sf, phi_many
from .sgp import Kernel, kernel_eval


@dataclass(frozen=True)
class GeometricGrid:
    alpha: float
    n_max: int

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError(f"grid ratio alpha must exceed 1, got {self.alpha}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    def t(self, n: int) -> float:
        return self.alpha ** n

    @property
    def times(self) -> np.ndarray:
        """``t_1 .. t_{n_max}``."""
        return self.alpha ** np.arange(1, self.n_max + 1, dtype=float)

    @classmethod
    def reaching(cls, alpha: float, horizon: float) -> "GeometricGrid":
        """Smallest grid whose last time is at least ``horizon``."""
        return cls(alpha, max(1, math.ceil(math.log(horizon) / math.log(alpha) - 1e-12)))


@dataclass
class BlockQuantities:
    k: np.ndarray
    times: np.ndarray  # t_k
    gamma: np.ndarray
    a: np.ndarray
    sigma: float


@dataclass
class ERRatioReport:
    n: int
    numerator: float
    denominator: float

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator


@dataclass
class DecayCheck:
    eta: float
    j: np.ndarray
    scaled: np.ndarray  # |delta_j| (j log alpha)^eta

    @property
    def max(self) -> float:
        return float(np.max(self.scaled)) if self.scaled.size else 0.0


def gamma_block(kern: Kernel, grid: GeometricGrid, k: int) -> float:
    """Variance of ``X(t_{k+1}) - X(t_k)``."""
    if not 1 <= k < grid.n_max:
        raise ValueError(f"block index must satisfy 1 <= k < n_max = {grid.n_max}, got {k}")
    t0, t1 = grid.t(k), grid.t(k + 1)
    g = kernel_eval(kern, t1, t1) - 2.0 * kernel_eval(kern, t1, t0) + kernel_eval(kern, t0, t0)
    if not g > 0:
        raise ValueError(f"non-positive increment variance {g} at k={k}: invalid kernel")
    return g


def threshold(alpha: float, k) -> np.ndarray | float:
    """``a_k = (2 log log t_{k+1})^(1/2) = (2 (log(k+1) + log log alpha))^(1/2)``."""
    arg = 2.0 * (np.log(np.asarray(k, dtype=float) + 1.0) + math.log(math.log(alpha)))
    if np.any(arg < 0):
        raise ValueError("log log t_{k+1} < 0: threshold undefined (need t_{k+1} >= e)")
    out = np.sqrt(arg)
    return float(out) if np.ndim(out) == 0 else out


def block_quantities(kern: Kernel, grid: GeometricGrid) -> BlockQuantities:
    k = np.arange(1, grid.n_max)
    first = max(1, _first_defined_block(grid.alpha))
    gam = np.array([gamma_block(kern, grid, int(i)) for i in k])
    a = np.full(k.size, np.nan)
    ok = k >= first
    if ok.any():
        a[ok] = threshold(grid.alpha, k[ok])
    return BlockQuantities(k, grid.alpha ** k.astype(float), gam, a, math.sqrt(kern.variance_at_one))


def _first_defined_block(alpha: float) -> int:
    # smallest k with t_{k+1} >= e
    return max(1, math.ceil(1.0 / math.log(alpha) - 1.0 - 1e-12))


def _h_table(kern: Kernel, alpha: float, j_max: int) -> np.ndarray:
    la = math.log(alpha)
    return np.array([kern.h_log(j * la) for j in range(j_max + 2)])


def _l_from_table(kern: Kernel, alpha: float, h: np.ndarray, j: np.ndarray) -> np.ndarray:
    r = alpha ** (-kern.rho)
    return h[j] * (1.0 + r * r) - r * (h[j + 1] + h[np.abs(j - 1)])


def l_coefficient(kern: Kernel, alpha: float, j: int) -> float:
    """``L_j(alpha)``."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    la = math.log(alpha)
    r = alpha ** (-kern.rho)
    hj = kern.h_log(j * la)
    return hj * (1.0 + r * r) - r * (kern.h_log((j + 1) * la) + kern.h_log(abs(j - 1) * la))


def delta_sequence(kern: Kernel, alpha: float, j_max: int) -> np.ndarray:
    """``delta_0 .. delta_{j_max}``; ``delta_0 = 1`` exactly."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    h = _h_table(kern, alpha, j_max)
    L = _l_from_table(kern, alpha, h, np.arange(j_max + 1))
    if not L[0] > 0:
        raise ValueError(f"L_0(alpha) = {L[0]} <= 0: alpha={alpha} too small or kernel invalid")
    out = L / L[0]
    out[0] = 1.0
    return out


def delta_corr(kern: Kernel, alpha: float, j: int) -> float:
    """Correlation of grid increments ``j`` blocks apart."""
    if j < 0:
        raise ValueError("lag must be >= 0")
    if j == 0:
        l0 = l_coefficient(kern, alpha, 0)
        if not l0 > 0:
            raise ValueError(f"L_0(alpha) = {l0} <= 0: alpha={alpha} too small or kernel invalid")
        return 1.0
    return float(delta_sequence(kern, alpha, j)[j])


def alpha_diagnostic(kern: Kernel, alpha: float) -> float:
    """``L_0(alpha) - h(1)``; small when alpha is 'large enough'."""
    return l_coefficient(kern, alpha, 0) - kern.h_log(0.0)


def delta_decay_check(kern: Kernel, alpha: float, j_range: Sequence[int], eta: float) -> DecayCheck:
    """``|delta_j| (j log alpha)^eta`` over ``j_range``; bounded under a
    ``(log x)^-eta`` profile decay."""
    j = np.asarray(list(j_range), dtype=np.int64)
    if j.size and j.min() < 1:
        raise ValueError("decay check needs lags j >= 1")
    deltas = delta_sequence(kern, alpha, int(j.max()) if j.size else 1)
    scaled = np.abs(deltas[j]) * (j * math.log(alpha)) ** eta
    return DecayCheck(eta, j, scaled)


def event_prob(a: float) -> tuple[float, float, float]:
    """``(lower, upper, P(chi > a))`` for standard normal ``chi``, ``a >= 1``.

    The bounds are the Gaussian-tail sandwich divided by ``sqrt(2 pi)``.
    """
    if not a >= 1.0:
        raise ValueError(f"tail sandwich needs a >= 1, got {a}")
    dens = math.exp(-a * a / 2.0) / (a * math.sqrt(2.0 * math.pi))
    return 0.5 * dens, dens, normal_sf(a)


def er_ratio_table(kern: Kernel, alpha: float, ns: Sequence[int]) -> list[ERRatioReport]:
    """Erdos-Renyi ratio at each ``n`` in ``ns`` from a single pass to ``max(ns)``.

    Pairs ``(k, l)`` with ``k != l`` contribute ``phi(delta_|k-l|, a_k, a_l)``;
    the diagonal contributes ``P(A_k) - P(A_k)^2``.
    """
    ns = sorted(int(n) for n in ns)
    if ns[0] < 2:
        raise ValueError("er_ratio needs n >= 2")
    n_max = ns[-1]
    k = np.arange(1, n_max + 1)
    a = threshold(alpha, k)
    prob = normal_sf(a)
    deltas = delta_sequence(kern, alpha, n_max - 1)
    if np.any(np.abs(deltas[1:]) >= 1.0):
        j = int(np.flatnonzero(np.abs(deltas[1:]) >= 1.0)[0]) + 1
        raise ValueError(f"|delta_{j}| = {abs(deltas[j])} >= 1: invalid kernel/alpha")
    # contribution indexed by the larger of the two block indices
    by_max = prob - prob * prob
    for j in range(1, n_max):
        d = deltas[j]
        if d == 0.0:
            continue
        by_max[j:] += 2.0 * phi_many(d, a[: n_max - j], a[j:])
    numer = np.cumsum(by_max)
    denom = np.cumsum(prob) ** 2
    return [ERRatioReport(n, float(numer[n - 1]), float(denom[n - 1])) for n in ns]


def er_ratio(kern: Kernel, alpha: float, n: int) -> ERRatioReport:
    return er_ratio_table(kern, alpha, [n])[0]


def borell_tis_bound(m_hat: float, v: float, x: float) -> float:
    """``exp(-(x - m)^2 / (2 v))`` bound on ``P(sup X >= x)``."""
    if not x > m_hat:
        raise ValueError(f"bound needs x > m (x={x}, m={m_hat})")
    if not v > 0:
        raise ValueError("variance bound v must be positive")
    return math.exp(-((x - m_hat) ** 2) / (2.0 * v))


@dataclass
class LilStatistic:
    times: np.ndarray          # grid times where the normaliser is defined
    running_max_plus: np.ndarray   # (replicas, len(times))
    running_max_minus: np.ndarray
    events: np.ndarray         # (replicas, n_blocks) indicators of A_k
    block_k: np.ndarray        # k for each events column

    @property
    def event_counts(self) -> np.ndarray:
        """Cumulative number of fired blocks per replica."""
        return np.cumsum(self.events, axis=1)


STAT_T_MIN = 16.0


def lil_statistic(kern: Kernel, grid: GeometricGrid, paths: np.ndarray,
                  t_min: float = STAT_T_MIN) -> LilStatistic:
    """Running maxima of ``+-X(t_n) / sqrt(2 t_n^(2 rho) log log t_n)`` and block events.

    ``paths[r, n-1] = X(t_n)``.  The maxima run over grid times ``t_n >= t_min``;
    the default 16 keeps ``log log t >= 1``, below which the normaliser
    collapses and early points dominate the maximum.  Block events are
    recorded for every ``k`` with ``t_{k+1} >= e``.
    """
    if not t_min >= math.e:
        raise ValueError("t_min must be >= e so that log log t_n >= 0")
    x = np.atleast_2d(np.asarray(paths, dtype=float))
    t = grid.times
    if x.shape[1] != t.size:
        raise ValueError(f"paths have {x.shape[1]} columns but the grid has {t.size} times")
    use = t >= t_min
    tt = t[use]
    norm = np.sqrt(2.0 * tt ** (2.0 * kern.rho) * np.log(np.log(tt)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(norm > 0, x[:, use] / norm, 0.0)
    plus = np.maximum.accumulate(ratio, axis=1)
    minus = np.maximum.accumulate(-ratio, axis=1)
    first = _first_defined_block(grid.alpha)
    ks = np.arange(first, grid.n_max)
    if ks.size:
        gam = np.array([gamma_block(kern, grid, int(k)) for k in ks])
        thr = np.sqrt(gam) * threshold(grid.alpha, ks)
        incr = x[:, ks] - x[:, ks - 1]
        events = incr > thr
    else:
        events = np.zeros((x.shape[0], 0), dtype=bool)
    return LilStatistic(tt, plus, minus, events, ks)


def expected_event_count(kern: Kernel, grid: GeometricGrid) -> float:
    """``sum_k P(A_k)`` over the blocks :func:`lil_statistic` evaluates."""
    ks = np.arange(_first_defined_block(grid.alpha), grid.n_max)
    return float(np.sum(normal_sf(threshold(grid.alpha, ks)))) if ks.size else 0.0
