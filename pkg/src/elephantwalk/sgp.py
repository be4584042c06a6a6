"""Self-similar Gaussian kernels, exact grid sampling, Lamperti transform.

A kernel ``R`` is rho-self-similar when ``R(cs, ct) = c^(2 rho) R(s, t)``.
Every such kernel is determined by its profile

    h(x) = x^(-rho) R(1, x),   x >= 1,

through ``R(s, t) = (st)^rho h(max/min)``.  Each kernel class exposes
``cov`` and ``h_log`` (``h`` at ``x = e^y``, written to stay finite for
``y`` in the thousands, which the block-correlation sums need).
"""
from __future__ import annotations

import cmath
import functools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy import integrate, linalg, optimize

from .errors import FactorizationError, QuadratureError
from .rng import StreamKey, normal_matrix

if TYPE_CHECKING:
    from .duo import PairParams

log = logging.getLogger(__name__)

QUAD_RTOL = 1e-10
SAMPLE_MAX_GRID = 2**12
FIT_MIN_X = 1e2


def _quad(func, lo, hi, **kwargs) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, *_ = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=1e-12,
                                        limit=400, full_output=1, **kwargs)
    if not err <= QUAD_RTOL * abs(value) and err > 1e-300:
        raise QuadratureError(
            f"quadrature reached error {err:.3g} on value {value:.6g} "
            f"(relative {err / abs(value) if value else math.inf:.3g}, target {QUAD_RTOL:g})",
            value, err)
    return value


class Kernel:
    """Base class; subclasses set ``rho`` and implement ``cov`` and ``h_log``."""

    name = "kernel"
    rho: float

    def cov(self, s: float, t: float) -> float:
        raise NotImplementedError

    def h_log(self, y: float) -> float:
        raise NotImplementedError

    def h(self, x: float) -> float:
        if x < 1:
            raise ValueError(f"h is defined for x >= 1, got {x}")
        return self.h_log(math.log(x))

    @property
    def variance_at_one(self) -> float:
        """``R(1, 1) = sigma^2``."""
        return self.h_log(0.0)

    def params(self) -> dict:
        raise NotImplementedError

    def cov_matrix(self, grid: Sequence[float]) -> np.ndarray:
        t = np.asarray(grid, dtype=float)
        n = t.size
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = self.cov(t[i], t[j])
        return out


@dataclass(frozen=True)
class FBM(Kernel):
    """Fractional Brownian motion with Hurst index ``H``."""

    H: float
    name = "fbm"

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ValueError(f"FBM needs 0 < H < 1, got {self.H}")

    @property
    def rho(self) -> float:
        return self.H

    def params(self) -> dict:
        return {"H": self.H}

    def cov(self, s, t):
        e = 2.0 * self.H
        lo, hi = (abs(s), abs(t)) if abs(s) <= abs(t) else (abs(t), abs(s))
        if hi == 0.0:
            return 0.0
        if lo == hi:
            return hi ** e
        # hi^e - (hi - lo)^e without cancellation when lo << hi
        return 0.5 * (lo ** e - hi ** e * math.expm1(e * math.log1p(-lo / hi)))

    def h_log(self, y):
        H = self.H
        if y == 0.0:
            return 1.0
        # x^(2H) - (x-1)^(2H) = x^(2H) * (-expm1(2H log1p(-1/x)))
        if y > 40.0:
            log_diff = H * y + math.log(2.0 * H) - y
        else:
            log_diff = H * y + math.log(-math.expm1(2.0 * H * math.log1p(-math.exp(-y))))
        return 0.5 * (math.exp(-H * y) + math.exp(log_diff))

    def cov_matrix(self, grid):
        t = np.abs(np.asarray(grid, dtype=float))
        e = 2.0 * self.H
        lo = np.minimum(t[:, None], t[None, :])
        hi = np.maximum(t[:, None], t[None, :])
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 0.5 * (lo ** e - hi ** e * np.expm1(e * np.log1p(-lo / hi)))
        return np.where(hi > 0, np.where(lo == hi, hi ** e, out), 0.0)


@dataclass(frozen=True)
class RLFBM(Kernel):
    """Generalised Riemann-Liouville FBM ``int_0^t (t-u)^beta u^(-gamma/2) dB(u)``.

    For ``s <= t`` the substitution ``u = s w`` gives

        R(s, t) = s^(beta+1-gamma) t^beta I(s/t),
        I(z) = int_0^1 w^(-gamma) (1-w)^beta (1 - z w)^beta dw,

    whose endpoint singularities are carried by QUADPACK's algebraic
    weight, leaving a smooth integrand.
    """

    beta: float
    gamma: float = 0.0
    name = "rlfbm"

    def __post_init__(self):
        if not self.beta > -0.5:
            raise ValueError(f"RLFBM needs beta > -1/2, got {self.beta}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"RLFBM needs 0 <= gamma < 1, got {self.gamma}")

    @property
    def rho(self) -> float:
        return self.beta - self.gamma / 2.0 + 0.5

    def params(self) -> dict:
        return {"beta": self.beta, "gamma": self.gamma}

    @functools.lru_cache(maxsize=65536)
    def _shape_integral(self, z: float) -> float:
        b, g = self.beta, self.gamma
        if z == 1.0:
            return _quad(lambda w: 1.0, 0.0, 1.0, weight="alg", wvar=(-g, 2.0 * b))
        if b == 0.0:
            return _quad(lambda w: 1.0, 0.0, 1.0, weight="alg", wvar=(-g, 0.0))
        return _quad(lambda w: (1.0 - z * w) ** b, 0.0, 1.0, weight="alg", wvar=(-g, b))

    def cov(self, s, t):
        if s <= 0 or t <= 0:
            raise ValueError("RLFBM kernel needs s, t > 0")
        lo, hi = (s, t) if s <= t else (t, s)
        b, g = self.beta, self.gamma
        return lo ** (b + 1.0 - g) * hi ** b * self._shape_integral(lo / hi)

    def h_log(self, y):
        return math.exp(0.5 * (self.gamma - 1.0) * y) * self._shape_integral(math.exp(-y))


@dataclass(frozen=True)
class ERWDiff(Kernel):
    """Covariance of the Gaussian process coupled to the difference of two
    independent diffusive elephant walks with memory ``p`` and ``p2``."""

    p: float
    p2: float
    name = "erwdiff"

    def __post_init__(self):
        for v in (self.p, self.p2):
            if not 0.0 < v < 0.75:
                raise ValueError(f"ERWDiff needs memory parameters in (0, 3/4), got {v}")

    rho = 0.5

    def params(self) -> dict:
        return {"p": self.p, "p2": self.p2}

    def cov(self, s, t):
        m = min(s, t)
        total = 0.0
        for p in (self.p, self.p2):
            total += (s * t) ** (2 * p - 1) / (3 - 4 * p) * m ** (3 - 4 * p)
        return total

    def h_log(self, y):
        return sum(math.exp((2 * p - 1.5) * y) / (3 - 4 * p) for p in (self.p, self.p2))

    def cov_matrix(self, grid):
        t = np.asarray(grid, dtype=float)
        st = t[:, None] * t[None, :]
        m = np.minimum(t[:, None], t[None, :])
        return sum(st ** (2 * p - 1) / (3 - 4 * p) * m ** (3 - 4 * p) for p in (self.p, self.p2))


def _rotated_density(alpha: float, y: float, theta: float) -> float:
    # inverse Fourier integral along the ray xi = r e^{i theta}
    e1 = cmath.exp(1j * theta)
    ea = cmath.exp(1j * alpha * theta)
    return _quad(lambda r: (e1 * cmath.exp(1j * r * y * e1 - r ** alpha * ea)).real,
                 0.0, math.inf) / math.pi


def _laplace_density(alpha: float, y: float) -> float:
    # ray at theta = pi/2 (alpha <= 1): positive Laplace-type integrand
    c = math.cos(alpha * math.pi / 2.0)
    s = math.sin(alpha * math.pi / 2.0)

    def integrand(u):
        w = (u / y) ** alpha
        return math.exp(-u - w * c) * math.sin(w * s)

    return _quad(integrand, 0.0, math.inf) / (math.pi * y)


def _zolotarev_density(alpha: float, y: float) -> float:
    # non-oscillatory representation for 1 < alpha < 2 in the variable
    # s = log(pi/2 - theta); the integrand g e^{-g} peaks where g = 1
    k = alpha / (alpha - 1.0)
    lx = k * math.log(y)

    def log_g(s):
        ph = math.exp(s)
        log_sin = s + (math.log(math.sin(ph) / ph) if ph > 1e-8 else -ph * ph / 6.0)
        return ((k - 1.0) * log_sin - k * math.log(math.sin(alpha * (math.pi / 2.0 - ph)))
                + math.log(math.cos((alpha - 1.0) * (math.pi / 2.0 - ph))) + lx)

    def integrand(s):
        g = log_g(s)
        return math.exp(g - math.exp(g) + s) if g < 700.0 else 0.0

    top = math.log(math.pi / 2.0) - 1e-15
    lo = -745.0
    if log_g(lo) < 0.0 < log_g(top):
        peak = optimize.brentq(log_g, lo, top, xtol=1e-14)
    else:
        peak = top if log_g(top) <= 0.0 else lo
    total = _quad(integrand, -math.inf, peak) + _quad(integrand, peak, top)
    return alpha / (math.pi * (alpha - 1.0) * y) * total


@functools.lru_cache(maxsize=None)
def stable_density(alpha: float, y: float) -> float:
    """Symmetric stable density whose characteristic function is ``exp(-|xi|^alpha)``.

    The Fourier inversion integral is taken along a rotated ray (small
    ``y``), the imaginary axis (``alpha <= 1``) or Zolotarev's integral
    (``1 < alpha < 2``); ``alpha = 2`` is the N(0, 2) density.
    """
    y = abs(float(y))
    if y == 0.0:
        return math.gamma(1.0 + 1.0 / alpha) / math.pi
    if alpha == 2.0:
        return math.exp(-y * y / 4.0) / math.sqrt(4.0 * math.pi)
    if y < 1.0:
        return _rotated_density(alpha, y, math.pi / (4.0 * max(alpha, 1.0)))
    if alpha <= 1.0:
        return _laplace_density(alpha, y)
    return _zolotarev_density(alpha, y)


@dataclass(frozen=True)
class StableSpectral(Kernel):
    """Kernel whose Lamperti-stationary covariance has spectral measure
    proportional to ``exp(-|xi|^alpha) d xi``; ``h(x) = r11 f(log x) / f(0)``."""

    alpha: float
    r11: float = 1.0
    name = "stable"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"StableSpectral needs 0 < alpha <= 2, got {self.alpha}")
        if not self.r11 > 0:
            raise ValueError("r11 must be positive")

    rho = 0.5

    def params(self) -> dict:
        return {"alpha": self.alpha, "r11": self.r11}

    def h_log(self, y):
        a = float(self.alpha)
        return self.r11 * stable_density(a, float(y)) / stable_density(a, 0.0)

    def cov(self, s, t):
        lo, hi = (s, t) if s <= t else (t, s)
        return math.sqrt(s * t) * self.h_log(math.log(hi / lo))


KERNELS = {cls.name: cls for cls in (FBM, RLFBM, ERWDiff, StableSpectral)}


def make_kernel(variant: str, **params) -> Kernel:
    try:
        cls = KERNELS[variant.lower()]
    except KeyError:
        raise ValueError(f"unknown kernel variant {variant!r}; choose from {sorted(KERNELS)}") from None
    return cls(**params)


def kernel_eval(kern: Kernel, s: float, t: float) -> float:
    if s <= 0 or t <= 0:
        raise ValueError(f"kernel arguments must be positive, got s={s}, t={t}")
    return float(kern.cov(s, t))


def self_similarity_check(kern: Kernel, c: float, pairs: Iterable[tuple[float, float]]) -> float:
    """Largest relative gap between ``R(cs, ct)`` and ``c^(2 rho) R(s, t)``."""
    if c <= 0:
        raise ValueError("scale c must be positive")
    scale = c ** (2.0 * kern.rho)
    worst = 0.0
    for s, t in pairs:
        ref = scale * kernel_eval(kern, s, t)
        worst = max(worst, abs(kernel_eval(kern, c * s, c * t) - ref) / abs(ref))
    return worst


@dataclass
class HProfile:
    xs: np.ndarray
    hs: np.ndarray
    exponent: float | None
    scale: str  # "log" (polynomial decay) or "loglog" (logarithmic decay)
    fit_range: tuple[float, float] | None
    note: str = ""


def h_profile(kern: Kernel, xs: Sequence[float]) -> HProfile:
    """Profile values plus a fitted decay exponent.

    The exponent is the least-squares slope of ``log h`` against ``log x``
    (``log log x`` for the stable kernels) over the top decade of ``xs``,
    using only ``x >= 100``.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or xs[0] < 1 or np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be increasing with xs[0] >= 1")
    hs = np.array([kern.h_log(math.log(x)) for x in xs])
    lo = max(FIT_MIN_X, xs[-1] / 10.0)
    window = xs >= lo
    scale = "loglog" if isinstance(kern, StableSpectral) else "log"
    if isinstance(kern, StableSpectral) and kern.alpha == 2.0:
        return HProfile(xs, hs, None, scale, None,
                        "Gaussian spectral measure: h decays like exp(-(log x)^2 / 4); no exponent fitted")
    if window.sum() < 2:
        return HProfile(xs, hs, None, scale, None, "fewer than two points with x >= 100 in the top decade")
    ly = np.log(hs[window])
    lx = np.log(xs[window]) if scale == "log" else np.log(np.log(xs[window]))
    slope = float(np.polyfit(lx, ly, 1)[0])
    return HProfile(xs, hs, slope, scale, (float(xs[window][0]), float(xs[-1])))


# -- sampling ------------------------------------------------------------------

@dataclass
class GaussianSampler:
    """Cholesky factor of a kernel's covariance on a grid, reusable across
    replica chunks.  Rows are equilibrated (unit diagonal) before factoring."""

    kern: Kernel
    grid: np.ndarray
    factor: np.ndarray = field(repr=False)
    jitter: float = 0.0

    @classmethod
    def build(cls, kern: Kernel, grid: Sequence[float]) -> "GaussianSampler":
        t = np.asarray(grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("grid must be increasing positive times")
        if t.size > SAMPLE_MAX_GRID:
            raise ValueError(f"grid of {t.size} points exceeds the dense limit {SAMPLE_MAX_GRID}")
        cov = kern.cov_matrix(t)
        factor, jitter = factorize(cov)
        return cls(kern, t, factor, jitter)

    def sample(self, replicas: int, key: StreamKey) -> np.ndarray:
        z = normal_matrix(key, replicas, self.grid.size)
        return z @ self.factor.T


def factorize(cov: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower factor ``L`` with ``L L^T = cov (+ jitter)`` and the jitter used.

    Jitter (relative to the equilibrated matrix, so ``1e-10 * trace/dim``
    there) is only added when plain Cholesky fails.
    """
    d = np.sqrt(np.diag(cov))
    if np.any(~(d > 0)):
        raise FactorizationError("covariance has a non-positive diagonal entry")
    scaled = cov / d[:, None] / d[None, :]
    jitter = 0.0
    try:
        chol = linalg.cholesky(scaled, lower=True)
    except linalg.LinAlgError:
        jitter = 1e-10 * np.trace(scaled) / scaled.shape[0]
        log.warning("Cholesky failed; retrying with diagonal jitter %.3g", jitter)
        try:
            chol = linalg.cholesky(scaled + jitter * np.eye(scaled.shape[0]), lower=True)
        except linalg.LinAlgError as exc:
            raise FactorizationError(f"covariance not positive definite even with jitter {jitter:.3g}") from exc
    return chol * d[:, None], jitter


def sample_paths(kern: Kernel, grid: Sequence[float], replicas: int, key: StreamKey) -> np.ndarray:
    """Exact draws of the process on ``grid``; row ``r`` uses replica ``key.replica + r``."""
    return GaussianSampler.build(kern, grid).sample(replicas, key)


def is_geometric(times: Sequence[float], rtol: float = 1e-9) -> bool:
    t = np.asarray(times, dtype=float)
    if t.size < 2 or np.any(t <= 0):
        return False
    r = t[1:] / t[:-1]
    return bool(r[0] > 1 and np.all(np.abs(r - r[0]) <= rtol * r[0]))


def lamperti(kern: Kernel, times: Sequence[float], paths: np.ndarray) -> np.ndarray:
    """``Y_i = t_i^(-rho) X(t_i)`` on a geometric grid (stationary in ``i``)."""
    t = np.asarray(times, dtype=float)
    if not is_geometric(t):
        raise ValueError("lamperti needs a geometric grid t_n = alpha^n")
    return np.asarray(paths, dtype=float) * t ** (-kern.rho)


def lamperti_covariance(kern: Kernel, times: Sequence[float]) -> np.ndarray:
    """Exact covariance of the Lamperti-transformed grid values."""
    t = np.asarray(times, dtype=float)
    scale = t ** (-kern.rho)
    return kern.cov_matrix(t) * scale[:, None] * scale[None, :]


def coupling_process(pair: "PairParams", t: float, bm_values: tuple[float, float]) -> float:
    """Gaussian process matched to the walk difference, given
    ``B(t^(3-4p))`` and ``B'(t^(3-4p'))``."""
    p, p2 = pair.first.p, pair.second.p
    for v in (p, p2):
        if not 0.0 < v < 0.75:
            raise ValueError(f"coupling needs memory parameters in (0, 3/4), got {v}")
    b1, b2 = bm_values
    return (t ** (2 * p - 1) / math.sqrt(3 - 4 * p) * b1
            - t ** (2 * p2 - 1) / math.sqrt(3 - 4 * p2) * b2)
