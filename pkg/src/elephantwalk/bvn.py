"""Bivariate standard normal quadrant probabilities.

For ``Z ~ N(0, [[1, d], [d, 1]])`` the excess quadrant mass over the
independent case,

    phi(d, a, b) = P(Z in [a, inf) x [b, inf)) - Phi_bar(a) Phi_bar(b),

equals the integral of the bivariate density ``psi(t, a, b)`` over
``t in [0, d]`` (the density's d-derivative is its mixed xy-derivative).
That one-dimensional integral is evaluated by adaptive Gauss-Kronrod
(7/15) bisection, compiled so that ``phi_many`` can sweep millions of
``(d, a, b)`` triples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import QuadratureError

_INV_2PI = 1.0 / (2.0 * math.pi)

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
# Gauss weights for the nodes _XGK[1], _XGK[3], _XGK[5], _XGK[7]
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

EPSABS = 0.0
EPSREL = 1e-12
_MAX_DEPTH = 60
_STACK = 256


@dataclass(frozen=True)
class BvnQuery:
    delta: float
    a: float
    b: float

    def __post_init__(self):
        if not abs(self.delta) < 1.0:
            raise ValueError(f"correlation must satisfy |delta| < 1, got {self.delta}")


@njit(cache=True, nogil=True, inline="always")
def _psi(t, x, y):
    one_m = 1.0 - t * t
    return math.exp(-(x * x - 2.0 * t * x * y + y * y) / (2.0 * one_m)) * _INV_2PI / math.sqrt(one_m)


@njit(cache=True, nogil=True)
def _gk15(lo, hi, x, y):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    fc = _psi(c, x, y)
    kron = fc * _WGK[7]
    gauss = fc * _WG[3]
    for i in range(7):
        dx = h * _XGK[i]
        f = _psi(c - dx, x, y) + _psi(c + dx, x, y)
        kron += _WGK[i] * f
        if i & 1:
            gauss += _WG[i >> 1] * f
    return kron * h, abs((kron - gauss) * h)


@njit(cache=True, nogil=True)
def _phi_adaptive(delta, x, y, epsabs, epsrel):
    """Returns (value, error estimate, converged)."""
    if delta == 0.0:
        return 0.0, 0.0, True
    whole, whole_err = _gk15(0.0, delta, x, y)
    tol = max(epsabs, epsrel * abs(whole))
    if whole_err <= tol:
        return whole, whole_err, True
    width = abs(delta)
    lo_stack = np.empty(_STACK)
    hi_stack = np.empty(_STACK)
    depth_stack = np.empty(_STACK, dtype=np.int64)
    lo_stack[0] = 0.0
    hi_stack[0] = delta
    depth_stack[0] = 0
    top = 1
    total = 0.0
    err = 0.0
    ok = True
    while top > 0:
        top -= 1
        lo = lo_stack[top]
        hi = hi_stack[top]
        d = depth_stack[top]
        val, e = _gk15(lo, hi, x, y)
        if e <= tol * abs(hi - lo) / width or d >= _MAX_DEPTH or top + 2 > _STACK:
            if e > tol * abs(hi - lo) / width:
                ok = False
            total += val
            err += e
        else:
            mid = 0.5 * (lo + hi)
            lo_stack[top] = lo
            hi_stack[top] = mid
            depth_stack[top] = d + 1
            lo_stack[top + 1] = mid
            hi_stack[top + 1] = hi
            depth_stack[top + 1] = d + 1
            top += 2
    return total, err, ok


@njit(cache=True, nogil=True)
def _phi_many(delta, a, b, epsabs, epsrel, out, err, ok):
    for i in range(out.shape[0]):
        v, e, good = _phi_adaptive(delta[i], a[i], b[i], epsabs, epsrel)
        out[i] = v
        err[i] = e
        ok[i] = good


def psi(delta: float, x: float, y: float) -> float:
    """Density of the standard bivariate normal with correlation ``delta``."""
    if not abs(delta) < 1.0:
        raise ValueError(f"correlation must satisfy |delta| < 1, got {delta}")
    return float(_psi(float(delta), float(x), float(y)))


def phi_many(delta, a, b, epsabs: float = EPSABS, epsrel: float = EPSREL,
             return_error: bool = False):
    """Vectorised :func:`phi` over broadcast arrays."""
    d, x, y = np.broadcast_arrays(np.asarray(delta, float), np.asarray(a, float),
                                  np.asarray(b, float))
    shape = d.shape
    d, x, y = (np.ascontiguousarray(v).ravel() for v in (d, x, y))
    if np.any(np.abs(d) >= 1.0):
        raise ValueError("correlation must satisfy |delta| < 1")
    out = np.empty(d.size)
    err = np.empty(d.size)
    ok = np.empty(d.size, dtype=np.bool_)
    _phi_many(d, x, y, float(epsabs), float(epsrel), out, err, ok)
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        raise QuadratureError(
            f"phi quadrature did not converge at delta={d[i]}, a={x[i]}, b={y[i]}; "
            f"achieved error {err[i]:.3g}", out[i], err[i])
    if return_error:
        return out.reshape(shape), err.reshape(shape)
    return out.reshape(shape)


def phi(query: BvnQuery | float, a: float | None = None, b: float | None = None) -> float:
    """Excess quadrant probability ``P(Z_d in R_ab) - P(Z_0 in R_ab)``.

    Accepts a :class:`BvnQuery` or ``phi(delta, a, b)``.
    """
    if not isinstance(query, BvnQuery):
        query = BvnQuery(float(query), float(a), float(b))
    v, e, good = _phi_adaptive(query.delta, float(query.a), float(query.b), EPSABS, EPSREL)
    if not good:
        raise QuadratureError(f"phi quadrature did not converge for {query}; achieved error {e:.3g}", v, e)
    return float(v)


def phi_bound(query: BvnQuery | float, a: float | None = None, b: float | None = None) -> float:
    """Upper bound on ``|phi(d, a, b)|`` valid for ``a, b > 0``."""
    if not isinstance(query, BvnQuery):
        query = BvnQuery(float(query), float(a), float(b))
    d, a, b = abs(query.delta), query.a, query.b
    if a <= 0 or b <= 0:
        raise ValueError(f"bound requires a > 0 and b > 0, got a={a}, b={b}")
    one_m = 1.0 - d * d
    return _INV_2PI / math.sqrt(one_m) * math.exp(-(a * a + b * b) / 2.0 + d * a * b / one_m) * d


def normal_sf(x):
    """Upper normal tail ``1 - Phi(x)`` via erfc (accurate deep in the tail)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    from scipy.special import erfc
    return 0.5 * erfc(np.asarray(x, float) / math.sqrt(2.0))


def quadrant_prob(delta: float, a: float, b: float) -> float:
    """``P(Z_d in [a, inf) x [b, inf))``."""
    value = normal_sf(a) * normal_sf(b) + phi(delta, a, b)
    return min(1.0, max(0.0, value))
