"""Counter-based random streams (Philox4x32-10).

Every draw is a pure function of ``(seed, replica, stream, counter)``:

* the 64-bit seed is the Philox key,
* the 128-bit Philox counter is ``(block_lo, block_hi, replica, stream)``.

One Philox block yields 4 x 32 bits, i.e. two 53-bit uniforms, so uniform
counter ``c`` lives in block ``c >> 1``, half ``c & 1``.  A standard normal
with counter ``c`` consumes the whole block ``c`` (both uniforms) through
the cosine branch of Box-Muller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

NORMAL_TRANSFORM = "philox4x32-10/box-muller-cos"

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class StreamKey:
    """Identifies one independent random stream."""

    seed: int
    replica: int = 0
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if not 0 <= self.replica < 2**32:
            raise ValueError(f"replica must fit in 32 bits, got {self.replica}")
        if not 0 <= self.stream < 2**32:
            raise ValueError(f"stream must fit in 32 bits, got {self.stream}")

    def with_replica(self, replica: int) -> "StreamKey":
        return StreamKey(self.seed, replica, self.stream)

    def with_stream(self, stream: int) -> "StreamKey":
        return StreamKey(self.seed, self.replica, stream)


def parse_seed(text: str | int) -> int:
    """Accept a decimal or ``0x``-prefixed hex seed."""
    if isinstance(text, int):
        value = text
    else:
        text = text.strip().lower()
        value = int(text, 16) if text.startswith("0x") else int(text, 10)
    if not 0 <= value < 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {text}")
    return value


@njit(cache=True, nogil=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox4x32 rounds; all arguments are uint64 holding 32-bit words."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@njit(cache=True, nogil=True, inline="always")
def _to_unit(hi, lo):
    # 27 + 26 bits -> [0, 1) on the 2**-53 lattice
    return np.float64((hi >> np.uint64(5)) * np.uint64(67108864) + (lo >> np.uint64(6))) * _INV_2_53


@njit(cache=True, nogil=True, inline="always")
def block_uniforms(seed, replica, stream, block):
    """Both uniforms of Philox block ``block`` (uint64 args)."""
    r0, r1, r2, r3 = philox4x32(
        block & _MASK32, block >> _S32, np.uint64(replica), np.uint64(stream),
        seed & _MASK32, seed >> _S32,
    )
    return _to_unit(r0, r1), _to_unit(r2, r3)


@njit(cache=True, nogil=True, inline="always")
def uniform_at(seed, replica, stream, counter):
    u0, u1 = block_uniforms(seed, replica, stream, counter >> np.uint64(1))
    if counter & np.uint64(1):
        return u1
    return u0


@njit(cache=True, nogil=True, inline="always")
def normal_at(seed, replica, stream, counter):
    u0, u1 = block_uniforms(seed, replica, stream, counter)
    return np.sqrt(-2.0 * np.log(1.0 - u0)) * np.cos(_TWO_PI * u1)


@njit(cache=True, nogil=True)
def _fill_uniform(seed, replica, stream, start, out):
    for i in range(out.shape[0]):
        out[i] = uniform_at(seed, replica, stream, start + np.uint64(i))


@njit(cache=True, nogil=True)
def _fill_normal(seed, replica, stream, start, out):
    for i in range(out.shape[0]):
        out[i] = normal_at(seed, replica, stream, start + np.uint64(i))


@njit(cache=True, nogil=True)
def _fill_normal_matrix(seed, replica0, stream, start, out):
    for r in range(out.shape[0]):
        rep = replica0 + np.uint64(r)
        for i in range(out.shape[1]):
            out[r, i] = normal_at(seed, rep, stream, start + np.uint64(i))


def _u64(x) -> np.uint64:
    return np.uint64(int(x))


def uniform01(key: StreamKey, counter: int) -> float:
    """Uniform draw in [0, 1) determined by ``(key, counter)``."""
    return float(uniform_at(_u64(key.seed), _u64(key.replica), _u64(key.stream), _u64(counter)))


def standard_normal(key: StreamKey, counter: int) -> float:
    """Standard normal draw determined by ``(key, counter)``."""
    return float(normal_at(_u64(key.seed), _u64(key.replica), _u64(key.stream), _u64(counter)))


def uniforms(key: StreamKey, size: int, start: int = 0) -> np.ndarray:
    """``uniform01(key, start + i)`` for ``i < size`` as an array."""
    out = np.empty(size, dtype=np.float64)
    _fill_uniform(_u64(key.seed), _u64(key.replica), _u64(key.stream), _u64(start), out)
    return out


def normals(key: StreamKey, size: int, start: int = 0) -> np.ndarray:
    """``standard_normal(key, start + i)`` for ``i < size`` as an array."""
    out = np.empty(size, dtype=np.float64)
    _fill_normal(_u64(key.seed), _u64(key.replica), _u64(key.stream), _u64(start), out)
    return out


def normal_matrix(key: StreamKey, replicas: int, size: int, start: int = 0) -> np.ndarray:
    """Row ``r`` holds the normals of replica ``key.replica + r``."""
    if key.replica + replicas > 2**32:
        raise ValueError("replica range exceeds 32 bits")
    out = np.empty((replicas, size), dtype=np.float64)
    _fill_normal_matrix(_u64(key.seed), _u64(key.replica), _u64(key.stream), _u64(start), out)
    return out


def philox_block(counter: tuple[int, int, int, int], key: tuple[int, int]) -> tuple[int, ...]:
    """Raw Philox4x32-10 output words, for known-answer testing."""
    c = [np.uint64(w) for w in counter]
    k = [np.uint64(w) for w in key]
    return tuple(int(w) for w in philox4x32(c[0], c[1], c[2], c[3], k[0], k[1]))
