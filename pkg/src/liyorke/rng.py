"""Counter-based random streams.

Every random number used by the simulations is a pure function of
``(seed, stream ids..., counter)``, so results do not depend on how work is
split across threads.

Algorithm (stable, meant to be re-implementable elsewhere):

    GAMMA = 0x9E3779B97F4A7C15
    mix64(z):                         # SplitMix64 finaliser
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)
    stream_key(seed, i1, i2, ...):
        k = mix64(seed + GAMMA)
        for i in (i1, i2, ...):
            k = mix64(k ^ mix64(i + GAMMA))
        return k
    draw(key, c) = mix64(key + (c + 1) * GAMMA)     # 64 random bits
    uniform(key, c) = (draw(key, c) >> 11) * 2**-53  # in [0, 1)

All arithmetic is modulo 2**64.
"""

import numba as nb
import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64_py(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def stream_key_py(seed, *ids):
    k = mix64_py(seed + GAMMA)
    for i in ids:
        k = mix64_py(k ^ mix64_py(i + GAMMA))
    return k


def uniform_py(key, counter):
    """Reference (pure Python) uniform draw; used to validate the kernels."""
    return (mix64_py(key + (counter + 1) * GAMMA) >> 11) * 2.0**-53


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def stream_key2(seed, a, b):
    k = mix64(np.uint64(seed) + np.uint64(GAMMA))
    k = mix64(k ^ mix64(np.uint64(a) + np.uint64(GAMMA)))
    k = mix64(k ^ mix64(np.uint64(b) + np.uint64(GAMMA)))
    return k


@nb.njit(cache=True, inline="always")
def draw(key, counter):
    return mix64(np.uint64(key) + (np.uint64(counter) + np.uint64(1)) * np.uint64(GAMMA))


@nb.njit(cache=True, inline="always")
def uniform(key, counter):
    return np.float64(draw(key, counter) >> np.uint64(11)) * 1.1102230246251565e-16


def uniforms(seed, a, b, n):
    """``n`` uniforms from stream ``(seed, a, b)`` as a numpy array."""
    return _uniforms(np.uint64(seed & _MASK), np.uint64(a), np.uint64(b), n)


@nb.njit(cache=True)
def _uniforms(seed, a, b, n):
    key = stream_key2(seed, a, b)
    out = np.empty(n)
    for c in range(n):
        out[c] = uniform(key, c)
    return out
