"""Counter-based uniforms (Philox4x32-10) keyed by seed, time and site.

Every random number in the package is a pure function of
``(seed, counter)``: the environment value at ``(t, x)`` of replica ``r``
never depends on which other sites were generated first, or on how the
work was split across processes.

Counter layout
--------------
field draws:   ``(key(x) low, key(x) high, t, replica)``
block draws:   ``(column, row low, row high, tag | 0x80000000)``

The top bit of the fourth word separates the two domains, so field
replicas are limited to ``< 2**31``.
"""

import numba
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S21 = np.uint64(21)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53
BLOCK_DOMAIN = 0x80000000


@numba.njit(inline="always", cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32 on uint64 words holding 32-bit values."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK32
        c0 = (hi1 ^ c1 ^ k0) & _MASK32
        c1 = lo1
        c2 = (hi0 ^ c3 ^ k1) & _MASK32
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@numba.njit(inline="always", cache=True)
def uniform_open(c0, c1, c2, c3, k0, k1):
    """53-bit uniform on the open interval (0, 1)."""
    w0, w1, _, _ = philox4x32(c0, c1, c2, c3, k0, k1)
    bits = (w0 << _S21) | (w1 >> _S11)
    return (np.float64(bits) + 0.5) * _TWO_M53


@numba.njit(inline="always", cache=True)
def coord_bits(d):
    return np.uint64(64 // d)


@numba.njit(inline="always", cache=True)
def encode_site(x, d):
    """Pack a lattice point into 64 bits (64 // d bits per coordinate)."""
    b = 64 // d
    key = np.uint64(0)
    for i in range(d):
        if b == 64:
            v = np.uint64(np.int64(x[i])) ^ np.uint64(0x8000000000000000)
        else:
            v = np.uint64(np.int64(x[i]) + (np.int64(1) << (b - 1)))
        key |= v << np.uint64(b * i)
    return key


@numba.njit(cache=True)
def _split_seed(seed):
    s = np.uint64(seed)
    return s & _MASK32, s >> _S32


@numba.njit(cache=True)
def site_uniform(seed, t, x, d, replica):
    k0, k1 = _split_seed(seed)
    key = encode_site(x, d)
    return uniform_open(key & _MASK32, key >> _S32, np.uint64(t),
                        np.uint64(replica), k0, k1)


@numba.njit(cache=True)
def block_uniforms(seed, tag, row0, rows, cols):
    """Uniforms for a ``rows x cols`` block starting at global row ``row0``."""
    k0, k1 = _split_seed(seed)
    out = np.empty((rows, cols))
    c3 = np.uint64(tag) | np.uint64(BLOCK_DOMAIN)
    for i in range(rows):
        r = np.uint64(row0 + i)
        rlo = r & _MASK32
        rhi = r >> _S32
        for j in range(cols):
            out[i, j] = uniform_open(np.uint64(j), rlo, rhi, c3, k0, k1)
    return out


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def site_uniforms(seed, t, coords, replica=0):
    """Uniforms for lattice sites ``coords`` (shape ``(m, d)``) at time ``t``."""
    coords = np.ascontiguousarray(coords, dtype=np.int64)
    seed = check_seed(seed)
    if not 0 <= replica < BLOCK_DOMAIN:
        raise ValueError("replica index must be below 2**31")
    return _site_uniforms(np.uint64(seed), t, coords, replica)


@numba.njit(cache=True)
def _site_uniforms(seed, t, coords, replica):
    m, d = coords.shape
    out = np.empty(m)
    for i in range(m):
        out[i] = site_uniform(seed, t, coords[i], d, replica)
    return out
