"""Reachable space-time cone of the simple random walk.

At time ``t`` the walk started at the origin sits on
``{x in Z^d : |x|_1 <= t, |x|_1 = t mod 2}``.  Sites are listed in
lexicographic order; :func:`cone_index` inverts that listing.
"""

from functools import lru_cache
from math import comb

import numpy as np


def sphere_size(d, k):
    """Number of points of Z^d with |x|_1 == k."""
    if k == 0:
        return 1
    return sum(2 ** j * comb(d, j) * comb(k - 1, j - 1) for j in range(1, min(d, k) + 1))


def cone_size(d, t):
    return sum(sphere_size(d, k) for k in range(t % 2, t + 1, 2))


def total_cone_sites(d, horizon):
    return sum(cone_size(d, t) for t in range(1, horizon + 1))


def _lattice_ball(d, budget, parity):
    """Sorted points with |x|_1 <= budget and |x|_1 = parity (mod 2)."""
    if d == 1:
        m = budget if (budget - parity) % 2 == 0 else budget - 1
        if m < 0:
            return np.empty((0, 1), dtype=np.int64)
        # |x| = parity (mod 2) and |x| <= budget, so x runs over -m..m in steps of 2
        return np.arange(-m, m + 1, 2, dtype=np.int64)[:, None]
    parts = []
    for x0 in range(-budget, budget + 1):
        rest = _lattice_ball(d - 1, budget - abs(x0), (parity - abs(x0)) % 2)
        if len(rest):
            head = np.full((len(rest), 1), x0, dtype=np.int64)
            parts.append(np.hstack([head, rest]))
    if not parts:
        return np.empty((0, d), dtype=np.int64)
    return np.vstack(parts)


@lru_cache(maxsize=256)
def _cone_sites_cached(d, t):
    sites = _lattice_ball(d, t, t % 2)
    sites.setflags(write=False)
    return sites


def cone_sites(d, t):
    """Cone sites at time ``t`` as an ``(m, d)`` int array, lexicographically sorted."""
    return _cone_sites_cached(d, t)


@lru_cache(maxsize=256)
def _cone_keys(d, t):
    sites = cone_sites(d, t)
    base = 2 * t + 1
    return (sites + t) @ (base ** np.arange(d - 1, -1, -1, dtype=np.int64))


def cone_index(d, t, x):
    """Position of site ``x`` in :func:`cone_sites` (``KeyError`` if off the cone)."""
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    if np.abs(x).sum() > t or (np.abs(x).sum() - t) % 2:
        raise KeyError(f"{tuple(x)} is not on the time-{t} cone")
    base = 2 * t + 1
    key = int((x + t) @ (base ** np.arange(d - 1, -1, -1, dtype=np.int64)))
    return int(np.searchsorted(_cone_keys(d, t), key))
