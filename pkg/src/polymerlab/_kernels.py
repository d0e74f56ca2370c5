"""Compiled forward recursion for W_n on a dense box, one replica per call.

Weights live on a flat array over the box ``[-ra, ra]^d`` with strides
``(2ra + 1)**i``.  Only cone sites inside the active window are touched;
everything else stays exactly zero.  With ``prune_tol > 0`` the window
follows the sites whose normalized weight exceeds ``prune_tol``.
"""

import math

import numba
import numpy as np

from . import rng


@numba.njit
def _strides(d, L):
    s = np.empty(d, dtype=np.int64)
    acc = 1
    for i in range(d):
        s[i] = acc
        acc *= L
    return s


@numba.njit
def _ball_count(d, r):
    """Points of Z^d with |x|_1 <= r (an upper bound for one cone slice)."""
    total = 0
    for k in range(r + 1):
        if k == 0:
            total += 1
            continue
        for j in range(1, min(d, k) + 1):
            cdj = 1
            for q in range(j):
                cdj = cdj * (d - q) // (q + 1)
            ck = 1
            for q in range(j - 1):
                ck = ck * (k - 1 - q) // (q + 1)
            total += (1 << j) * cdj * ck
    return total


@numba.njit
def _capacity(d, ra, horizon, exact):
    """Upper bound on the sites visited in one step with window radius ``ra``."""
    if exact:
        return _ball_count(d, ra)
    # pruned windows are sup-norm boxes cut by the cone |x|_1 <= t <= horizon
    return min(_ball_count(d, horizon), ((2 * ra + 1) ** d + 1) // 2)


@numba.njit
def _regrow(cur, d, ra_old, ra_new):
    """Re-embed a box array of radius ``ra_old`` into one of radius ``ra_new``."""
    L_old = 2 * ra_old + 1
    L_new = 2 * ra_new + 1
    out = np.zeros(L_new ** d)
    s_new = _strides(d, L_new)
    for j in range(L_old ** d):
        v = cur[j]
        if v == 0.0:
            continue
        rem = j
        idx = 0
        for i in range(d):
            c = rem % L_old - ra_old
            rem //= L_old
            idx += (c + ra_new) * s_new[i]
        out[idx] = v
    return out


@numba.njit
def _visit(d, t, r, strides, center, idx_buf, norm_buf, xs, key_lo, key_hi):
    """List cone sites at time ``t`` inside the box of radius ``r``.

    Writes flat indices, sup-norms, coordinates and RNG site keys; returns
    the count.
    """
    n = 0
    head = np.full(max(d - 1, 1), -r, dtype=np.int64)
    while True:
        s = 0
        ok = True
        for i in range(d - 1):
            s += abs(head[i])
        if s > t:
            ok = False
        if ok:
            rem = t - s
            m = min(rem, r)
            if (rem - m) % 2 == 1:
                m -= 1
            if m >= 0:
                base = center
                hnorm = 0
                for i in range(d - 1):
                    base += head[i] * strides[i]
                    hnorm = max(hnorm, abs(head[i]))
                for last in range(-m, m + 1, 2):
                    idx_buf[n] = base + last * strides[d - 1]
                    norm_buf[n] = max(hnorm, abs(last))
                    for i in range(d - 1):
                        xs[n, i] = head[i]
                    xs[n, d - 1] = last
                    key = rng.encode_site(xs[n], d)
                    key_lo[n] = key & np.uint64(0xFFFFFFFF)
                    key_hi[n] = key >> np.uint64(32)
                    n += 1
        # odometer over the first d - 1 coordinates
        if d == 1:
            break
        k = d - 2
        while k >= 0:
            head[k] += 1
            if head[k] <= r:
                break
            head[k] = -r
            k -= 1
        if k < 0:
            break
    return n


@numba.njit
def _uniform_pass(key_lo, key_hi, n, tt, c3, k0, k1, out):
    # kept free of branches so the Philox rounds vectorize
    for j in range(n):
        out[j] = rng.uniform_open(key_lo[j], key_hi[j], tt, c3, k0, k1)


@numba.njit
def trace_kernel(quantile, params, table, beta, lam, d, horizon, seed, replica, prune_tol):
    """Return ``(log_scale, mantissa)`` arrays of length ``horizon + 1``."""
    k0 = np.uint64(seed) & np.uint64(0xFFFFFFFF)
    k1 = np.uint64(seed) >> np.uint64(32)
    c3 = np.uint64(replica)
    exact = prune_tol <= 0.0
    ra = min(horizon, 16)
    # one ring of padding so neighbour reads never leave the array
    L = 2 * ra + 3
    strides = _strides(d, L)
    center = 0
    for i in range(d):
        center += (ra + 1) * strides[i]
    cur = np.zeros(L ** d)
    nxt = np.zeros(L ** d)
    cur[center] = 1.0
    cap = _capacity(d, ra, horizon, exact)
    idx_buf = np.empty(cap, dtype=np.int64)
    norm_buf = np.empty(cap, dtype=np.int64)
    g_buf = np.empty(cap)
    xs = np.empty((cap, d), dtype=np.int64)
    key_lo = np.empty(cap, dtype=np.uint64)
    key_hi = np.empty(cap, dtype=np.uint64)
    u_buf = np.empty(cap)

    log_scale = np.zeros(horizon + 1)
    mant = np.ones(horizon + 1)
    r_act = 0
    acc = 0.0
    prev_max = 1.0
    for t in range(1, horizon + 1):
        r_new = min(t, r_act + 1)
        if r_new > ra:
            ra_new = min(horizon, max(2 * ra, r_new))
            cur = _regrow(cur, d, ra + 1, ra_new + 1)
            ra = ra_new
            L = 2 * ra + 3
            strides = _strides(d, L)
            center = 0
            for i in range(d):
                center += (ra + 1) * strides[i]
            nxt = np.zeros(L ** d)
            cap = _capacity(d, ra, horizon, exact)
            idx_buf = np.empty(cap, dtype=np.int64)
            norm_buf = np.empty(cap, dtype=np.int64)
            g_buf = np.empty(cap)
            xs = np.empty((cap, d), dtype=np.int64)
            key_lo = np.empty(cap, dtype=np.uint64)
            key_hi = np.empty(cap, dtype=np.uint64)
            u_buf = np.empty(cap)
        n = _visit(d, t, r_new, strides, center, idx_buf, norm_buf, xs, key_lo, key_hi)
        _uniform_pass(key_lo, key_hi, n, np.uint64(t), c3, k0, k1, u_buf)
        quantile(params, table, u_buf, g_buf, n)
        for j in range(n):
            g_buf[j] = beta * g_buf[j] - lam
        # cur holds the previous step unnormalized (max == prev_max)
        inv_prev = 1.0 / prev_max
        gmax = -np.inf
        if exact:
            # off-cone entries of cur are exactly zero, so no window test
            for j in range(n):
                idx = idx_buf[j]
                s = 0.0
                for i in range(d):
                    s += cur[idx - strides[i]] + cur[idx + strides[i]]
                s *= inv_prev
                g = g_buf[j]
                nxt[idx] = s
                if s > 0.0 and g > gmax:
                    gmax = g
        else:
            for j in range(n):
                idx = idx_buf[j]
                s = 0.0
                for i in range(d):
                    c = xs[j, i]
                    if c - 1 >= -r_act:
                        s += cur[idx - strides[i]]
                    if c + 1 <= r_act:
                        s += cur[idx + strides[i]]
                s *= inv_prev
                g = g_buf[j]
                nxt[idx] = s
                if s > 0.0 and g > gmax:
                    gmax = g
        wmax = 0.0
        total = 0.0
        for j in range(n):
            idx = idx_buf[j]
            w = nxt[idx]
            if w > 0.0:
                w *= math.exp(g_buf[j] - gmax)
                nxt[idx] = w
                total += w
                if w > wmax:
                    wmax = w
        r_next = t
        if not exact:
            cut = prune_tol * wmax
            r_next = 0
            for j in range(n):
                if nxt[idx_buf[j]] > cut and norm_buf[j] > r_next:
                    r_next = norm_buf[j]
        acc += gmax + math.log(wmax) - math.log(2.0 * d)
        log_scale[t] = acc
        mant[t] = total / wmax
        prev_max = wmax
        r_act = t if exact else min(r_new, r_next)
        cur, nxt = nxt, cur
    return log_scale, mant
