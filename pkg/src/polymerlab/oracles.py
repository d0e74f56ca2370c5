"""Brute-force references for small instances.

Nothing here reuses the recursions of :mod:`polymer_core`: partition
functions are sums over explicit paths, expectations are sums over explicit
environment assignments.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np

from .env_model import EnvField, EnvironmentSpec, TwoPoint, log_mgf

__all__ = [
    "walk_steps", "enumerate_paths", "path_oracle", "martingale_enumeration",
    "second_moment_paths", "second_moment_environments", "convex_enumeration",
]


def walk_steps(d: int) -> np.ndarray:
    """The 2d unit steps of the simple random walk."""
    e = np.eye(d, dtype=np.int64)
    return np.concatenate([e, -e])


def enumerate_paths(d: int, n: int):
    """All (2d)^n walks of length n from the origin, shape ``(paths, n, d)``."""
    steps = walk_steps(d)
    choice = np.array(list(itertools.product(range(2 * d), repeat=n)), dtype=np.int64).reshape(-1, n)
    return np.cumsum(steps[choice], axis=1)


def path_oracle(field: EnvField, beta: float, n: int, lam: float | None = None):
    """``(W_n, {x: W_{n,x}}, {x: endpoint probability})`` by summing over paths."""
    lam = log_mgf(field.spec, beta) if lam is None else lam
    d = field.dim
    if n == 0:
        return 1.0, {(0,) * d: 1.0}, {(0,) * d: 1.0}
    paths = enumerate_paths(d, n)
    energy = np.zeros(len(paths))
    for t in range(1, n + 1):
        energy += np.array([field.value(t, x) for x in paths[:, t - 1]])
    weight = np.exp(beta * energy - n * lam) / (2 * d) ** n
    pinned = defaultdict(list)
    for x, w in zip(map(tuple, paths[:, -1].tolist()), weight):
        pinned[x].append(w)
    pinned = {x: math.fsum(v) for x, v in pinned.items()}
    W = math.fsum(weight)
    return W, pinned, {x: v / W for x, v in pinned.items()}


def _row_assignments(spec: TwoPoint, size: int):
    """All values of one row of ``size`` two-point sites with their probabilities."""
    bits = np.array(list(itertools.product((0, 1), repeat=size)), dtype=float).reshape(-1, size)
    vals = np.where(bits == 1, spec.v_high, spec.v_low)
    k = bits.sum(axis=1)
    prob = spec.p_high ** k * (1 - spec.p_high) ** (size - k)
    return vals, prob


def martingale_enumeration(spec: TwoPoint, beta: float, n: int):
    """Exact E[W_k] and the worst gap ``|E[W_k | F_{k-1}] - W_{k-1}|`` for d = 1, k <= n.

    Walks every environment assignment on the cone {|x| <= t, x = t mod 2},
    one row at a time.  Returns ``(means, max_gap)`` with ``means[k] = E[W_k]``.
    """
    if not isinstance(spec, TwoPoint):
        raise TypeError("exhaustive enumeration needs a two-point law")
    lam = log_mgf(spec, beta)
    means = np.zeros(n + 1)
    means[0] = 1.0
    gap = 0.0
    rows = {t: _row_assignments(spec, t + 1) for t in range(1, n + 1)}

    def walk(t, pinned, prob):
        nonlocal gap
        # pinned[i] = W_{t-1, x} at x = -(t-1) + 2i
        spread = np.zeros(t + 1)
        spread[:-1] += pinned / 2
        spread[1:] += pinned / 2
        vals, p_row = rows[t]
        w_next = spread * np.exp(beta * vals - lam)
        totals = w_next.sum(axis=1)
        cond = math.fsum(p_row * totals)
        prev = math.fsum(pinned)
        gap = max(gap, abs(cond - prev) / prev)
        means[t] += prob * cond
        if t < n:
            for w, p in zip(w_next, p_row):
                walk(t + 1, w, prob * p)

    if n >= 1:
        walk(1, np.ones(1), 1.0)
    return means, gap


def second_moment_paths(spec: EnvironmentSpec, beta: float, d: int, n: int) -> float:
    """E[W_n^2] as an average of exp(gamma * collisions) over pairs of walks."""
    gamma = log_mgf(spec, 2 * beta) - 2 * log_mgf(spec, beta)
    if n == 0:
        return 1.0
    pos = enumerate_paths(d, n)
    total = []
    for a in pos:
        hits = np.all(pos == a, axis=2).sum(axis=1)
        total.append(math.fsum(np.exp(gamma * hits)))
    return math.fsum(total) / len(pos) ** 2


def second_moment_environments(spec: TwoPoint, beta: float, n: int) -> float:
    """E[W_n^2] for d = 1 by summing over every two-point environment on the cone."""
    if n == 0:
        return 1.0
    lam = log_mgf(spec, beta)
    sizes = [t + 1 for t in range(1, n + 1)]
    vals, prob = _row_assignments(spec, sum(sizes))
    paths = enumerate_paths(1, n)[:, :, 0]
    # column of each (t, x) inside the flattened cone
    offsets = np.cumsum([0] + sizes[:-1])
    cols = np.stack([offsets[t] + (paths[:, t] + t + 1) // 2 for t in range(n)], axis=1)
    energy = vals[:, cols].sum(axis=2)
    W = np.exp(beta * energy - n * lam).mean(axis=1)
    return math.fsum(prob * W * W)


def convex_enumeration(y_values, y_probs, weights, A: float, p_grid=(1.0, 2.0)):
    """Exact overshoot quantities for S = sum_i alpha_i Y_i with finitely many atoms.

    Returns a dict with ``prob`` = P(S > A), per-p ``ratio`` = E[S^p | S > A]/A^p
    and its ``split`` over {N = 0} and {N >= 1}, and the moments of
    N = #{i : alpha_i Y_i > A}.
    """
    y_values = np.asarray(y_values, dtype=float)
    y_probs = np.asarray(y_probs, dtype=float)
    w = np.asarray(weights, dtype=float)
    m = w.size
    out_prob = 0.0
    acc = defaultdict(float)
    n_mom = defaultdict(float)
    for combo in itertools.product(range(y_values.size), repeat=m):
        y = y_values[list(combo)]
        pr = float(np.prod(y_probs[list(combo)]))
        ay = w * y
        s = math.fsum(ay)
        N = int(np.count_nonzero(ay > A))
        n_mom["E[N]"] += pr * N
        n_mom["E[N^2]"] += pr * N * N
        if N >= 1:
            n_mom["P(N>=1)"] += pr
            n_mom["sum_N_pos"] += pr * N
            n_mom["sum_N2_pos"] += pr * N * N
        if s > A:
            out_prob += pr
            for p in p_grid:
                part = "N>=1" if N >= 1 else "N=0"
                acc[p, part] += pr * (s / A) ** p
    res = {"prob": out_prob, "ratio": {}, "split": {}}
    for p in p_grid:
        parts = {k: acc[p, k] / out_prob if out_prob else math.nan for k in ("N=0", "N>=1")}
        res["split"][p] = parts
        res["ratio"][p] = parts["N=0"] + parts["N>=1"]
    pos = n_mom["P(N>=1)"]
    res["N"] = {"E[N]": n_mom["E[N]"], "E[N^2]": n_mom["E[N^2]"],
                "E[N|N>=1]": n_mom["sum_N_pos"] / pos if pos else math.nan,
                "E[N^2|N>=1]": n_mom["sum_N2_pos"] / pos if pos else math.nan}
    return res
