"""Small statistics helpers shared by the checkers and the Monte Carlo labs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LEVEL = 0.99
Z99 = float(special.ndtri(0.5 + LEVEL / 2))

# stabilization rule for "bounded as A -> infinity" on a finite grid
STABLE_FACTOR = 1.05
DIVERGE_FACTOR = 2.0


@dataclass
class Moments:
    """Running count / sum / sum of squares; merges are associative."""

    n: int = 0
    s1: float = 0.0
    s2: float = 0.0

    @classmethod
    def of(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(int(x.size), math.fsum(x.ravel()), math.fsum((x * x).ravel()))

    def merge(self, other: "Moments") -> "Moments":
        return Moments(self.n + other.n, self.s1 + other.s1, self.s2 + other.s2)

    @property
    def mean(self):
        return self.s1 / self.n if self.n else math.nan

    @property
    def var(self):
        if self.n < 2:
            return math.nan
        m = self.mean
        return max(self.s2 - self.n * m * m, 0.0) / (self.n - 1)

    @property
    def stderr(self):
        return math.sqrt(self.var / self.n) if self.n >= 2 else math.nan

    def ci(self, z=Z99):
        h = z * self.stderr
        return self.mean - h, self.mean + h


def mean_ci(x, z=Z99):
    """(mean, low, high, stderr) with a normal-approximation interval."""
    m = Moments.of(x)
    lo, hi = m.ci(z)
    return m.mean, lo, hi, m.stderr


def wilson(k, n, z=Z99):
    """Wilson score interval for a binomial proportion ``k / n``."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def ratio_ci(num, den, z=Z99):
    """Delta-method interval for ``mean(num) / mean(den)`` from paired samples."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = num.size
    a, b = num.mean(), den.mean()
    r = a / b
    if n < 2:
        return r, math.nan, math.nan
    resid = (num - r * den) / b
    se = resid.std(ddof=1) / math.sqrt(n)
    return r, r - z * se, r + z * se


def stabilization(values) -> tuple[str, dict]:
    """Classify a sequence along an increasing grid as bounded or diverging.

    Stable when the max over the last quartile is at most 1.05 times the max
    over the rest.  Diverging when the last-quartile max is at least twice the
    earlier max and the quarter maxima keep rising over the second half (this
    tolerates saw-tooth sequences whose peaks grow).  Anything else is
    INCONCLUSIVE.  Returns ``(verdict, details)``.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 4 or not np.all(np.isfinite(v)) or np.any(v < 0):
        return "INCONCLUSIVE", {"reason": "need at least 4 finite non-negative values"}
    q = max(1, int(math.ceil(v.size / 4)))
    head, tail = v[:-q], v[-q:]
    head_max, tail_max = float(head.max()), float(tail.max())
    qmax = np.array([float(c.max()) for c in np.array_split(v, 4)])
    growth = float(np.polyfit(np.arange(4), np.log(np.maximum(qmax, 1e-300)), 1)[0])
    details = {"head_max": head_max, "tail_max": tail_max, "quarter_max": qmax.tolist(),
               "log_growth_per_quarter": growth, "stable_factor": STABLE_FACTOR}
    if tail_max <= STABLE_FACTOR * head_max:
        return "PASS", details
    if tail_max >= DIVERGE_FACTOR * head_max and qmax[1] <= qmax[2] <= qmax[3]:
        return "FAIL", details
    return "INCONCLUSIVE", details
