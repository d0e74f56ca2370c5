"""Normalized partition function of the directed polymer.

For a walk started at the origin and an environment ``omega``,

    W_{n,x} = E[exp(sum_{t<=n} beta*omega_{t,X_t} - lambda(beta)); X_n = x],
    W_n = sum_x W_{n,x}.

Values are carried as ``(log_scale, mantissa)`` so that unbounded
environments neither overflow nor underflow.  Two independent routes are
provided: a small numpy recursion on :class:`PartitionState` (used for
exact checks and the Markov decomposition) and a compiled streaming kernel
used by :func:`run_trace` for Monte Carlo.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from . import rng
from ._kernels import trace_kernel
from .cone import cone_sites
from .env_model import QUANTILE_BATCH, EnvField, EnvironmentSpec, log_mgf

__all__ = [
    "PartitionState", "MartingaleTrace", "Decomposition",
    "evolve", "total", "endpoint_measure", "one_step_measure", "states_along",
    "run_trace", "trace_from_field", "stopping_time", "decompose_at",
    "collision_probabilities", "second_moment_curve", "second_moment_exact",
    "write_trace_csv", "write_field_csv",
]


@dataclass(frozen=True, eq=False)
class PartitionState:
    """Pinned weights at time ``time`` on the box ``[-time, time]^dim``.

    ``weights * exp(log_scale)`` equals ``W_{time, x}``; off-cone entries are 0.
    """

    time: int
    dim: int
    log_scale: float
    weights: np.ndarray = dc_field(repr=False)

    @classmethod
    def initial(cls, dim: int) -> "PartitionState":
        return cls(0, dim, 0.0, np.ones((1,) * dim))

    @property
    def radius(self):
        return (self.weights.shape[0] - 1) // 2

    def cone_weights(self):
        """Mantissas at ``cone_sites(dim, time)``, in that order."""
        idx = tuple((cone_sites(self.dim, self.time) + self.radius).T)
        return self.weights[idx]

    def pinned(self, x):
        """W_{time, x} as a float."""
        x = np.asarray(x, dtype=int).reshape(-1)
        if np.abs(x).max(initial=0) > self.radius:
            return 0.0
        return float(self.weights[tuple(x + self.radius)] * math.exp(self.log_scale))


def _spread(w, d):
    """Sum over nearest neighbours: radius r -> r + 1 on the last ``d`` axes."""
    lead = w.ndim - d
    out = np.zeros(w.shape[:lead] + tuple(s + 2 for s in w.shape[lead:]))
    inner = [slice(1, -1)] * d
    for a in range(d):
        for sl in (slice(2, None), slice(0, -2)):
            idx = list(inner)
            idx[a] = sl
            out[(Ellipsis, *idx)] += w
    return out


def _tilt(s, g, d):
    """Multiply neighbour sums by exp(g) and renormalize each leading slice to max 1."""
    axes = tuple(range(s.ndim - d, s.ndim))
    gmask = np.where(s > 0, g, -np.inf)
    gmax = gmask.max(axis=axes, keepdims=True)
    w = np.where(s > 0, s * np.exp(np.where(s > 0, g - gmax, 0.0)), 0.0)
    wmax = w.max(axis=axes, keepdims=True)
    w = w / wmax
    return w, np.squeeze(gmax + np.log(wmax), axis=axes)


def evolve(state: PartitionState, env_row: np.ndarray, beta: float, lam: float) -> PartitionState:
    """One step of the pinned recursion.

    ``env_row`` holds omega at time ``state.time + 1`` on the box of radius
    ``state.time + 1`` (as produced by :meth:`EnvField.dense_row`).
    """
    d = state.dim
    expected = (2 * state.time + 3,) * d
    env_row = np.asarray(env_row, dtype=float)
    if env_row.shape != expected:
        raise ValueError(f"env_row has shape {env_row.shape}, expected {expected}")
    s = _spread(state.weights, d)
    w, shift = _tilt(s, beta * env_row - lam, d)
    return PartitionState(state.time + 1, d, state.log_scale + float(shift) - math.log(2 * d), w)


def total(state: PartitionState) -> tuple[float, float]:
    """``(log_scale, mantissa)`` with ``W_n = mantissa * exp(log_scale)``."""
    return state.log_scale, math.fsum(state.weights.ravel())


def endpoint_measure(state: PartitionState) -> np.ndarray:
    """Polymer endpoint law ``W_{n,x} / W_n`` over ``cone_sites(dim, n)``."""
    w = state.cone_weights()
    s = math.fsum(w)
    if not s > 0:
        raise ValueError("degenerate state: all weights vanish")
    return w / s


def one_step_measure(state: PartitionState) -> np.ndarray:
    """Law of X_{n+1} under the time-n polymer measure, over ``cone_sites(dim, n + 1)``.

    This is the endpoint law pushed through one unweighted walk step.
    """
    d = state.dim
    s = _spread(state.weights, d)
    s = s / math.fsum(s.ravel())
    idx = tuple((cone_sites(d, state.time + 1) + state.time + 1).T)
    return s[idx]


def states_along(field: EnvField, beta: float, lam: float, upto: int | None = None):
    """Yield the states at times 0, 1, ..., ``upto`` on a sampled field."""
    upto = field.horizon if upto is None else upto
    state = PartitionState.initial(field.dim)
    yield state
    for t in range(1, upto + 1):
        state = evolve(state, field.dense_row(t), beta, lam)
        yield state


@dataclass(frozen=True, eq=False)
class MartingaleTrace:
    """W_0, ..., W_n for one environment, as ``(log_scale, mantissa)`` pairs."""

    beta: float
    log_scale: np.ndarray
    mantissa: np.ndarray
    field_seed: int = 0
    replica: int = 0
    dim: int = 1

    @property
    def horizon(self):
        return len(self.log_scale) - 1

    @property
    def values(self):
        return list(zip(self.log_scale.tolist(), self.mantissa.tolist()))

    @property
    def log_w(self):
        return self.log_scale + np.log(self.mantissa)

    @property
    def w(self):
        return np.exp(self.log_w)

    def __len__(self):
        return len(self.log_scale)

    def __eq__(self, other):
        return (isinstance(other, MartingaleTrace)
                and np.array_equal(self.log_scale, other.log_scale)
                and np.array_equal(self.mantissa, other.mantissa))

    __hash__ = None


def run_trace(spec: EnvironmentSpec, beta: float, dim: int, horizon: int, seed: int,
              replica: int = 0, prune_tol: float = 0.0) -> MartingaleTrace:
    """Stream the environment row by row and record W_t for t = 0..horizon.

    ``prune_tol > 0`` restricts the recursion to the box holding all sites with
    normalized weight above ``prune_tol``; ``0`` keeps the full cone (exact).
    """
    if dim not in (1, 2, 3, 4):
        raise ValueError(f"dim must be in 1..4, got {dim}")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    seed = rng.check_seed(seed)
    lam = log_mgf(spec, beta)
    ls, m = trace_kernel(QUANTILE_BATCH[spec._code], spec.kernel_params(), spec.kernel_table(),
                         float(beta), lam, dim, horizon, np.uint64(seed), replica, float(prune_tol))
    return MartingaleTrace(beta, ls, m, seed, replica, dim)


def trace_from_field(field: EnvField, beta: float, lam: float | None = None) -> MartingaleTrace:
    """Trace computed with :func:`evolve` on a stored field (independent of the kernel)."""
    lam = log_mgf(field.spec, beta) if lam is None else lam
    pairs = [total(s) for s in states_along(field, beta, lam)]
    ls, m = map(np.array, zip(*pairs))
    return MartingaleTrace(beta, ls, m, field.seed, field.replica, field.dim)


def stopping_time(trace, t: float):
    """First n >= 1 with W_n >= t, or ``None`` if the trace never gets there."""
    if not t > 1:
        raise ValueError(f"threshold must exceed 1, got {t}")
    if isinstance(trace, MartingaleTrace):
        hit = trace.log_w[1:] >= math.log(t)
    else:
        hit = np.asarray(trace, dtype=float)[1:] >= t
    idx = np.flatnonzero(hit)
    return int(idx[0]) + 1 if idx.size else None


class Decomposition(NamedTuple):
    lhs: float
    rhs: float
    log_lhs: float
    log_rhs: float


def _restarted_logs(field: EnvField, starts: np.ndarray, k: int, n: int, beta: float, lam: float):
    """log of W_{n-k} in the environment shifted to (k, x) for every row x of ``starts``."""
    d = field.dim
    m = len(starts)
    logs = np.zeros(m)
    w = np.ones((m,) + (1,) * d)
    for s in range(1, n - k + 1):
        t = k + s
        row = field.dense_row(t)
        # local offsets y in [-s, s]^d, global site = start + y (offset into the radius-t box)
        grids = np.meshgrid(*([np.arange(-s, s + 1)] * d), indexing="ij")
        gidx = [starts[:, a].reshape((m,) + (1,) * d) + grids[a] + t for a in range(d)]
        omega = row[tuple(np.clip(g, 0, 2 * t) for g in gidx)]
        spread = _spread(w, d)
        w, shift = _tilt(spread, beta * omega - lam, d)
        logs += shift - math.log(2 * d)
    return logs + np.log(w.reshape(m, -1).sum(axis=1))


def decompose_at(field: EnvField, k: int, n: int, beta: float, lam: float) -> Decomposition:
    """Both sides of the Markov decomposition of W_n at time k on one realization.

    ``rhs = sum_x W_{k,x} * (W_{n-k} o shift_{k,x})`` where the second factor is
    recomputed from scratch in the environment seen from ``(k, x)``.
    """
    if not 0 <= k <= n <= field.horizon:
        raise ValueError(f"need 0 <= k <= n <= horizon, got k={k}, n={n}")
    states = list(states_along(field, beta, lam, upto=n))
    ls_n, m_n = total(states[n])
    log_lhs = ls_n + math.log(m_n)
    sk = states[k]
    starts = cone_sites(field.dim, k)
    pinned_logs = sk.log_scale + np.log(sk.cone_weights())
    log_rhs = float(logsumexp(pinned_logs + _restarted_logs(field, starts, k, n, beta, lam)))
    return Decomposition(math.exp(log_lhs), math.exp(log_rhs), log_lhs, log_rhs)


# ---------------------------------------------------------------- second moment

def collision_probabilities(dim: int, n: int) -> np.ndarray:
    """u_k = P(X_k = X'_k) for two independent walks, k = 0..n (exact rationals, rounded once).

    Equals P(S_{2k} = 0) = C(2k, k) * M_d(k) / (2d)^{2k} with M_d(k) the sum of
    squared multinomial coefficients over compositions of k into d parts.
    """
    M = [1] * (n + 1)
    for _ in range(dim - 1):
        M = [sum(math.comb(k, i) ** 2 * M[k - i] for i in range(k + 1)) for k in range(n + 1)]
    return np.array([math.comb(2 * k, k) * M[k] / (2 * dim) ** (2 * k) for k in range(n + 1)])


def second_moment_curve(spec: EnvironmentSpec, beta: float, dim: int, n: int) -> np.ndarray:
    """E[W_t^2] for t = 0..n from the two-replica collision identity.

    E[W_t^2] = E[prod_{s<=t} (1 + c 1{X_s = X'_s})] with c = exp(gamma) - 1,
    gamma = lambda(2 beta) - 2 lambda(beta).  Expanding the product over the
    set of collision times gives a renewal sum with only positive terms.
    """
    if 2 * beta > spec.beta_max:
        raise ValueError(f"2*beta={2 * beta} exceeds beta_max={spec.beta_max}")
    gamma = log_mgf(spec, 2 * beta) - 2 * log_mgf(spec, beta)
    c = math.expm1(gamma)
    u = collision_probabilities(dim, n)
    g = np.zeros(n + 1)
    g[0] = 1.0
    for s in range(1, n + 1):
        g[s] = c * np.dot(u[1:s + 1], g[s - 1::-1])
    return np.cumsum(g)


def second_moment_exact(spec: EnvironmentSpec, beta: float, dim: int, n: int) -> float:
    return float(second_moment_curve(spec, beta, dim, n)[-1])


# ---------------------------------------------------------------- export

def write_trace_csv(trace: MartingaleTrace, path, header_comment: str | None = None):
    """Columns ``n, log_W, W_mantissa`` with W_n = W_mantissa * exp(log_W)."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "log_W", "W_mantissa"])
        for i, (ls, m) in enumerate(trace.values):
            out.writerow([i, repr(ls), repr(m)])


def write_field_csv(field: EnvField, path, header_comment: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["t", *[f"x{i}" for i in range(field.dim)], "omega"])
        for t in range(1, field.horizon + 1):
            for x, w in zip(field.sites(t), field.rows[t - 1]):
                out.writerow([t, *x.tolist(), repr(float(w))])
