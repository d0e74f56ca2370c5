"""Monte Carlo experiments on overshoots of convex combinations and of W_n.

Convex combinations ``S = sum_i alpha_i Y_i`` with ``Y = exp(beta*omega - lambda)``
are drawn in row blocks from the counter-based stream, so a run is fixed by
``(spec, beta, weights, seed, tag)`` and does not depend on chunking.  The
polymer experiments run one trace per replica; replica ``r`` always sees the
environment of stream ``r``, which keeps results identical for any worker count.
"""

from __future__ import annotations

import csv
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import stats
from .env_model import EnvironmentSpec, log_mgf, sample_block, sample_field
from .polymer_core import (one_step_measure, run_trace, second_moment_curve, states_along,
                           stopping_time)

__all__ = [
    "Estimate", "NMoments", "OvershootStats", "NoHitsError",
    "count_exceedances", "exceedance_table", "exceedance_moments",
    "simulate_convex_overshoot", "OvershootExperiment", "martingale_overshoot_experiment",
    "MomentTable", "moment_trace", "map_replicas",
    "write_overshoot_csv", "write_moment_csv",
]

SLACK = 3.0          # CI half-widths of slack before a bound counts as violated
MIN_HITS = 100
_CELLS = 1 << 22     # draws per block


class NoHitsError(ValueError):
    """Raised when a conditional estimate has no conditioning event to average over."""


@dataclass(frozen=True)
class Estimate:
    value: float
    ci_low: float
    ci_high: float
    n: int

    @classmethod
    def from_moments(cls, m: stats.Moments):
        lo, hi = m.ci() if m.n >= 2 else (math.nan, math.nan)
        return cls(m.mean, lo, hi, m.n)

    @property
    def half_width(self):
        return 0.5 * (self.ci_high - self.ci_low)


def _weights(w):
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0 or np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
        raise ValueError("weights must be a non-empty probability vector (sum 1 within 1e-12)")
    return w


def count_exceedances(weights, samples, A: float) -> int:
    """Number of indices with ``alpha_i * Y_i > A``."""
    w = np.asarray(weights, dtype=float).ravel()
    y = np.asarray(samples, dtype=float).ravel()
    if w.shape != y.shape:
        raise ValueError(f"weights and samples differ in length ({w.size} vs {y.size})")
    return int(np.count_nonzero(w * y > A))


def _y_blocks(spec, beta, w, replicas, seed, tag):
    lam = log_mgf(spec, beta)
    step = max(1, _CELLS // w.size)
    for row0 in range(0, replicas, step):
        rows = min(step, replicas - row0)
        yield np.exp(beta * sample_block(spec, seed, tag, row0, rows, w.size) - lam)


# ---------------------------------------------------------------- exceedance counts

@dataclass(frozen=True)
class NMoments:
    """Moments of the exceedance count N at one level A."""

    A: float
    replicas: int
    seed: int
    hits: int                      # replicas with N >= 1
    mean_N: Estimate
    mean_N2: Estimate
    mean_N_given: Estimate         # E[N | N >= 1]
    mean_N2_given: Estimate        # E[N^2 | N >= 1]
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(c["ok"] for c in self.checks.values())


def _n_checks(A, m1, m2, c1, c2):
    """Markov bounds for the unconditional moments and the conditional bounds 2 and 5."""
    bounds = {"E[N]": (m1, 1.0 / A), "E[N^2]": (m2, 1.0 / A + 1.0 / A ** 2),
              "E[N|N>=1]": (c1, 2.0), "E[N^2|N>=1]": (c2, 5.0)}
    out = {}
    for name, (est, bound) in bounds.items():
        slack = SLACK * est.half_width if est.n >= 2 else 0.0
        out[name] = {"estimate": est.value, "bound": bound, "slack": slack,
                     "ok": bool(est.value <= bound + slack)}
    return out


def exceedance_table(spec: EnvironmentSpec, beta: float, weights, A_grid, replicas: int,
                     seed: int, tag: int = 0) -> list[NMoments]:
    """:func:`exceedance_moments` for several levels on one set of draws."""
    w = _weights(weights)
    A_grid = [float(a) for a in np.atleast_1d(A_grid)]
    if min(A_grid) < 1:
        raise ValueError("exceedance bounds need A >= 1")
    acc = {a: [stats.Moments() for _ in range(4)] for a in A_grid}
    for y in _y_blocks(spec, beta, w, replicas, seed, tag):
        ay = y * w
        for a in A_grid:
            n = np.count_nonzero(ay > a, axis=1).astype(float)
            pos = n[n >= 1]
            parts = (n, n * n, pos, pos * pos)
            acc[a] = [m.merge(stats.Moments.of(x)) for m, x in zip(acc[a], parts)]
    out = []
    for a in A_grid:
        m1, m2, c1, c2 = (Estimate.from_moments(m) for m in acc[a])
        out.append(NMoments(a, replicas, seed, c1.n, m1, m2, c1, c2, _n_checks(a, m1, m2, c1, c2)))
    return out


def exceedance_moments(spec: EnvironmentSpec, beta: float, weights, A: float, replicas: int,
                       seed: int, tag: int = 0) -> NMoments:
    """Monte Carlo moments of ``N = #{i : alpha_i Y_i > A}`` with their bound checks.

    Raises
    ------
    NoHitsError
        If no replica has ``N >= 1``.
    """
    res = exceedance_table(spec, beta, weights, [A], replicas, seed, tag)[0]
    if res.hits == 0:
        raise NoHitsError(f"no replica with N >= 1 at A={A}")
    return res


# ---------------------------------------------------------------- convex overshoot

@dataclass(frozen=True)
class OvershootStats:
    A: float
    p: float
    conditioning_prob: Estimate    # Wilson interval
    ratio: Estimate                # E[S^p | S > A] / A^p
    split: dict                    # {"N=0": ..., "N>=1": ...}, conditional on S > A
    N_moments: NMoments
    replicas: int
    seed: int
    truncation_checked: int = 0
    truncation_violations: int = 0
    verdict: str = "PASS"

    @property
    def split_gap(self):
        """|sum of split parts - ratio| relative to the ratio."""
        tot = math.fsum(self.split.values())
        return abs(tot - self.ratio.value) / self.ratio.value


def _truncation_violations(ay, s, A):
    """Rows with S > A whose small-summand partial sum up to the first passage exceeds 2A."""
    rows = ay[s > A]
    if rows.size == 0:
        return 0, 0
    c = np.cumsum(rows, axis=1)
    tau = np.argmax(c > A, axis=1)
    small = np.cumsum(np.where(rows <= A, rows, 0.0), axis=1)
    trunc = small[np.arange(rows.shape[0]), tau]
    return rows.shape[0], int(np.count_nonzero(trunc > 2 * A))


def simulate_convex_overshoot(spec: EnvironmentSpec, beta: float, weights, p_grid=(1.0, 1.5, 2.0),
                              A_grid=(1.0, 2.0), replicas: int = 100_000, seed: int = 0,
                              tag: int = 0) -> list[OvershootStats]:
    """Conditional overshoot ``E[S^p | S > A] / A^p`` with its N = 0 / N >= 1 split.

    Every conditioned sample is also checked against the truncation bound
    ``sum_{i <= tau} alpha_i Y_i 1{alpha_i Y_i <= A} <= 2A`` where ``tau`` is the
    first index at which the partial sum passes ``A``.

    Returns one :class:`OvershootStats` per ``(A, p)``; cells with fewer than
    100 conditioned samples are marked INCONCLUSIVE.
    """
    w = _weights(weights)
    A_grid = [float(a) for a in np.atleast_1d(A_grid)]
    p_grid = [float(p) for p in np.atleast_1d(p_grid)]
    if min(A_grid) < 1:
        raise ValueError("A must be >= 1")
    # per (A, p): moments of (S/A)^p 1{S>A} split by N, and of the conditioned ratio
    ratio = {(a, p): stats.Moments() for a in A_grid for p in p_grid}
    part0 = {(a, p): [] for a in A_grid for p in p_grid}
    part1 = {(a, p): [] for a in A_grid for p in p_grid}
    hits = dict.fromkeys(A_grid, 0)
    checked = dict.fromkeys(A_grid, 0)
    bad = dict.fromkeys(A_grid, 0)
    for y in _y_blocks(spec, beta, w, replicas, seed, tag):
        ay = y * w
        s = ay.sum(axis=1)
        for a in A_grid:
            cond = s > a
            hits[a] += int(cond.sum())
            n_pos = np.count_nonzero(ay[cond] > a, axis=1) >= 1
            c, v = _truncation_violations(ay, s, a)
            checked[a] += c
            bad[a] += v
            for p in p_grid:
                x = (s[cond] / a) ** p
                ratio[a, p] = ratio[a, p].merge(stats.Moments.of(x))
                part0[a, p].append(math.fsum(x[~n_pos]))
                part1[a, p].append(math.fsum(x[n_pos]))
    nmom = {m.A: m for m in exceedance_table(spec, beta, w, A_grid, replicas, seed, tag)}
    out = []
    for a in A_grid:
        plo, phi = stats.wilson(hits[a], replicas)
        prob = Estimate(hits[a] / replicas, plo, phi, replicas)
        for p in p_grid:
            r = Estimate.from_moments(ratio[a, p])
            if hits[a]:
                split = {"N=0": math.fsum(part0[a, p]) / hits[a],
                         "N>=1": math.fsum(part1[a, p]) / hits[a]}
            else:
                split = {"N=0": math.nan, "N>=1": math.nan}
            verdict = "PASS" if hits[a] >= MIN_HITS else "INCONCLUSIVE"
            out.append(OvershootStats(a, p, prob, r, split, nmom[a], replicas, seed,
                                      checked[a], bad[a], verdict))
    return out


# ---------------------------------------------------------------- replica pool

def _pool_context():
    methods = multiprocessing.get_all_start_methods()
    return multiprocessing.get_context("fork" if "fork" in methods else "spawn")


def map_replicas(fn, args: tuple, replicas: int, workers: int = 1, chunks_per_worker: int = 4):
    """Evaluate ``fn(*args, start, stop)`` over contiguous replica ranges.

    Results come back in range order whatever the completion order, so
    concatenating them gives the same arrays for any ``workers``.
    """
    workers = max(1, int(workers))
    if workers == 1 or replicas < 2:
        return [fn(*args, 0, replicas)]
    n_chunks = min(replicas, workers * chunks_per_worker)
    edges = np.linspace(0, replicas, n_chunks + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers, mp_context=_pool_context()) as pool:
        futs = [pool.submit(fn, *args, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        return [f.result() for f in futs]


# ---------------------------------------------------------------- stopped martingale

def _stop_records(spec, beta, dim, horizon, seed, t_grid, prune_tol, deadline, start, stop):
    """Per replica and threshold: (tau, log W_tau, log W_{tau-1}); tau = -1 if not hit."""
    t_grid = np.asarray(t_grid, dtype=float)
    n = stop - start
    tau = np.full((n, t_grid.size), -1, dtype=np.int64)
    log_wt = np.full((n, t_grid.size), np.nan)
    log_prev = np.full((n, t_grid.size), np.nan)
    done = np.zeros(n, dtype=bool)
    for i, r in enumerate(range(start, stop)):
        if deadline is not None and time.time() > deadline:
            break
        lw = run_trace(spec, beta, dim, horizon, seed, replica=r, prune_tol=prune_tol).log_w
        for j, t in enumerate(t_grid):
            k = stopping_time(np.exp(lw), t)
            if k is not None:
                tau[i, j] = k
                log_wt[i, j] = lw[k]
                log_prev[i, j] = lw[k - 1]
        done[i] = True
    return tau, log_wt, log_prev, done


@dataclass
class OvershootExperiment:
    """Tables of ``E[W_k^p 1{tau(t)=k}] / (t^p P(tau(t)=k))`` and their aggregates."""

    rows: list            # (t, p, k, ratio, ci_low, ci_high, hits)
    aggregate: list       # (t, p, ratio, ci_low, ci_high, hits)
    split: list           # dicts per (t, p) for the threshold A3 * t
    verdict: str
    details: dict
    completed: int
    replicas: int
    seed: int
    bookkeeping_gap: float
    identity_gap: float
    aborted: bool = False

    @property
    def max_ratio(self):
        vals = [r[2] for r in self.aggregate if r[5] > 0]
        return max(vals) if vals else math.nan


def _identity_gap(spec, beta, dim, seed, tau, log_wt, log_prev, t_idx, max_checks, max_k):
    """Recompute W_tau / W_{tau-1} as sum_x alpha_x Y_x on stored fields."""
    lam = log_mgf(spec, beta)
    worst = 0.0
    count = 0
    for r in range(tau.shape[0]):
        k = int(tau[r, t_idx])
        if k < 1 or k > max_k:
            continue
        fld = sample_field(spec, dim, k, seed, replica=r)
        state = None
        for state in states_along(fld, beta, lam, upto=k - 1):
            pass
        alpha = one_step_measure(state)
        y = np.exp(beta * fld.rows[k - 1] - lam)
        direct = math.fsum(alpha * y)
        dp = math.exp(log_wt[r, t_idx] - log_prev[r, t_idx])
        worst = max(worst, abs(direct - dp) / dp)
        count += 1
        if count >= max_checks:
            break
    return worst, count


def martingale_overshoot_experiment(spec: EnvironmentSpec, beta: float, dim: int, t_grid=(2, 4, 8, 16),
                                    p_grid=(1.0, 1.5, 2.0), horizon: int = 200, replicas: int = 10_000,
                                    seed: int = 0, A3: float | None = None, c3: float | None = None,
                                    workers: int = 1, deadline: float | None = None,
                                    prune_tol: float = 0.0, identity_checks: int = 8,
                                    identity_max_k: int = 12) -> OvershootExperiment:
    """Stop each replica at ``tau(t)`` and tabulate the normalized overshoot.

    ``deadline`` is a wall-clock budget in seconds; replicas not reached in
    time are dropped and the result is flagged ``aborted``.  With ``A3`` the
    hits are split at ``W_k <= A3 t`` (bounded by ``A3^p``) and ``W_k > A3 t``
    (compared with ``c3 A3^2`` and ``c3 A3^p``).  Verdict: per ``p``, the
    aggregated ratio along increasing ``t`` goes through
    :func:`stats.stabilization`; all PASS gives PASS, any FAIL gives FAIL.
    """
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    p_grid = [float(p) for p in p_grid]
    if t_grid[0] <= 1:
        raise ValueError("thresholds must exceed 1")
    if min(p_grid) < 1 or max(p_grid) > 2:
        raise ValueError("p must lie in [1, 2]")
    stop_at = None if deadline is None else time.time() + deadline
    parts = map_replicas(_stop_records, (spec, beta, dim, horizon, seed, tuple(t_grid), prune_tol, stop_at),
                         replicas, workers)
    tau, log_wt, log_prev, done = (np.concatenate(x) for x in zip(*parts))
    tau, log_wt, log_prev = tau[done], log_wt[done], log_prev[done]
    R = int(done.sum())
    aborted = R < replicas

    rows, agg, split = [], [], []
    book_gap = 0.0
    for j, t in enumerate(t_grid):
        hit = tau[:, j] >= 1
        for p in p_grid:
            x = np.exp(p * (log_wt[hit, j] - math.log(t)))
            agg.append((float(t), p, *_est_row(x)))
            for k in np.unique(tau[hit, j]):
                sel = tau[:, j] == k
                xk = np.exp(p * (log_wt[sel, j] - math.log(t)))
                est = _est_row(xk)
                rows.append((float(t), p, int(k), *est))
                direct = math.fsum(np.exp(p * log_wt[sel, j])) / R
                recon = (sel.sum() / R) * est[0] * t ** p
                book_gap = max(book_gap, abs(direct - recon) / direct)
            if A3 is not None:
                split.append(_split_row(t, p, log_wt[hit, j], A3, c3))

    verdicts, det = [], {}
    for p in p_grid:
        seq = [r[2] for r in agg if r[1] == p]
        if any(r[5] == 0 for r in agg if r[1] == p):
            verdicts.append("INCONCLUSIVE")
            det[p] = {"reason": "some threshold never reached"}
            continue
        v, d = stats.stabilization(seq)
        verdicts.append(v)
        det[p] = d
    if aborted:
        verdict = "FAIL"
    elif "FAIL" in verdicts:
        verdict = "FAIL"
    elif all(v == "PASS" for v in verdicts):
        verdict = "PASS"
    else:
        verdict = "INCONCLUSIVE"
    gap, n_id = (0.0, 0)
    if R and identity_checks:
        gap, n_id = _identity_gap(spec, beta, dim, seed, tau, log_wt, log_prev, 0,
                                  identity_checks, identity_max_k)
    details = {"stabilization": det, "identity_checks": n_id, "aborted": aborted,
               "horizon": horizon, "dim": dim, "beta": beta}
    return OvershootExperiment(rows, agg, split, verdict, details, R, replicas, seed,
                               book_gap, gap, aborted)


def _est_row(x):
    if x.size == 0:
        return (math.nan, math.nan, math.nan, 0)
    e = Estimate.from_moments(stats.Moments.of(x))
    return (e.value, e.ci_low, e.ci_high, int(x.size))


def _split_row(t, p, log_w, A3, c3):
    big = log_w > math.log(A3 * t)
    x = np.exp(p * (log_w - math.log(t)))
    n = x.size
    first = x[~big]
    second = x[big]
    row = {"t": float(t), "p": p, "A3": A3, "hits": n,
           "frac_first": first.size / n if n else math.nan,
           "first_ratio": float(first.mean()) if first.size else math.nan,
           "first_bound": A3 ** p,
           "second_hits": int(second.size),
           "second_ratio": float(second.mean()) if second.size else math.nan}
    if c3 is not None:
        row["second_bound_A3sq"] = c3 * A3 ** 2
        row["second_bound_A3p"] = c3 * A3 ** p
    return row


# ---------------------------------------------------------------- moments along n

def _moment_records(spec, beta, dim, n_max, n_grid, seed, prune_tol, start, stop):
    out = np.empty((stop - start, len(n_grid)))
    idx = np.asarray(n_grid)
    for i, r in enumerate(range(start, stop)):
        out[i] = run_trace(spec, beta, dim, n_max, seed, replica=r, prune_tol=prune_tol).log_w[idx]
    return out


@dataclass
class MomentTable:
    """Rows ``(n, p, estimate, ci_low, ci_high, exact_if_p2, stderr)``."""

    rows: list
    flags: dict           # p -> "plateau" | "growth" | "unclear"
    replicas: int
    seed: int

    def z_scores(self):
        """(estimate - exact) / stderr for the p = 2 rows that carry an exact value."""
        return [(r[0], (r[2] - r[5]) / r[6]) for r in self.rows
                if r[1] == 2.0 and not math.isnan(r[5]) and r[6] > 0]


def moment_trace(spec: EnvironmentSpec, beta: float, dim: int, p_grid=(1.0, 2.0), n_grid=(5, 10, 20),
                 replicas: int = 10_000, seed: int = 0, workers: int = 1,
                 prune_tol: float = 0.0) -> MomentTable:
    """Monte Carlo ``E[W_n^p]`` along ``n_grid`` with 99% intervals.

    p = 2 rows carry the exact two-replica value when ``2 beta`` is admissible.
    The growth flag comes from the stabilization rule applied along ``n``.
    """
    n_grid = sorted(int(n) for n in n_grid)
    if n_grid[0] < 0:
        raise ValueError("n must be >= 0")
    logs = np.concatenate(map_replicas(_moment_records, (spec, beta, dim, n_grid[-1], tuple(n_grid),
                                                         seed, prune_tol), replicas, workers))
    exact = None
    if 2 * beta <= spec.beta_max:
        exact = second_moment_curve(spec, beta, dim, n_grid[-1])
    rows, flags = [], {}
    for p in (float(p) for p in p_grid):
        means = []
        for j, n in enumerate(n_grid):
            m, lo, hi, se = stats.mean_ci(np.exp(p * logs[:, j]))
            ex = float(exact[n]) if (p == 2.0 and exact is not None) else math.nan
            rows.append((n, p, m, lo, hi, ex, se))
            means.append(m)
        v, _ = stats.stabilization(means) if len(means) >= 4 else ("INCONCLUSIVE", None)
        flags[p] = {"PASS": "plateau", "FAIL": "growth"}.get(v, "unclear")
    return MomentTable(rows, flags, replicas, seed)


# ---------------------------------------------------------------- export

def _write(path, header, rows, comment):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for r in rows:
            out.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


def write_overshoot_csv(exp: OvershootExperiment, path, comment: str | None = None):
    _write(path, ["t", "p", "k", "ratio", "ci_low", "ci_high", "hits"], exp.rows, comment)


def write_moment_csv(table: MomentTable, path, comment: str | None = None):
    _write(path, ["n", "p", "estimate", "ci_low", "ci_high", "exact_if_p2"],
           [r[:6] for r in table.rows], comment)
