"""Checkers for the overshoot conditions and the sufficient tail criteria.

Every checker evaluates a ratio on a finite, increasing grid and turns the
resulting sequence into a verdict with :func:`polymerlab.stats.stabilization`.
"Bounded as A -> infinity" cannot be decided from finitely many points, so a
report certifies behaviour on the declared range only and always carries the
evidence grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import stats
from .env_model import (EnvironmentSpec, Exponential, ExpPower, GumbelNeg, Gaussian, MomentError, Poisson,
                        SquaresLattice, TwoPoint, Weibull, log_mgf, log_overshoot_ratio,
                        sample_block)

__all__ = [
    "ConditionReport", "Condition2Constants", "check_condition1", "derive_condition2_constants",
    "check_condition2", "check_condition3", "check_prop_i", "check_prop_ii", "check_prop_iii",
    "check_rv_Y", "explicit_c3", "condition_chain", "standard_battery", "prop_battery",
    "default_grid",
]

CONDITION_IDS = ("COND1", "COND2", "COND3", "PROP_I", "PROP_II", "PROP_III", "RV_Y")
VERDICTS = ("PASS", "FAIL", "INCONCLUSIVE")
CONVEX_TOL = 1e-8
SUPERMULT_TOL = 1e-9
MIN_HITS = 100


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass
class ConditionReport:
    condition_id: str
    verdict: str
    constants: dict = field(default_factory=dict)
    evidence: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    columns: list = field(default_factory=lambda: ["x", "ratio"])
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.condition_id not in CONDITION_IDS:
            raise ValueError(f"unknown condition id {self.condition_id!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_dict(self):
        return _jsonable(asdict(self))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def table(self):
        """Human-readable rendering of constants and evidence."""
        lines = [f"{self.condition_id}: {self.verdict}"]
        for k, v in self.constants.items():
            lines.append(f"  {k} = {v}")
        lines.append("  " + "  ".join(f"{c:>12}" for c in self.columns))
        for row in self.evidence:
            lines.append("  " + "  ".join(f"{float(v):>12.6g}" for v in row))
        return "\n".join(lines)


def _spec_meta(spec, **extra):
    return {"family": spec.family, "spec": repr(spec), **extra}


def _check_grid(grid, name="grid"):
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0 or np.any(np.diff(g) <= 0):
        raise ValueError(f"{name} must be non-empty and strictly increasing")
    return g


def default_grid(spec: EnvironmentSpec) -> np.ndarray:
    """Thresholds in omega-space used when a checker is called without a grid."""
    if isinstance(spec, SquaresLattice):
        return np.arange(2, 10, dtype=float) ** 2
    if isinstance(spec, Poisson):
        return np.arange(2, 26, dtype=float)
    if isinstance(spec, TwoPoint):
        return spec.v_low + (spec.v_high - spec.v_low) * np.linspace(0.05, 0.95, 12)
    return np.linspace(1.5, 12.0, 22)


# ---------------------------------------------------------------- Condition 1

def check_condition1(spec: EnvironmentSpec, beta: float, A_grid=None) -> ConditionReport:
    """Ratio r(A) = E[e^{beta w} | w > A] e^{-beta A} along ``A_grid``.

    PASS with ``c1 = max r`` when r stabilizes, FAIL when it keeps growing
    (growth rate recorded), INCONCLUSIVE otherwise.
    """
    A = _check_grid(default_grid(spec) if A_grid is None else A_grid, "A_grid")
    spec._check_beta(beta)
    log_r = np.array([log_overshoot_ratio(spec, beta, a) for a in A])
    r = np.exp(log_r)
    verdict, det = stats.stabilization(r)
    i = int(np.argmax(log_r))
    constants = {"A1": float(A[0]), "c1": float(r.max()), "beta": beta}
    if verdict == "FAIL":
        constants["witness_A"] = float(A[i])
        constants["growth_per_unit_A"] = float(np.polyfit(A[A.size // 2:], log_r[A.size // 2:], 1)[0])
    return ConditionReport(
        "COND1", verdict, constants,
        [[float(a), float(x)] for a, x in zip(A, r)],
        {"quad_rel": 1e-12, **{k: v for k, v in det.items() if k != "reason"}},
        ["A", "ratio"], _spec_meta(spec, log_ratio=log_r.tolist()))


# ---------------------------------------------------------------- Condition 2

class Condition2Constants(NamedTuple):
    A2: float
    c2: float
    factors: dict


def derive_condition2_constants(A1_at_2beta: float, c1_at_2beta: float, beta: float,
                                lam: float) -> Condition2Constants:
    """Constants for Y = e^{beta w - lambda} obtained from Condition 1 at 2 beta.

    For ``A >= A2 = exp(beta A1(2 beta) - lambda)`` the threshold
    ``a = (log A + lambda) / beta`` is at least ``A1(2 beta)``, so

        E[Y^2 | Y > A] = E[e^{2 beta w} | w > a] e^{-2 lambda}
                      <= c1(2 beta) e^{2 (log A + lambda)} e^{-2 lambda}
                       = c1(2 beta) * e^{2 lambda} * e^{-2 lambda} * A^2.

    Each factor of ``c2`` is recorded in ``factors``.
    """
    if not A1_at_2beta > 1:
        raise ValueError("A1(2 beta) must exceed 1")
    if not (c1_at_2beta > 0 and beta > 0):
        raise ValueError("c1(2 beta) and beta must be positive")
    A2 = math.exp(beta * A1_at_2beta - lam)
    factors = {"c1_at_2beta": c1_at_2beta, "exp_plus_2lambda": math.exp(2 * lam),
               "exp_minus_2lambda": math.exp(-2 * lam)}
    c2 = c1_at_2beta * factors["exp_plus_2lambda"] * factors["exp_minus_2lambda"]
    return Condition2Constants(A2, c2, factors)


def _y_ratio(spec, beta, lam, p, A):
    """E[Y^p | Y > A] / A^p = E[e^{p beta (w - a)} | w > a] with a = (log A + lambda)/beta."""
    a = (math.log(A) + lam) / beta
    return math.exp(log_overshoot_ratio(spec, p * beta, a))


def check_condition2(spec: EnvironmentSpec, beta: float, p_grid=(1.0, 1.25, 1.5, 1.75, 2.0),
                     A_grid=None, constants: tuple | None = None) -> ConditionReport:
    """E[Y^p | Y > A] / A^p for Y = e^{beta w - lambda(beta)}.

    With ``constants=(A2, c2)`` the verdict is the direct check ``ratio <= c2``
    on grid points ``A >= A2``; otherwise the stabilization rule is applied for
    each p and the verdicts are combined.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if 2 * beta > spec.beta_max:
        raise ValueError(f"2*beta={2 * beta} exceeds beta_max={spec.beta_max}: E[Y^2] not available")
    lam = log_mgf(spec, beta)
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any((p_grid < 1) | (p_grid > 2)):
        raise ValueError("p_grid must lie in [1, 2]")
    if A_grid is None:
        A = np.exp(beta * default_grid(spec) - lam)
        A = A[A > 1]
    else:
        A = _check_grid(A_grid, "A_grid")
    if constants is not None:
        A = A[A >= constants[0]]
    if A.size == 0:
        return ConditionReport("COND2", "INCONCLUSIVE", {"beta": beta}, [], {},
                               ["p", "A", "ratio"], _spec_meta(spec, reason="empty grid"))
    table = np.array([[_y_ratio(spec, beta, lam, p, a) for a in A] for p in p_grid])
    evidence = [[float(p), float(a), float(table[i, j])]
                for i, p in enumerate(p_grid) for j, a in enumerate(A)]
    tol = {"quad_rel": 1e-12}
    if constants is not None:
        A2, c2 = constants[0], constants[1]
        ok = bool(np.all(table <= c2 * (1 + 1e-9)))
        tol["compare_rel"] = 1e-9
        return ConditionReport("COND2", "PASS" if ok else "FAIL",
                               {"A2": A2, "c2": c2, "max_ratio": float(table.max()), "beta": beta,
                                "lambda": lam},
                               evidence, tol, ["p", "A", "ratio"], _spec_meta(spec))
    verdicts = [stats.stabilization(row)[0] for row in table]
    if all(v == "PASS" for v in verdicts):
        verdict = "PASS"
    elif any(v == "FAIL" for v in verdicts):
        verdict = "FAIL"
    else:
        verdict = "INCONCLUSIVE"
    return ConditionReport("COND2", verdict,
                           {"A2": float(A[0]), "c2": float(table.max()), "beta": beta, "lambda": lam},
                           evidence, {**tol, "stable_factor": stats.STABLE_FACTOR},
                           ["p", "A", "ratio"], _spec_meta(spec, per_p=verdicts))


# ---------------------------------------------------------------- Condition 3

def explicit_c3(c2: float, second_moment: float) -> float:
    """Explicit constant for convex combinations, p = 2, A >= max(A2, 1).

    Collects the bounds of the N = 0 case, (2A + S')^2 with E[S'^2] <= E[Y^2],
    and of the N >= 1 case (square terms <= c2 A^2 q_i + alpha_i^2 E[Y^2],
    cross terms bounded with E[Y | Y > A/alpha] <= c2 A / alpha and
    E[N | N >= 1] <= 2, E[N^2 | N >= 1] <= 5), then uses A >= 1.
    """
    return 9.0 + 6.0 * c2 + 5.0 * c2 * c2 + 2.0 * second_moment


def _profile(w):
    w = np.asarray(w, dtype=float).ravel()
    if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
        raise ValueError("weight profiles must be non-negative and sum to 1 within 1e-12")
    return w


def check_condition3(spec: EnvironmentSpec, beta: float, weight_profiles, p_grid=(1.0, 1.5, 2.0),
                     A_grid=(1.5, 2.0, 3.0), replicas: int = 100_000, seed: int = 0,
                     c3: float | None = None, chunk: int = 1 << 16) -> ConditionReport:
    """Monte Carlo E[S^p | S > A] / A^p for S = sum_i alpha_i Y_i, by rejection.

    Each profile draws its own block stream (tag = profile index).  With ``c3``
    given, PASS needs every upper confidence bound below ``c3``; otherwise the
    worst upper bound along A goes through the stabilization rule.  Cells with
    fewer than 100 accepted samples make the report INCONCLUSIVE.
    """
    profiles = [_profile(w) for w in weight_profiles]
    A = _check_grid(A_grid, "A_grid")
    p_grid = np.asarray(p_grid, dtype=float)
    lam = log_mgf(spec, beta)
    acc = {}
    for j, w in enumerate(profiles):
        mom = {(a, p): stats.Moments() for a in A for p in p_grid}
        hits = dict.fromkeys(A, 0)
        for row0 in range(0, replicas, chunk):
            rows = min(chunk, replicas - row0)
            y = np.exp(beta * sample_block(spec, seed, j, row0, rows, w.size) - lam)
            s = y @ w
            for a in A:
                keep = s[s > a]
                hits[a] += keep.size
                for p in p_grid:
                    mom[a, p] = mom[a, p].merge(stats.Moments.of((keep / a) ** p))
        acc[j] = (mom, hits)
    evidence = []
    ucb = np.full((len(A), len(profiles), len(p_grid)), np.nan)
    low_hits = []
    worst = (-np.inf, None)
    for j in range(len(profiles)):
        mom, hits = acc[j]
        for ia, a in enumerate(A):
            plo, phi = stats.wilson(hits[a], replicas)
            for ip, p in enumerate(p_grid):
                m = mom[a, p]
                lo, hi = m.ci() if m.n >= 2 else (math.nan, math.nan)
                evidence.append([j, float(p), float(a), m.mean, lo, hi, hits[a], plo, phi])
                if hits[a] < MIN_HITS:
                    if (j, float(a)) not in low_hits:
                        low_hits.append((j, float(a)))
                    continue
                ucb[ia, j, ip] = hi
                if hi > worst[0]:
                    worst = (hi, j)
    constants = {"beta": beta, "replicas": replicas, "seed": seed,
                 "worst_profile": worst[1], "max_ucb": float(worst[0])}
    tol = {"ci_level": stats.LEVEL, "min_hits": MIN_HITS}
    cols = ["profile", "p", "A", "ratio", "ci_low", "ci_high", "hits", "prob_low", "prob_high"]
    if low_hits:
        return ConditionReport("COND3", "INCONCLUSIVE", constants, evidence, tol, cols,
                               _spec_meta(spec, low_hits=low_hits))
    if c3 is not None:
        constants["c3"] = c3
        verdict = "PASS" if worst[0] <= c3 else "FAIL"
    else:
        verdict, det = stats.stabilization(np.nanmax(ucb.reshape(len(A), -1), axis=1))
        constants["c3"] = float(worst[0])
        tol.update({k: v for k, v in det.items() if k != "reason"})
    return ConditionReport("COND3", verdict, constants, evidence, tol, cols, _spec_meta(spec))


def condition_chain(spec: EnvironmentSpec, beta: float, A_grid_2beta=None,
                    p_grid=(1.0, 1.5, 2.0)) -> dict:
    """Condition 1 at 2 beta -> constants (A2, c2) -> Condition 2 at beta -> c3 candidate.

    The Condition 2 grid is the image of the Condition 1 grid under
    ``a -> e^{beta a - lambda}`` so both checks look at the same thresholds.
    """
    c1 = check_condition1(spec, 2 * beta, A_grid_2beta)
    lam = log_mgf(spec, beta)
    a = np.array([row[0] for row in c1.evidence])
    out = {"cond1_2beta": c1, "lambda": lam}
    if c1.verdict != "PASS" or not a[0] > 1:
        out["cond2"] = None
        return out
    k2 = derive_condition2_constants(a[0], c1.constants["c1"], beta, lam)
    out["constants"] = k2
    out["cond2"] = check_condition2(spec, beta, p_grid, np.exp(beta * a - lam), (k2.A2, k2.c2))
    m2 = math.exp(log_mgf(spec, 2 * beta) - 2 * lam)
    out["A3"] = k2.A2
    out["c3"] = explicit_c3(k2.c2, m2)
    out["second_moment_Y"] = m2
    return out


# ---------------------------------------------------------------- tail-regularity criteria

def check_prop_i(spec: EnvironmentSpec, beta: float, K: float = 1.0, M: float | None = None,
                 x_grid=None, y_grid=None) -> ConditionReport:
    """rho(x) = sup_{y in y_grid} P(w > x + y) e^{M y} / P(w > x), evaluated in log space."""
    M = 3.0 * beta if M is None else M
    if not M > 2 * beta:
        raise ValueError("need M > 2 beta")
    if not K > 0:
        raise ValueError("need K > 0")
    x = _check_grid(default_grid(spec) if x_grid is None else x_grid, "x_grid")
    y = _check_grid(K + np.linspace(0.0, 20.0, 81) if y_grid is None else y_grid, "y_grid")
    if y[0] < K:
        raise ValueError("y_grid must lie in [K, inf)")
    lt_x = np.asarray(spec.log_tail(x), dtype=float)
    const = {"K": K, "M": M, "beta": beta}
    tol = {"stable_factor": stats.STABLE_FACTOR}
    if not np.all(np.isfinite(lt_x)):
        return ConditionReport("PROP_I", "INCONCLUSIVE", const, [], tol, ["x", "rho"],
                               _spec_meta(spec, reason="tail vanishes on the grid"))
    log_rho = np.array([np.max(np.asarray(spec.log_tail(xi + y)) + M * y) - lxi
                        for xi, lxi in zip(x, lt_x)])
    rho = np.exp(np.minimum(log_rho, 700.0))
    verdict, det = stats.stabilization(rho)
    const["sup_rho"] = float(rho.max())
    if verdict == "FAIL":
        const["witness_x"] = float(x[int(np.argmax(log_rho))])
    return ConditionReport("PROP_I", verdict, const,
                           [[float(a), float(b)] for a, b in zip(x, rho)],
                           {**tol, **{k: v for k, v in det.items() if k != "reason"}},
                           ["x", "rho"], _spec_meta(spec, log_rho=log_rho.tolist()))


def check_prop_ii(spec: EnvironmentSpec, x_grid=None) -> ConditionReport:
    """f = -log P(w > x): discrete convexity and growth of f(x)/x past the midpoint."""
    x = _check_grid(np.linspace(0.5, 12.0, 24) if x_grid is None else x_grid, "x_grid")
    f = -np.asarray(spec.log_tail(x), dtype=float)
    if not np.all(np.isfinite(f)):
        return ConditionReport("PROP_II", "INCONCLUSIVE", {}, [], {"convex_tol": CONVEX_TOL},
                               ["x", "f"], _spec_meta(spec, reason="tail vanishes on the grid"))
    slopes = np.diff(f) / np.diff(x)
    second = np.diff(slopes)
    convex = bool(np.all(second >= -CONVEX_TOL))
    half = x.size // 2
    fx = f[half:] / x[half:]
    steps = np.diff(fx)
    superlinear = bool(np.all(steps > 0) and fx[-1] > fx[0] * (1 + 1e-6))
    const = {"min_second_difference": float(second.min()) if second.size else math.nan,
             "convex": convex, "superlinear": superlinear,
             "f_over_x_mid": float(fx[0]), "f_over_x_end": float(fx[-1])}
    verdict = "PASS" if convex and superlinear else "FAIL"
    return ConditionReport("PROP_II", verdict, const,
                           [[float(a), float(b)] for a, b in zip(x, f)],
                           {"convex_tol": CONVEX_TOL, "superlinear_rel": 1e-6},
                           ["x", "f"], _spec_meta(spec))


def check_prop_iii(spec: EnvironmentSpec, c_candidate: float = 1.0, x_grid=None,
                   y_grid=None) -> ConditionReport:
    """Super-multiplicativity f(x + y) >= f(x) f(y) of the envelope exponent.

    ``f`` is the geometric mean of the two exponents allowed by the envelope
    ``c^-1 e^{-c f} <= P(w > x) <= c e^{-f/c}``, i.e.
    ``f = sqrt(L^2 - log(c)^2)`` with ``L = -log P(w > x)``.
    """
    x = _check_grid(np.linspace(0.5, 6.0, 12) if x_grid is None else x_grid, "x_grid")
    y = _check_grid(x if y_grid is None else y_grid, "y_grid")
    c = float(c_candidate)
    tol = {"supermult_rel": SUPERMULT_TOL}
    cols = ["x", "min_ratio"]
    lc = math.log(c) if c > 0 else math.nan

    def log_f(z):
        L = -np.asarray(spec.log_tail(z), dtype=float)
        return 0.5 * np.log((L - lc) * (L + lc)), L

    lf_x, L_x = log_f(x)
    lf_xy, L_xy = log_f(x[:, None] + y[None, :])
    lf_y, L_y = log_f(y)
    everything = np.concatenate([L_x, L_xy.ravel(), L_y])
    if not (c >= 1 and np.all(np.isfinite(everything)) and np.all(everything > lc)):
        return ConditionReport("PROP_III", "INCONCLUSIVE", {"c": c}, [], tol, cols,
                               _spec_meta(spec, reason="envelope constant invalid on this grid"))
    gap = lf_xy - lf_x[:, None] - lf_y[None, :]      # log of f(x+y) / (f(x) f(y))
    monotone = bool(np.all(np.diff(lf_x) > 0))
    supermult = bool(np.all(gap >= math.log1p(-SUPERMULT_TOL)))
    i, j = np.unravel_index(np.argmin(gap), gap.shape)
    const = {"c": c, "monotone": monotone, "supermultiplicative": supermult,
             "worst_x": float(x[i]), "worst_y": float(y[j]), "worst_ratio": float(np.exp(gap[i, j]))}
    return ConditionReport("PROP_III", "PASS" if monotone and supermult else "FAIL", const,
                           [[float(a), float(np.exp(g.min()))] for a, g in zip(x, gap)],
                           tol, cols, _spec_meta(spec))


def check_rv_Y(spec: EnvironmentSpec, beta: float, K: float = 2.0, M: float = 3.0,
               lambda_grid=None, y_grid=None) -> ConditionReport:
    """One-sided regular variation of the tail of Y = e^{beta w - lambda(beta)}.

    The main quantity is ``q(y) = sup_{l >= K} l^M P(Y > l y) / P(Y > y)``, with
    the sup taken over ``lambda_grid`` (inside [K, K^2]) extended geometrically
    up to ``K^2 * 1e12``.  The sufficient criterion (ratio below ``K^-M`` for all
    l in [K, K^2] on the last quartile of y) and a stretched-exponential fit
    of ``-log P(Y > y)`` are reported alongside.
    """
    if not (K > 1 and M > 2):
        raise ValueError("need K > 1 and M > 2")
    lam = log_mgf(spec, beta)
    lg = _check_grid(np.geomspace(K, K * K, 9) if lambda_grid is None else lambda_grid, "lambda_grid")
    if lg[0] < K or lg[-1] > K * K * (1 + 1e-12):
        raise ValueError("lambda_grid must lie in [K, K^2]")
    y = _check_grid(np.exp(np.linspace(0.0, 45.0, 90)) if y_grid is None else y_grid, "y_grid")
    ext = np.unique(np.concatenate([lg, np.geomspace(K * K, K * K * 1e12, 120)]))

    def log_tail_Y(v):
        return np.asarray(spec.log_tail((np.log(v) + lam) / beta), dtype=float)

    ly = log_tail_Y(y)
    const = {"K": K, "M": M, "beta": beta, "lambda": lam}
    tol = {"stable_factor": stats.STABLE_FACTOR}
    if not np.all(np.isfinite(ly)):
        return ConditionReport("RV_Y", "INCONCLUSIVE", const, [], tol, ["y", "q"],
                               _spec_meta(spec, reason="tail of Y vanishes on the grid"))
    log_ratio = np.array([log_tail_Y(l * y) for l in ext]) - ly[None, :]   # (lambda, y)
    log_q = np.max(M * np.log(ext)[:, None] + log_ratio, axis=0)
    q = np.exp(np.minimum(log_q, 700.0))
    verdict, det = stats.stabilization(q)
    in_lg = np.isin(ext, lg)
    tail = slice(-max(1, int(math.ceil(y.size / 4))), None)
    rho = float(np.exp(log_ratio[in_lg][:, tail].max()))
    const.update({"sup_q": float(q.max()), "rho": rho, "K_pow_minus_M": K ** -M,
                  "sufficient_criterion": rho < K ** -M})
    # stretched-exponential envelope  c y^g <= -log P(Y > y) <= C y^g  on the upper half
    upper = slice(y.size // 2, None)
    L = -ly[upper]
    if np.all(L > 0):
        g = float(np.polyfit(np.log(y[upper]), np.log(L), 1)[0])
        scaled = L / y[upper] ** g
        c_lo, c_hi = float(scaled.min()), float(scaled.max())
        const.update({"weibull_gamma": g, "weibull_c": c_lo, "weibull_C": c_hi,
                      "weibull_fit": bool(g > 0 and c_hi / c_lo <= 1.2),
                      "weibull_bound_decays": bool(c_lo * K ** g - c_hi > 0)})
    if verdict == "FAIL":
        const["witness_y"] = float(y[int(np.argmax(log_q))])
    return ConditionReport("RV_Y", verdict, const,
                           [[float(a), float(b)] for a, b in zip(y, q)],
                           {**tol, **{k: v for k, v in det.items() if k != "reason"}},
                           ["y", "q"], _spec_meta(spec, log_q=log_q.tolist()))


# ---------------------------------------------------------------- battery

def standard_battery(betas=(0.5, 1.0)) -> list[ConditionReport]:
    """Condition 1 on the commonly used families plus the squares counterexample."""
    specs = [Gaussian(0.0, 1.0), Weibull(shape=2.0, rate=1.0), Poisson(1.0), GumbelNeg(0.0, 1.0),
             SquaresLattice(rate=2.0)]
    out = []
    for spec in specs:
        for b in betas:
            try:
                out.append(check_condition1(spec, b))
            except MomentError as exc:
                out.append(ConditionReport("COND1", "INCONCLUSIVE", {"beta": b}, [], {},
                                           ["A", "ratio"], _spec_meta(spec, error=str(exc))))
    return out


def prop_battery() -> list[ConditionReport]:
    return [
        check_prop_i(Poisson(1.0), 0.5),
        check_prop_ii(Gaussian(0.0, 1.0)),
        check_prop_ii(Weibull(shape=2.0, rate=1.0)),
        check_prop_ii(Exponential(1.0)),
        check_prop_iii(GumbelNeg(0.0, 1.0)),
        check_prop_iii(ExpPower(1.0)),
    ]

