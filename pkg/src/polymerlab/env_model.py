"""Disorder distributions for the polymer environment.

Each family is a frozen dataclass exposing its upper tail in log form.
Continuous families are defined through the tail itself, so
``P(omega > x)`` is exact and moments are obtained from the tail identity

    E[e^{b w} ; w > A] = e^{b A} P(w > A) + b * int_A^inf e^{b x} P(w > x) dx,

which holds for any law (atoms included).  Discrete families sum their
atoms directly in log space.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np
from scipy import integrate, special, stats

from . import rng
from .cone import cone_index, cone_sites, cone_size, total_cone_sites

__all__ = [
    "EnvironmentSpec", "Gaussian", "TwoPoint", "Poisson", "Weibull",
    "GumbelNeg", "SquaresLattice", "Exponential", "ExpPower",
    "EnvField", "MomentError", "FAMILIES",
    "log_mgf", "tail_prob", "log_tail_prob", "conditional_exp_moment",
    "log_overshoot_ratio", "sample_field", "omega_at",
    "spec_to_config", "spec_from_config",
]

_QUAD_TOL = 1e-14
_QUAD_RTOL = 1e-12
_SERIES_CUTOFF = math.log(1e-17)
_MAX_PIECES = 400


class MomentError(ValueError):
    """Raised when an exponential moment is infinite or cannot be computed."""


class EnvironmentSpec:
    """Base class; concrete families are the dataclasses below."""

    family: str = ""
    discrete: bool = False
    support_min: float = -math.inf
    _code: int = -1

    def log_tail(self, x):
        raise NotImplementedError

    def closed_log_mgf(self, beta):
        return None

    def kernel_params(self):
        return np.array([getattr(self, f.name) for f in _param_fields(self)])

    def kernel_table(self):
        return np.zeros(1)

    def _check_beta(self, beta):
        if beta < 0:
            raise ValueError(f"beta must be >= 0, got {beta}")
        if beta > self.beta_max:
            raise ValueError(f"beta={beta} exceeds beta_max={self.beta_max} for {self.family}")


def _param_fields(spec):
    return [f for f in dataclasses.fields(spec) if f.name != "beta_max"]


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class Gaussian(EnvironmentSpec):
    mean: float = 0.0
    stddev: float = 1.0
    beta_max: float = 10.0

    family = "Gaussian"
    _code = 0

    def __post_init__(self):
        _positive("stddev", self.stddev)

    def log_tail(self, x):
        return stats.norm.logsf(np.asarray(x, dtype=float), self.mean, self.stddev)

    def closed_log_mgf(self, beta):
        return self.mean * beta + 0.5 * (self.stddev * beta) ** 2


@dataclass(frozen=True)
class TwoPoint(EnvironmentSpec):
    v_low: float = -1.0
    v_high: float = 1.0
    p_high: float = 0.5
    beta_max: float = 10.0

    family = "TwoPoint"
    discrete = True
    _code = 1

    def __post_init__(self):
        if not 0 < self.p_high < 1:
            raise ValueError(f"p_high must lie in (0, 1), got {self.p_high}")
        if not self.v_low < self.v_high:
            raise ValueError("v_low must be below v_high")

    @property
    def support_min(self):
        return self.v_low

    def atoms(self):
        return (np.array([self.v_low, self.v_high]),
                np.log([1.0 - self.p_high, self.p_high]))

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.v_low, 0.0,
                        np.where(x < self.v_high, math.log(self.p_high), -np.inf))

    def closed_log_mgf(self, beta):
        return np.logaddexp(math.log1p(-self.p_high) + beta * self.v_low,
                            math.log(self.p_high) + beta * self.v_high)


@dataclass(frozen=True)
class Poisson(EnvironmentSpec):
    mean: float = 1.0
    beta_max: float = 10.0

    family = "Poisson"
    discrete = True
    support_min = 0.0
    _code = 2

    def __post_init__(self):
        _positive("mean", self.mean)

    def log_pmf(self, k):
        k = np.asarray(k, dtype=float)
        return k * math.log(self.mean) - self.mean - special.gammaln(k + 1)

    def log_tail(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([_discrete_logsum(self, xi, 0.0) for xi in x.ravel()])
        return out.reshape(x.shape)

    def closed_log_mgf(self, beta):
        return self.mean * math.expm1(beta)


@dataclass(frozen=True)
class Weibull(EnvironmentSpec):
    """Tail ``min(1, prefactor * exp(-rate * x**shape))`` on ``x >= 0``."""

    shape: float = 2.0
    rate: float = 1.0
    prefactor: float = 1.0
    beta_max: float = 10.0

    family = "Weibull"
    _code = 3

    def __post_init__(self):
        if not self.shape > 1:
            raise ValueError(f"Weibull shape must be > 1, got {self.shape}")
        _positive("rate", self.rate)
        _positive("prefactor", self.prefactor)

    @property
    def support_min(self):
        return (max(math.log(self.prefactor), 0.0) / self.rate) ** (1.0 / self.shape)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        body = np.minimum(0.0, math.log(self.prefactor) - self.rate * xp ** self.shape)
        return np.where(x < 0, 0.0, body)


@dataclass(frozen=True)
class GumbelNeg(EnvironmentSpec):
    """Tail ``exp(-exp((x - loc) / scale))``; equal in law to ``loc + scale*log(E)``."""

    loc: float = 0.0
    scale: float = 1.0
    beta_max: float = 10.0

    family = "GumbelNeg"
    _code = 4

    def __post_init__(self):
        _positive("scale", self.scale)

    def log_tail(self, x):
        return -np.exp((np.asarray(x, dtype=float) - self.loc) / self.scale)

    def closed_log_mgf(self, beta):
        return beta * self.loc + special.gammaln(1.0 + beta * self.scale)


@dataclass(frozen=True)
class SquaresLattice(EnvironmentSpec):
    """Atoms at ``k**2`` (k >= 1) with mass proportional to ``exp(-rate k**2)``."""

    rate: float = 2.0
    beta_max: float = float("nan")

    family = "SquaresLattice"
    discrete = True
    support_min = 1.0
    _code = 5

    def __post_init__(self):
        _positive("rate", self.rate)
        if math.isnan(self.beta_max):
            object.__setattr__(self, "beta_max", 0.99 * self.rate)
        if not self.beta_max < self.rate:
            raise ValueError("SquaresLattice needs beta_max < rate for finite exponential moments")

    @cached_property
    def log_normalizer(self):
        k = np.arange(1, _squares_kmax(self.rate) + 1, dtype=float)
        return float(special.logsumexp(-self.rate * k * k))

    def log_pmf_index(self, k):
        k = np.asarray(k, dtype=float)
        return -self.rate * k * k - self.log_normalizer

    def log_tail(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([_discrete_logsum(self, xi, 0.0) for xi in x.ravel()])
        return out.reshape(x.shape)

    def kernel_table(self):
        k = np.arange(1, _squares_kmax(self.rate) + 1, dtype=float)
        cdf = np.cumsum(np.exp(self.log_pmf_index(k)))
        cdf[-1] = 1.0
        return cdf


def _squares_kmax(rate):
    # mass beyond kmax is below 1e-300 relative
    return int(math.ceil(math.sqrt(700.0 / rate))) + 2


@dataclass(frozen=True)
class Exponential(EnvironmentSpec):
    """Pure exponential tail ``exp(-rate x)``: finite moments only for beta < rate."""

    rate: float = 1.0
    beta_max: float = float("nan")

    family = "Exponential"
    support_min = 0.0
    _code = 6

    def __post_init__(self):
        _positive("rate", self.rate)
        if math.isnan(self.beta_max):
            object.__setattr__(self, "beta_max", 0.5 * self.rate)
        if not self.beta_max < self.rate:
            raise ValueError("Exponential needs beta_max < rate")

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -self.rate * np.maximum(x, 0.0))

    def closed_log_mgf(self, beta):
        return -math.log1p(-beta / self.rate)


@dataclass(frozen=True)
class ExpPower(EnvironmentSpec):
    """Tail ``exp(-exp(x**shape))`` on ``x >= 0`` (atom at 0 of mass 1 - 1/e)."""

    shape: float = 1.0
    beta_max: float = 10.0

    family = "ExpPower"
    support_min = 0.0
    _code = 7

    def __post_init__(self):
        if not self.shape >= 1:
            raise ValueError(f"ExpPower shape must be >= 1, got {self.shape}")

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -np.exp(np.maximum(x, 0.0) ** self.shape))


FAMILIES = {cls.family: cls for cls in (Gaussian, TwoPoint, Poisson, Weibull, GumbelNeg,
                                         SquaresLattice, Exponential, ExpPower)}


# ---------------------------------------------------------------- series / quadrature

def _atom_chunk(spec, start, size):
    """Atoms with index in ``[start, start + size)`` as (values, log-probs)."""
    if isinstance(spec, Poisson):
        k = np.arange(start, start + size, dtype=float)
        return k, spec.log_pmf(k)
    k = np.arange(start + 1, start + size + 1, dtype=float)
    return k * k, spec.log_pmf_index(k)


def _first_atom_index(spec, above):
    if isinstance(spec, Poisson):
        return 0 if above < 0 else int(math.floor(above)) + 1
    if above < 1:
        return 0
    return int(math.floor(math.sqrt(above)))  # index i holds (i+1)**2 > above


def _discrete_logsum(spec, above, tilt):
    """log sum over atoms v > above of p(v) e^{tilt v}, truncated when terms fall below 1e-17."""
    if isinstance(spec, TwoPoint):
        v, lp = spec.atoms()
        keep = v > above
        if not keep.any():
            return -math.inf
        return float(special.logsumexp(lp[keep] + tilt * v[keep]))
    start = _first_atom_index(spec, above)
    while True:  # skip rounding at the boundary
        v, _ = _atom_chunk(spec, start, 1)
        if v[0] > above:
            break
        start += 1
    total = -math.inf
    size = 64
    for _ in range(10_000):
        v, lp = _atom_chunk(spec, start, size)
        terms = lp + tilt * v
        total = np.logaddexp(total, special.logsumexp(terms))
        if terms[-1] < terms[-2] and terms[-1] - total < _SERIES_CUTOFF:
            return float(total)
        if not np.isfinite(terms[-1]) and terms[-1] < 0:
            return float(total)
        start += size
    raise MomentError(f"series for {spec.family} did not converge (tilt={tilt})")


def _integrate_tail(spec, beta, A):
    """int_0^inf exp(beta u) P(w > A + u) / P(w > A) du, by doubling spans."""
    lt0 = float(spec.log_tail(A))
    if not np.isfinite(lt0):
        raise MomentError(f"P(omega > {A}) = 0 for {spec.family}")

    def g(u):
        return math.exp(beta * u + float(spec.log_tail(A + u)) - lt0)

    delta = 1e-7 * max(1.0, abs(A))
    hazard = (lt0 - float(spec.log_tail(A + delta))) / delta
    span = 1.0 / max(hazard, 1.0) if np.isfinite(hazard) else 1.0
    lo, hi = 0.0, span
    total = 0.0
    for _ in range(_MAX_PIECES):
        with warnings.catch_warnings():
            # roundoff notices near machine precision; the stopping rule below governs accuracy
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            piece, _ = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)
        total += piece
        if beta * piece <= _QUAD_TOL * (1.0 + beta * total) and g(hi) <= g(lo):
            return total
        lo, hi = hi, 2.0 * hi
    raise MomentError(f"tail integral for {spec.family} did not converge at beta={beta}, A={A}")


def log_overshoot_ratio(spec: EnvironmentSpec, beta: float, A: float) -> float:
    """log of E[e^{beta w} | w > A] e^{-beta A}; always >= 0."""
    if spec.discrete:
        num = _discrete_logsum(spec, A, beta)
        den = _discrete_logsum(spec, A, 0.0)
        if not np.isfinite(den):
            raise MomentError(f"P(omega > {A}) = 0 for {spec.family}")
        return float(num - den - beta * A)
    if beta == 0:
        if not np.isfinite(spec.log_tail(A)):
            raise MomentError(f"P(omega > {A}) = 0 for {spec.family}")
        return 0.0
    return math.log1p(beta * _integrate_tail(spec, beta, A))


# ---------------------------------------------------------------- public operations

def log_mgf(spec: EnvironmentSpec, beta: float) -> float:
    """lambda(beta) = log E[exp(beta * omega)]."""
    spec._check_beta(beta)
    if beta == 0:
        return 0.0
    closed = spec.closed_log_mgf(beta)
    if closed is not None:
        return float(closed)
    if spec.discrete:
        return _discrete_logsum(spec, -math.inf, beta)
    below = spec.support_min - 1.0
    return beta * below + log_overshoot_ratio(spec, beta, below)


def log_tail_prob(spec: EnvironmentSpec, x):
    """log P(omega > x), finite wherever the tail is positive (no underflow)."""
    out = spec.log_tail(x)
    return float(np.ravel(out)[0]) if np.ndim(x) == 0 else out


def tail_prob(spec: EnvironmentSpec, x):
    """P(omega > x)."""
    out = np.exp(spec.log_tail(x))
    return float(np.ravel(out)[0]) if np.ndim(x) == 0 else out


def conditional_exp_moment(spec: EnvironmentSpec, beta: float, A: float) -> float:
    """E[exp(beta * omega) | omega > A]."""
    spec._check_beta(beta)
    return math.exp(beta * A + log_overshoot_ratio(spec, beta, A))


# ---------------------------------------------------------------- sampling

# Wichura's AS241 (PPND16) rational approximations, relative error ~1e-16
_P_CENTRAL = (3.3871328727963666080e0, 1.3314166789178437745e+2, 1.9715909503065514427e+3,
              1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
              3.3430575583588128105e+4, 2.5090809287301226727e+3)
_Q_CENTRAL = (1.0, 4.2313330701600911252e+1, 6.8718700749205790830e+2, 5.3941960214247511077e+3,
              2.1213794301586595867e+4, 3.9307895800092710610e+4, 2.8729085735721942674e+4,
              5.2264952788528545610e+3)
_P_MID = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
          3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
          2.27238449892691845833e-2, 7.74545014278341407640e-4)
_Q_MID = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
          1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
          1.05075007164441684324e-9)
_P_FAR = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
          2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
          2.71155556874348757815e-5, 2.01033439929228813265e-7)
_Q_FAR = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
          7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
          2.04426310338993978564e-15)


@numba.njit(inline="always")
def _horner7(c, x):
    return ((((((c[7] * x + c[6]) * x + c[5]) * x + c[4]) * x + c[3]) * x + c[2]) * x
            + c[1]) * x + c[0]


@numba.njit(cache=True)
def std_normal_quantile(p):
    """Inverse of the standard normal CDF on (0, 1)."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner7(_P_CENTRAL, r) / _horner7(_Q_CENTRAL, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        x = _horner7(_P_MID, r) / _horner7(_Q_MID, r)
    else:
        r -= 5.0
        x = _horner7(_P_FAR, r) / _horner7(_Q_FAR, r)
    return -x if q < 0.0 else x


@numba.njit(cache=True)
def _gaussian_q(params, table, u):
    return params[0] + params[1] * std_normal_quantile(u)


@numba.njit(cache=True)
def _two_point_q(params, table, u):
    return params[1] if u < params[2] else params[0]


@numba.njit(cache=True)
def _poisson_q(params, table, u):
    mu = params[0]
    k = 0
    p = math.exp(-mu)
    cdf = p
    while u > cdf and k < 100_000:
        k += 1
        p *= mu / k
        cdf += p
        if p == 0.0:
            break
    return float(k)


@numba.njit(cache=True)
def _weibull_q(params, table, u):
    return (max(math.log(params[2] / u), 0.0) / params[1]) ** (1.0 / params[0])


@numba.njit(cache=True)
def _gumbel_q(params, table, u):
    return params[0] + params[1] * math.log(-math.log(u))


@numba.njit(cache=True)
def _squares_q(params, table, u):
    i = np.searchsorted(table, u)
    if i >= table.size:
        i = table.size - 1
    k = i + 1
    return float(k * k)


@numba.njit(cache=True)
def _exponential_q(params, table, u):
    return -math.log(u) / params[0]


@numba.njit(cache=True)
def _exp_power_q(params, table, u):
    return max(math.log(-math.log(u)), 0.0) ** (1.0 / params[0])


# uniform -> omega, one compiled function per family (passed into kernels so
# each family gets its own specialization)
QUANTILES = {0: _gaussian_q, 1: _two_point_q, 2: _poisson_q, 3: _weibull_q,
             4: _gumbel_q, 5: _squares_q, 6: _exponential_q, 7: _exp_power_q}


def _batched(quantile):
    @numba.njit
    def run(params, table, u, out, n):
        for j in range(n):
            out[j] = quantile(params, table, u[j])
    return run


@numba.njit(cache=True)
def _gaussian_batch(params, table, u, out, n):
    # the central branch covers 85% of draws; do it branch-free, then patch tails
    for j in range(n):
        q = u[j] - 0.5
        r = 0.180625 - q * q
        out[j] = q * _horner7(_P_CENTRAL, r) / _horner7(_Q_CENTRAL, r)
    for j in range(n):
        if abs(u[j] - 0.5) > 0.425:
            out[j] = std_normal_quantile(u[j])
    for j in range(n):
        out[j] = params[0] + params[1] * out[j]


# array versions used by the streaming kernel: (params, table, u, out, n)
QUANTILE_BATCH = {code: _batched(q) for code, q in QUANTILES.items()}
QUANTILE_BATCH[0] = _gaussian_batch


@numba.njit(cache=True)
def _omegas_at(quantile, params, table, seed, t, coords, replica):
    m, d = coords.shape
    out = np.empty(m)
    for i in range(m):
        out[i] = quantile(params, table, rng.site_uniform(seed, t, coords[i], d, replica))
    return out


@numba.njit(cache=True)
def omega_block(quantile, params, table, seed, tag, row0, rows, cols):
    u = rng.block_uniforms(seed, tag, row0, rows, cols)
    out = np.empty((rows, cols))
    for i in range(rows):
        for j in range(cols):
            out[i, j] = quantile(params, table, u[i, j])
    return out


def omega_at(spec: EnvironmentSpec, seed: int, t: int, coords, replica: int = 0) -> np.ndarray:
    """Environment values at time ``t`` for the given sites (rows of ``coords``)."""
    coords = np.ascontiguousarray(np.atleast_2d(coords), dtype=np.int64)
    seed = rng.check_seed(seed)
    return _omegas_at(QUANTILES[spec._code], spec.kernel_params(), spec.kernel_table(),
                      np.uint64(seed), t, coords, replica)


def sample_block(spec: EnvironmentSpec, seed: int, tag: int, row0: int, rows: int, cols: int):
    """i.i.d. draws for Monte Carlo blocks, rows indexed globally from ``row0``."""
    seed = rng.check_seed(seed)
    return omega_block(QUANTILES[spec._code], spec.kernel_params(), spec.kernel_table(),
                       np.uint64(seed), tag, row0, rows, cols)


@dataclass(frozen=True, eq=False)
class EnvField:
    """Environment on the reachable space-time cone ``1 <= t <= horizon``.

    ``rows[t - 1][i]`` is the value at the ``i``-th site of ``cone_sites(dim, t)``.
    """

    spec: EnvironmentSpec
    dim: int
    horizon: int
    seed: int
    rows: tuple
    replica: int = 0

    def sites(self, t):
        return cone_sites(self.dim, t)

    def value(self, t, x):
        return float(self.rows[t - 1][cone_index(self.dim, t, x)])

    def dense_row(self, t, radius=None):
        """Row ``t`` on the box ``[-radius, radius]^d``; zero off the cone."""
        radius = t if radius is None else radius
        if radius < t:
            raise ValueError("dense rows must cover the whole cone")
        out = np.zeros((2 * radius + 1,) * self.dim)
        idx = tuple((self.sites(t) + radius).T)
        out[idx] = self.rows[t - 1]
        return out

    def __eq__(self, other):
        return (isinstance(other, EnvField) and self.spec == other.spec
                and (self.dim, self.horizon, self.seed, self.replica)
                == (other.dim, other.horizon, other.seed, other.replica)
                and all(np.array_equal(a, b) for a, b in zip(self.rows, other.rows)))

    __hash__ = None


def sample_field(spec: EnvironmentSpec, dim: int, horizon: int, seed: int,
                 replica: int = 0, max_sites: int = 50_000_000) -> EnvField:
    if dim not in (1, 2, 3, 4):
        raise ValueError(f"dim must be in 1..4, got {dim}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n_sites = total_cone_sites(dim, horizon)
    if n_sites > max_sites:
        raise MemoryError(f"cone holds {n_sites} sites, above the budget of {max_sites}")
    rows = tuple(omega_at(spec, seed, t, cone_sites(dim, t), replica)
                 for t in range(1, horizon + 1))
    return EnvField(spec, dim, horizon, rng.check_seed(seed), rows, replica)


# ---------------------------------------------------------------- config round trip

def spec_to_config(spec: EnvironmentSpec) -> dict:
    out = {"family": spec.family}
    for f in dataclasses.fields(spec):
        out[f.name] = repr(float(getattr(spec, f.name)))
    return out


def spec_from_config(section) -> EnvironmentSpec:
    """Build a spec from ``family`` plus named numeric parameters (strings or numbers)."""
    section = dict(section)
    family = section.pop("family", None)
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    cls = FAMILIES[family]
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise ValueError(f"unknown parameter(s) for {family}: {sorted(unknown)}")
    return cls(**{k: float(v) for k, v in section.items()})


__all__ += ["cone_sites", "cone_size", "cone_index", "sample_block"]
