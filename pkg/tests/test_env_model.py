import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from polymerlab.env_model import (FAMILIES, Exponential, ExpPower, Gaussian, GumbelNeg, MomentError,
                                  Poisson, SquaresLattice, TwoPoint, Weibull, conditional_exp_moment,
                                  log_mgf, log_tail_prob, omega_at, sample_block, sample_field,
                                  spec_from_config, spec_to_config, std_normal_quantile, tail_prob)

SPECS = [Gaussian(0.0, 1.0), Gaussian(1.0, 0.5), TwoPoint(-1.0, 1.0, 0.5), TwoPoint(0.0, 2.0, 0.2),
         Poisson(1.0), Poisson(3.0), Weibull(shape=2.0, rate=1.0), Weibull(shape=1.5, rate=0.5),
         GumbelNeg(0.0, 1.0), SquaresLattice(rate=2.0), Exponential(1.0), ExpPower(1.0)]
ids = [repr(s) for s in SPECS]


def _density_mgf(spec, beta):
    """Independent E[e^{beta w}] from a density or pmf (no tail identity)."""
    if isinstance(spec, Gaussian):
        f = lambda x: math.exp(stats.norm.logpdf(x, spec.mean, spec.stddev) + beta * x)
        return integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]
    if isinstance(spec, TwoPoint):
        return (1 - spec.p_high) * math.exp(beta * spec.v_low) + spec.p_high * math.exp(beta * spec.v_high)
    if isinstance(spec, Poisson):
        k = np.arange(0, 400)
        return math.fsum(np.exp(beta * k + stats.poisson.logpmf(k, spec.mean)))
    if isinstance(spec, SquaresLattice):
        k = np.arange(1, 60.0)
        return math.fsum(np.exp((beta - spec.rate) * k * k)) / math.fsum(np.exp(-spec.rate * k * k))
    if isinstance(spec, Weibull):
        a, r = spec.shape, spec.rate
        f = lambda x: a * r * x ** (a - 1) * math.exp(-r * x ** a + beta * x)
        return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]
    if isinstance(spec, GumbelNeg):
        # w = loc + scale*log(E)
        return math.exp(beta * spec.loc) * special.gamma(1 + beta * spec.scale)
    if isinstance(spec, Exponential):
        return spec.rate / (spec.rate - beta)
    if isinstance(spec, ExpPower):
        # atom at 0 of mass 1 - 1/e, density d/dx(-exp(-exp(x^a))) on x > 0
        a = spec.shape
        f = lambda x: a * x ** (a - 1) * math.exp(-math.exp(x ** a) + x ** a + beta * x)
        # beyond exp(x^a) = 700 the density is below e^-690
        cont = integrate.quad(f, 0, math.log(700.0) ** (1 / a), epsabs=0, epsrel=1e-13, limit=200)[0]
        return (1 - math.exp(-1)) + cont
    raise AssertionError


def test_log_mgf_examples():
    assert log_mgf(Gaussian(0.0, 1.0), 0.5) == pytest.approx(0.125, abs=1e-15)
    assert log_mgf(Poisson(1.0), 1.0) == pytest.approx(math.e - 1, rel=1e-14)
    # Poisson by truncated series
    k = np.arange(0, 80)
    series = math.fsum(np.exp(k - 1.0 - special.gammaln(k + 1)))
    assert log_mgf(Poisson(1.0), 1.0) == pytest.approx(math.log(series), abs=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_log_mgf_at_zero_is_exactly_zero(spec):
    assert log_mgf(spec, 0.0) == 0.0


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_log_mgf_matches_density_quadrature(spec):
    for beta in np.linspace(0.1, min(spec.beta_max, 2.0), 5):
        assert log_mgf(spec, beta) == pytest.approx(math.log(_density_mgf(spec, beta)), abs=1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_normalized_weight_has_mean_one(spec):
    for beta in np.linspace(0.1, min(spec.beta_max, 2.0), 4):
        assert _density_mgf(spec, beta) * math.exp(-log_mgf(spec, beta)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_log_mgf_is_convex(spec):
    b = np.linspace(0.0, min(spec.beta_max, 3.0), 31)
    lam = np.array([log_mgf(spec, x) for x in b])
    assert np.all(np.diff(lam, 2) >= -1e-8)


def test_log_mgf_rejects_out_of_range_beta():
    with pytest.raises(ValueError):
        log_mgf(Gaussian(), -0.1)
    with pytest.raises(ValueError):
        log_mgf(SquaresLattice(2.0), 2.5)


def test_tail_examples():
    assert tail_prob(Gaussian(0.0, 1.0), 0.0) == pytest.approx(0.5, abs=1e-15)
    assert tail_prob(GumbelNeg(0.0, 1.0), 0.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert tail_prob(TwoPoint(-1.0, 1.0, 0.5), 0.0) == 0.5


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_tail_is_monotone_and_in_unit_interval(spec):
    x = np.linspace(-5, 30, 400)
    p = np.array([tail_prob(spec, xi) for xi in x])
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.diff(p) <= 1e-15)


def test_log_tail_does_not_underflow_far_out():
    assert log_tail_prob(Gaussian(), 60.0) == pytest.approx(stats.norm.logsf(60.0))
    assert np.isfinite(log_tail_prob(Poisson(1.0), 150.0))


def test_conditional_exp_moment_examples():
    assert conditional_exp_moment(TwoPoint(0.0, 1.0, 0.5), 1.0, 0.5) == pytest.approx(math.e, rel=1e-12)
    want = math.exp(0.5) * stats.norm.sf(1.0) / stats.norm.sf(2.0)
    assert conditional_exp_moment(Gaussian(0.0, 1.0), 1.0, 2.0) == pytest.approx(want, rel=1e-9)
    spec = SquaresLattice(2.0)
    for k in range(1, 7):
        assert conditional_exp_moment(spec, 1.0, k * k) >= math.exp((k + 1) ** 2)


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_conditional_exp_moment_at_least_threshold(spec):
    beta = min(1.0, spec.beta_max)
    for A in np.linspace(0.5, 8.0, 16):
        if tail_prob(spec, A) == 0:
            continue
        assert conditional_exp_moment(spec, beta, A) >= math.exp(beta * A) * (1 - 1e-12)


def test_conditional_exp_moment_zero_probability():
    with pytest.raises(MomentError):
        conditional_exp_moment(TwoPoint(-1.0, 1.0, 0.5), 1.0, 2.0)


def test_conditional_exp_moment_matches_density_quadrature():
    spec = Weibull(shape=2.0, rate=1.0)
    A, beta = 1.5, 1.0
    f = lambda x: 2 * x * math.exp(-x * x + beta * x)
    num = integrate.quad(f, A, np.inf, epsabs=0, epsrel=1e-13)[0]
    assert conditional_exp_moment(spec, beta, A) == pytest.approx(num / math.exp(-A * A), rel=1e-9)


def test_std_normal_quantile_matches_scipy():
    p = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 2001), [1e-300, 1e-20, 0.02425, 0.97575, 1 - 1e-16]])
    got = np.array([std_normal_quantile(x) for x in p])
    want = special.ndtri(p)
    assert np.allclose(got, want, rtol=2e-15, atol=1e-15)


def test_sample_field_cone_and_determinism():
    f = sample_field(Gaussian(), 1, 2, seed=7)
    assert [len(r) for r in f.rows] == [2, 3]
    assert [tuple(x) for x in f.sites(2)] == [(-2,), (0,), (2,)]
    assert sample_field(Gaussian(), 1, 2, seed=7) == f
    g = sample_field(Gaussian(), 3, 10, seed=0)
    for t in range(1, 11):
        norms = np.abs(g.sites(t)).sum(axis=1)
        assert np.all(norms <= t) and np.all((norms - t) % 2 == 0)


def test_sample_field_memory_budget():
    with pytest.raises(MemoryError):
        sample_field(Gaussian(), 3, 60, seed=0, max_sites=1000)


def test_field_values_do_not_depend_on_horizon():
    a = sample_field(Poisson(2.0), 2, 4, seed=11, replica=3)
    b = sample_field(Poisson(2.0), 2, 7, seed=11, replica=3)
    for t in range(1, 5):
        assert np.array_equal(a.rows[t - 1], b.rows[t - 1])


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_sampled_law_matches_tail(spec):
    x = sample_block(spec, 5, 0, 0, 40000, 1).ravel()
    qs = [0.5, 1.0, 2.0, 3.0]
    for q in qs:
        p = tail_prob(spec, q)
        emp = float(np.mean(x > q))
        assert abs(emp - p) <= 5 * math.sqrt(p * (1 - p) / x.size) + 1e-12


def test_omega_at_is_site_addressable():
    f = sample_field(Weibull(), 2, 5, seed=3)
    sites = f.sites(5)
    assert np.array_equal(omega_at(Weibull(), 3, 5, sites[::-1]), f.rows[4][::-1])


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_config_round_trip(spec):
    assert spec_from_config(spec_to_config(spec)) == spec


def test_config_rejects_unknown_family_and_keys():
    with pytest.raises(ValueError):
        spec_from_config({"family": "Cauchy"})
    with pytest.raises(ValueError):
        spec_from_config({"family": "Gaussian", "sigma": "1"})


@pytest.mark.parametrize("bad", [lambda: Gaussian(0, 0), lambda: TwoPoint(1, 0, 0.5),
                                 lambda: TwoPoint(0, 1, 1.0), lambda: Poisson(-1),
                                 lambda: Weibull(shape=1.0), lambda: SquaresLattice(0.0)])
def test_parameter_validation(bad):
    with pytest.raises(ValueError):
        bad()


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.3, 3.0), st.floats(-2, 2))
def test_gaussian_lambda_closed_form(beta, sigma, mu):
    assert log_mgf(Gaussian(mu, sigma), beta) == pytest.approx(mu * beta + 0.5 * (sigma * beta) ** 2, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_tail_monotone_property(a, b):
    lo, hi = sorted((a, b))
    for spec in (Weibull(), GumbelNeg(), Poisson(1.0), SquaresLattice(2.0)):
        assert tail_prob(spec, hi) <= tail_prob(spec, lo)


def test_families_registry_complete():
    assert set(FAMILIES) == {"Gaussian", "TwoPoint", "Poisson", "Weibull", "GumbelNeg",
                             "SquaresLattice", "Exponential", "ExpPower"}
