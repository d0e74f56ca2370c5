"""Acceptance criteria 1 to 11, one test each, each printing a PASS/FAIL line."""

import math
import shutil

import numpy as np
import pytest

from polymerlab import cli_runner as cr, condition_lab as cl, oracles
from polymerlab import overshoot_lab as ol
from polymerlab.cone import cone_sites
from polymerlab.env_model import (Gaussian, GumbelNeg, Poisson, SquaresLattice, TwoPoint, Weibull,
                                  conditional_exp_moment, log_mgf, sample_field)
from polymerlab.polymer_core import (decompose_at, endpoint_measure, one_step_measure, second_moment_curve,
                                     second_moment_exact, states_along, total)


def _W(state):
    ls, m = total(state)
    return m * math.exp(ls)


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_01_dp_matches_path_enumeration(check):
    with check(1, 10):
        worst = 0.0
        for spec in (TwoPoint(-1.0, 1.0, 0.5), TwoPoint(0.0, 2.0, 0.2), Gaussian()):
            beta = 0.9
            lam = log_mgf(spec, beta)
            for seed in range(50):
                f = sample_field(spec, 1, 6, seed)
                for n, s in enumerate(states_along(f, beta, lam)):
                    W, pinned, ends = oracles.path_oracle(f, beta, n, lam)
                    worst = max(worst, _rel(_W(s), W))
                    for x, v in pinned.items():
                        worst = max(worst, _rel(s.pinned(x), v))
                    if n:
                        alpha = endpoint_measure(s)
                        for x, a in zip(map(tuple, cone_sites(1, n).tolist()), alpha):
                            if x in ends:
                                worst = max(worst, _rel(a, ends[x]))
                            else:
                                assert a == 0.0
        assert worst <= 1e-12


def test_criterion_02_martingale_exactness(check):
    with check(2, 10):
        for spec in (TwoPoint(-1.0, 1.0, 0.5), TwoPoint(0.0, 3.0, 0.1), TwoPoint(-2.0, 0.5, 0.7)):
            for beta in (0.3, 1.0, 2.0):
                means, gap = oracles.martingale_enumeration(spec, beta, 4)
                assert np.max(np.abs(means - 1.0)) <= 1e-12
                assert gap <= 1e-12


def test_criterion_03_decomposition_identity(check):
    with check(3, 30):
        spec, beta = Gaussian(), 0.9
        lam = log_mgf(spec, beta)
        worst = 0.0
        for d in (1, 2, 3):
            for seed in range(20):
                f = sample_field(spec, d, 12, seed)
                for n in range(13):
                    for k in range(n + 1):
                        dec = decompose_at(f, k, n, beta, lam)
                        worst = max(worst, abs(dec.lhs - dec.rhs) / dec.lhs)
        assert worst <= 1e-12


def test_criterion_04_second_moment_monte_carlo(check):
    with check(4, 120):
        for d, beta, ns in ((3, 0.3, (5, 10, 20)), (1, 0.5, (5, 10))):
            table = ol.moment_trace(Gaussian(), beta, d, p_grid=(2.0,), n_grid=ns, replicas=100_000, seed=0)
            for n, p, est, lo, hi, exact, se in table.rows:
                assert exact == pytest.approx(second_moment_exact(Gaussian(), beta, d, n), rel=1e-14)
                assert abs(est - exact) <= 4 * se, (d, n, est, exact, se)


def test_criterion_05_condition1_battery(check):
    with check(5, 60):
        for beta in (0.5, 1.0):
            for spec in (Gaussian(), Weibull(shape=2.0, rate=1.0), Poisson(1.0), GumbelNeg()):
                assert cl.check_condition1(spec, beta).verdict == "PASS", (spec, beta)
            sq = SquaresLattice(2.0)
            assert cl.check_condition1(sq, beta).verdict == "FAIL"
            for k in range(2, 6):
                ratio = conditional_exp_moment(sq, beta, k * k) * math.exp(-beta * k * k)
                assert ratio > math.exp(beta * ((k + 1) ** 2 - k * k)) / 2


def test_criterion_06_tail_regularity_battery(check):
    with check(6, 60):
        got = {(r.condition_id, r.meta["family"]): r.verdict for r in cl.prop_battery()}
        assert got == {("PROP_I", "Poisson"): "PASS", ("PROP_II", "Gaussian"): "PASS",
                       ("PROP_II", "Weibull"): "PASS", ("PROP_II", "Exponential"): "FAIL",
                       ("PROP_III", "GumbelNeg"): "PASS", ("PROP_III", "ExpPower"): "PASS"}


def _harvested_profiles():
    out = []
    for d, n, beta, seed in ((2, 6, 1.0, 0), (2, 6, 2.0, 1), (2, 8, 1.0, 2), (3, 4, 1.0, 3), (3, 4, 2.0, 4),
                            (3, 6, 1.0, 5), (2, 10, 1.5, 6)):
        spec = Gaussian()
        f = sample_field(spec, d, n, seed)
        s = list(states_along(f, beta, log_mgf(spec, beta)))[-1]
        for w in (endpoint_measure(s), one_step_measure(s)):
            w = w[w > 0]
            out.append(w / math.fsum(w))
    return out


def _profiles():
    uni = [np.full(m, 1.0 / m) for m in (2, 8, 32)]
    geo = []
    for q, m in ((0.5, 10), (0.8, 30), (0.25, 6), (0.95, 64), (0.6, 15), (0.9, 50)):
        g = q ** np.arange(m)
        geo.append(g / math.fsum(g))
    return uni + geo + _harvested_profiles()


def test_criterion_07_exceedance_bounds(check):
    with check(7, 120):
        profiles = _profiles()
        assert len(profiles) >= 20
        for i, w in enumerate(profiles):
            for r in ol.exceedance_table(Gaussian(), 2.0, w, (1.0, 2.0, 4.0, 8.0), 100_000, seed=i):
                assert r.ok, (i, r.A, r.checks)


def test_criterion_08_truncation_bound(check):
    with check(8, 60):
        res = ol.simulate_convex_overshoot(Gaussian(), 1.0, np.full(8, 1 / 8), (1.0,), (1.0,),
                                           replicas=2_600_000, seed=0)[0]
        assert res.truncation_checked >= 1_000_000
        assert res.truncation_violations == 0


def test_criterion_09_uniform_overshoot_ratio(check):
    with check(9, 300):
        exp = ol.martingale_overshoot_experiment(Gaussian(), 0.3, 3, t_grid=(2, 4, 8, 16), p_grid=(1.0, 1.5, 2.0),
                                                 horizon=200, replicas=10_000, seed=0, deadline=300.0)
        print(f"  completed {exp.completed} of {exp.replicas} replicas; verdict {exp.verdict}")
        assert not exp.aborted
        assert exp.verdict == "PASS"


def test_criterion_10_weak_strong_contrast(check):
    with check(10, 60):
        weak = second_moment_curve(Gaussian(), 0.3, 3, 200)
        assert np.all(np.isfinite(weak)) and weak[200] < 2.0
        assert (weak[200] - weak[100]) / weak[100] < 0.01
        strong = second_moment_curve(Gaussian(), 1.0, 1, 100)
        assert strong[100] > 10 * strong[10]


DET_CONFIGS = {
    "simulate": "[experiment]\nbeta = 0.5\ndim = 2\nhorizon = 15\nreplicas = 64\nseed = 11\n"
                "[environment]\nfamily = Gaussian\n",
    "moments": "[experiment]\nbeta = 0.3\ndim = 3\nhorizon = 10\nreplicas = 200\nseed = 5\n"
               "[environment]\nfamily = Gaussian\n[grids]\nn = 2, 5, 10\n",
    "overshoot": "[experiment]\nbeta = 1.0\ndim = 1\nhorizon = 30\nreplicas = 300\nseed = 2\n"
                 "[environment]\nfamily = Gaussian\n[grids]\nt = 1.5, 2, 3, 4\n",
}


def test_criterion_11_determinism_and_parallel_invariance(check, tmp_path):
    with check(11, 60):
        for cmd, text in DET_CONFIGS.items():
            cfg = tmp_path / f"{cmd}.ini"
            cfg.write_text(text)
            trees = []
            for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
                out = tmp_path / f"{cmd}-{tag}"
                code = cr.main([cmd, "--config", str(cfg), "--workers", str(workers), "--output-dir", str(out)])
                assert code in (0, 2)
                trees.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
                shutil.rmtree(out)
            assert trees[0] == trees[1] == trees[2], cmd
