import math

import numpy as np
import pytest

from polymerlab import oracles
from polymerlab.env_model import Gaussian, TwoPoint, sample_field


def test_enumerate_paths_shape_and_steps():
    p = oracles.enumerate_paths(2, 3)
    assert p.shape == (64, 3, 2)
    assert np.all(np.abs(np.diff(p, axis=1)).sum(axis=2) == 1)
    assert len({tuple(x) for x in p[:, -1].tolist()}) == 16


def test_path_oracle_beta_zero():
    f = sample_field(Gaussian(), 1, 4, seed=0)
    W, pinned, ends = oracles.path_oracle(f, 0.0, 4, 0.0)
    assert W == pytest.approx(1.0, rel=1e-15)
    assert ends[(0,)] == pytest.approx(6 / 16, rel=1e-15)


def test_convex_enumeration_frozen_values():
    r = oracles.convex_enumeration([0.25, 4.0], [0.8, 0.2], [0.5, 0.5], 1.0, (1.0, 2.0))
    assert r["prob"] == pytest.approx(0.36, rel=1e-14)
    assert r["ratio"][1.0] == pytest.approx(7 / 3, rel=1e-14)
    assert r["ratio"][2.0] == pytest.approx(5.791666666666667, rel=1e-14)
    assert r["N"]["E[N]"] == pytest.approx(0.4, rel=1e-14)
    assert r["N"]["E[N^2]"] == pytest.approx(0.48, rel=1e-14)
    assert r["N"]["E[N|N>=1]"] == pytest.approx(10 / 9, rel=1e-14)
    assert r["N"]["E[N^2|N>=1]"] == pytest.approx(4 / 3, rel=1e-14)
    assert r["split"][1.0]["N=0"] == 0.0


def test_martingale_enumeration_mean_one():
    means, gap = oracles.martingale_enumeration(TwoPoint(-1.0, 1.0, 0.5), 0.8, 4)
    assert np.allclose(means, 1.0, rtol=1e-13, atol=0)
    assert gap <= 1e-13
    with pytest.raises(TypeError):
        oracles.martingale_enumeration(Gaussian(), 0.8, 2)


def test_second_moment_oracles_agree():
    tp = TwoPoint(-1.0, 1.0, 0.3)
    for n in range(4):
        assert oracles.second_moment_environments(tp, 0.6, n) == pytest.approx(
            oracles.second_moment_paths(tp, 0.6, 1, n), rel=1e-12)
    # one step, d = 1: two walks meet with probability 1/2
    g = Gaussian()
    gamma = 0.6 ** 2
    assert oracles.second_moment_paths(g, 0.6, 1, 1) == pytest.approx(0.5 * math.exp(gamma) + 0.5, rel=1e-14)
