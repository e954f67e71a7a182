import math

import numpy as np
import pytest
from scipy import stats

import copulacp as cc


def test_version():
    assert cc.__version__ == cc.version()


def test_clarke_matches_scipy_binomial_test():
    for n, xi in [(270, 118), (270, 135), (4, 4), (270, 142)]:
        expected = stats.binomtest(xi, n, 0.5).pvalue
        assert cc.binomial_two_sided_p(n, xi) == pytest.approx(expected, rel=1e-10)
    a = np.r_[np.ones(118), -np.ones(152)]
    r = cc.clarke_test(a, np.zeros(270))
    assert r["xi"] == 118 and r["n"] == 270
    assert 0.0434 <= r["p_value"] <= 0.0454


def test_fourier_magnitudes_of_a_cosine():
    t = np.arange(1000)
    m = cc.fourier_magnitudes(np.cos(2 * np.pi * 7 * t / 1000))
    assert m.shape == (501,)
    # Unitary scaling: |F_k| = T / 2 / sqrt(T) for a unit cosine on bin k.
    assert m[7] == pytest.approx(500.0 / math.sqrt(1000.0), rel=1e-9)
    assert np.all(np.delete(m, 7) < 1e-9)


def test_copula_basics():
    c = cc.Copula("clayton", 2.0)
    assert c.family == "clayton"
    assert c.tau == pytest.approx(0.5)
    assert c.cdf(0.3, 1.0) == pytest.approx(0.3)
    closed = (0.3 ** -2 + 0.6 ** -2 - 1) ** -0.5
    assert c.cdf(0.3, 0.6) == pytest.approx(closed, rel=1e-12)
    assert c.pdf(0.4, 0.4) > 0
    assert cc.Copula("independent").pdf(0.2, 0.9) == 1.0
    with pytest.raises(ValueError):
        cc.Copula("clayton", -3.0)
    with pytest.raises(ValueError):
        cc.Copula("student")


def test_sampling_and_kendall_against_scipy():
    u, v = cc.Copula("gumbel", cc.tau_to_theta("gumbel", 0.4)).sample(5000, seed=3)
    assert u.shape == v.shape == (5000,)
    assert cc.kendall_tau(u, v) == pytest.approx(stats.kendalltau(u, v)[0], abs=1e-12)
    assert cc.kendall_tau(u, v) == pytest.approx(0.4, abs=0.03)
    picked = cc.select_family(u, v)
    assert picked.family in {"gumbel", "joe", "frank", "clayton", "survival_joe"}


def test_simulators_are_seeded():
    a = cc.simulate_dgp1("A", 3, seed=1)
    assert a.shape == (3, 1000)
    assert np.array_equal(a, cc.simulate_dgp1("A", 3, seed=1))
    assert not np.array_equal(a, cc.simulate_dgp1("A", 3, seed=2))
    b = cc.simulate_dgp2(6, 20, seed=4)
    power = sum(cc.fourier_magnitudes(e) ** 2 for e in b)
    assert abs(int(np.argmax(power[1:])) + 1 - 150) <= 1


def test_detect_small_recording():
    data = np.concatenate([cc.simulate_dgp1("A", 4, seed=1), cc.simulate_dgp1("B", 4, seed=2)])
    reports = cc.detect(data[None, :, :], replicates=10, grid=31, seed=5)
    assert [r["band"] for r in reports] == ["delta", "theta", "alpha", "beta", "gamma"]
    for r in reports:
        assert r["ks"]["epochs"] == [2, 3, 4, 5, 6, 7]
        assert all(0.0 <= d <= 1.0 for d in r["ks"]["stats"])
    again = cc.detect(data[None, :, :], replicates=10, grid=31, seed=5, jobs=3)
    assert again == reports
    with pytest.raises(ValueError):
        cc.detect(data, replicates=10)
    assert math.isfinite(reports[0]["threshold"])
