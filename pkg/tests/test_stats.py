import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sst

from sieveifs import ConfigurationError, SystemSpec, stream
from sieveifs.stats import (
    MomentReport,
    TestReport,
    correlation_decay,
    correlation_with_stderr,
    covariance_battery,
    energy_statistic,
    energy_two_sample_2d,
    ks_one_sample,
    ks_two_sample,
    marginal_oracle_test,
    mean_test,
    rejection_rate,
    scale_invariance_test,
)


def ecdf_sup(a, b):
    """Brute-force sup |F_a - F_b| over the pooled sample."""
    a, b = np.sort(a), np.sort(b)
    best = 0.0
    for t in np.concatenate([a, b]):
        fa = np.searchsorted(a, t, side="right") / a.size
        fb = np.searchsorted(b, t, side="right") / b.size
        best = max(best, abs(fa - fb))
    return best


def naive_energy(a, b):
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    n, m = len(a), len(b)
    d = lambda u, v: np.mean([[np.linalg.norm(p - q) for q in v] for p in u])  # noqa: E731
    return n * m / (n + m) * (2 * d(a, b) - d(a, a) - d(b, b))


def test_ks_edge_cases():
    a = stream(1).normal(size=500)
    same = ks_two_sample(a, a.copy())
    assert same.statistic == 0.0 and same.p_value == 1.0 and same.passed
    shifted = ks_two_sample(a, a + 1.0)
    assert shifted.p_value < 1e-6 and not shifted.passed
    with pytest.raises(ConfigurationError):
        ks_two_sample(a[:10], a)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(100, 300), st.integers(100, 300))
def test_ks_statistic_matches_ecdf_oracle(seed, n, m):
    rng = stream(seed)
    a, b = rng.normal(size=n), rng.normal(0.2, 1.0, size=m)
    assert ks_two_sample(a, b).statistic == pytest.approx(ecdf_sup(a, b), abs=1e-12)


def test_ks_one_sample_distance_rule():
    a = stream(2).uniform(size=1000)
    rep = ks_one_sample(a, sst.uniform.cdf, max_distance=0.1)
    assert rep.passed and rep.statistic < 0.1
    assert not ks_one_sample(a, sst.uniform(0, 2).cdf, max_distance=0.1).passed


def test_energy_against_naive():
    rng = stream(3)
    a, b = rng.normal(size=(40, 2)), rng.normal(0.5, 1.0, size=(30, 2))
    assert energy_statistic(a, b) == pytest.approx(naive_energy(a, b), rel=1e-8)
    assert energy_statistic(a, a.copy()) == pytest.approx(0.0, abs=1e-9)


def test_energy_test_power_and_identity():
    rng = stream(4)
    a = rng.normal(size=(300, 2))
    assert energy_two_sample_2d(a, a.copy(), n_perm=199).p_value == 1.0
    b = rng.normal(size=(300, 2)) + [0.5, 0.0]
    rep = energy_two_sample_2d(a, b, n_perm=199)
    assert rep.p_value == pytest.approx(1 / 200) and not rep.passed


def test_energy_calibration():
    def run(seed):
        rng = stream(seed, "calib")
        return energy_two_sample_2d(rng.normal(size=(60, 2)), rng.normal(size=(60, 2)), n_perm=199, seed=seed)

    assert rejection_rate(run, range(300)) <= 0.03


def test_ks_calibration_on_sieved_marginal():
    spec = SystemSpec.bernoulli(0.5)
    assert rejection_rate(lambda s: marginal_oracle_test(spec, 0.7, 200, seed=s), range(300)) <= 0.03


def test_reports_reproducible():
    spec = SystemSpec.bernoulli(0.5)
    r1 = marginal_oracle_test(spec, 0.5, 500, seed=9)
    r2 = marginal_oracle_test(spec, 0.5, 500, seed=9)
    assert r1.to_json() == r2.to_json()
    d = json.loads(r1.to_json())
    assert set(d) == {"name", "statistic", "p_value", "n", "seed", "passed", "details"}


def test_report_validation():
    with pytest.raises(ValueError):
        TestReport("x", 0.0, 1.5, 10)
    with pytest.raises(ValueError):
        MomentReport([(1, 1)], [1.0], [0.0], [1.0])
    rep = MomentReport([(1, 1)], [1.25], [0.1], [1.0])
    assert rep.max_z_score == pytest.approx(2.5) and rep.passed
    assert not MomentReport([(1, 1)], [1.35], [0.1], [1.0]).passed


def test_gaussian_marginal():
    spec = SystemSpec.gaussian(0.5, 1.0)
    from sieveifs.sieve import sample_marginal

    z = sample_marginal(spec, 0.6, 4000, rng=stream(5))
    assert ks_one_sample(z, sst.norm(0, math.sqrt(1 / 0.75)).cdf).passed


def test_covariance_and_mean_pass():
    spec = SystemSpec.bernoulli(0.5)
    rep = covariance_battery(spec, [(0.5, 1.0), (0.25, 0.75)], 20000, seed=1)
    assert rep.passed
    assert mean_test(spec, 5000, seed=1).passed


def test_scale_invariance_bounds():
    spec = SystemSpec.bernoulli(0.5)
    with pytest.raises(ConfigurationError):
        scale_invariance_test(spec, [0.6, 0.9], 1.5, 200)
    rep = scale_invariance_test(spec, [0.4, 0.8], 0.5, 400, seed=2, n_perm=199)
    assert 0 < rep.p_value <= 1


def test_correlation_decay_endpoints():
    spec = SystemSpec.bernoulli(0.5)
    curve = correlation_decay(spec, [1.0, 2.0, 8.0], 5000, seed=3)
    assert curve.empirical[0] == 1.0 and curve.closed_form[0] == pytest.approx(1.0)
    assert curve.monotone
    assert abs(curve.empirical[1] - curve.closed_form[1]) < 4 * curve.stderr[1]


def test_correlation_stderr_scale():
    rng = stream(6)
    u = rng.normal(size=20000)
    v = 0.6 * u + 0.8 * rng.normal(size=20000)
    r, se = correlation_with_stderr(u, v)
    # normal theory: (1 - rho^2) / sqrt(n)
    assert se == pytest.approx(0.64 / math.sqrt(20000), rel=0.1)
    assert abs(r - 0.6) < 4 * se
    with pytest.raises(ConfigurationError):
        correlation_with_stderr(np.ones(10), u[:10])


def test_ks_calibration_plain():
    def run(seed):
        rng = stream(seed, "ks-null")
        return ks_two_sample(rng.normal(size=300), rng.normal(size=300), seed=seed)

    assert rejection_rate(run, range(300)) <= 0.03


def test_scale_invariance_identity():
    spec = SystemSpec.bernoulli(0.5)
    assert scale_invariance_test(spec, [0.3, 0.6], 1.0, 500, seed=4, n_perm=199).passed


def test_centred_gaussian_cross_moment():
    # x E Q^2 / ((1 - EM) y + (EM - EM^2) x) with EM = 1/2, EQ^2 = 1
    spec = SystemSpec.gaussian(0.5, 1.0)
    rep = covariance_battery(spec, [(0.5, 1.0)], 40000, seed=5)
    assert rep.closed_form[0] == pytest.approx(0.5 / (0.5 + 0.25 * 0.5))
    assert rep.passed


def test_correlation_decay_far_ratio():
    spec = SystemSpec.bernoulli(0.5)
    curve = correlation_decay(spec, [1000.0], 10 ** 5, seed=6)
    assert abs(curve.closed_form[0]) < 0.05 and abs(curve.empirical[0]) < 0.05
