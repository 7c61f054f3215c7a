import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sieveifs import (
    ConfigurationError,
    Family,
    Law,
    SystemSpec,
    TruncationError,
    check_conditions,
    compose,
    iterate_backward,
    iterate_to_limit,
    phi,
    sample_function,
    sample_limit,
    stream,
)
from sieveifs.systems import AffineMonoid, MaxAffineMonoid, MoebiusMonoid, random_walk_supremum, tail_constant

BC = SystemSpec.bernoulli(0.5)


# --- monoids: composing maps must agree with applying them in turn ---------

finite = st.floats(-5, 5, allow_nan=False)
positive = st.floats(0.05, 5)


@given(finite, finite, finite, finite, finite)
def test_affine_monoid_composition(a1, b1, a2, b2, z):
    m = AffineMonoid.compose((a1, b1), (a2, b2))
    assert AffineMonoid.apply(m, z) == pytest.approx(a1 * (a2 * z + b2) + b1, abs=1e-9)


@given(finite, positive, finite, positive, st.floats(0, 10))
def test_max_affine_monoid_composition(c1, d1, c2, d2, z):
    m = MaxAffineMonoid.compose((c1, d1), (c2, d2))
    direct = max(c1, d1 * max(c2, d2 * z))
    assert MaxAffineMonoid.apply(m, z) == pytest.approx(direct, rel=1e-12, abs=1e-12)


@given(st.lists(positive, min_size=1, max_size=30), st.floats(0, 10))
def test_moebius_monoid_matches_continued_fraction(xis, z):
    m = MoebiusMonoid.identity(())
    for xi in xis:  # outermost first
        m = MoebiusMonoid.compose(m, (0.0, 1.0, 1.0, xi))
    direct = z
    for xi in reversed(xis):
        direct = 1.0 / (direct + xi)
    assert MoebiusMonoid.apply(m, z) == pytest.approx(direct, rel=1e-9)


def test_identity_elements():
    for mono, z in ((AffineMonoid, 0.3), (MaxAffineMonoid, 1.7), (MoebiusMonoid, 0.4)):
        assert mono.apply(mono.identity(()), z) == pytest.approx(z)


# --- spec construction -----------------------------------------------------

def test_spec_validation():
    with pytest.raises(ConfigurationError):
        SystemSpec.bernoulli(1.0)
    with pytest.raises(ConfigurationError):
        SystemSpec.lindley(0.5)
    with pytest.raises(ConfigurationError):
        SystemSpec.continued_fraction(Law.gaussian(1, 1))
    assert SystemSpec.lindley(Law.gaussian(-1, 1), z0=0.2).z0 == 1.0


@pytest.mark.parametrize("spec", [
    BC, SystemSpec.gaussian(0.5, 2.0), SystemSpec.dickman(),
    SystemSpec.affine(Law.uniform(-0.5, 0.8), Law.gaussian(1, 1)),
    SystemSpec.lindley(Law.gaussian(-1, 1)), SystemSpec.continued_fraction(Law.gamma(3.0)),
    SystemSpec.constant(Law.uniform()),
], ids=lambda s: s.family.value)
def test_dict_roundtrip(spec):
    assert SystemSpec.from_dict(spec.to_dict()) == spec


# --- conditions ------------------------------------------------------------

def test_phi_closed_forms():
    assert phi(BC, 1.0) == 0.5
    assert phi(SystemSpec.dickman(), 2.0) == pytest.approx(1 / 3)
    assert phi(SystemSpec.lindley(Law.gaussian(-1, 1)), 1.0) == pytest.approx(math.exp(-0.5))
    # E xi^-2 for Gamma(3) is Gamma(1)/Gamma(3) = 1/2
    assert phi(SystemSpec.continued_fraction(Law.gamma(3.0)), 1.0) == pytest.approx(0.5)


def test_phi_monte_carlo_against_quadrature():
    spec = SystemSpec.affine(Law.uniform(-0.5, 0.8), Law.gaussian(1, 1))
    value, se = phi(spec, 0.5, n_mc=200_000, rng=stream(1), return_stderr=True)
    exact = (0.5 ** 1.5 + 0.8 ** 1.5) / 1.5 / 1.3
    assert abs(value - exact) <= 4 * se


def test_conditions_report_and_gate():
    rep = check_conditions(BC)
    assert rep.passed and rep.I_nonempty
    assert rep.mean_log_lip == pytest.approx(math.log(0.5))
    bad = SystemSpec.affine(Law.uniform(1.5, 3.0), Law.gaussian())
    assert not check_conditions(bad).passed
    with pytest.raises(ConfigurationError):
        sample_limit(bad, 10)
    assert set(rep.to_dict()) >= {"K_f", "mean_log_lip", "mean_disp", "phi_table", "passed"}


def test_phi_divergence_detected():
    # uniform(0, 1) xi gives E xi^-2 = inf
    spec = SystemSpec.continued_fraction(Law.uniform(0.0, 1.0))
    assert phi(spec, 1.0) == math.inf


def test_tail_constant_sure_and_mean():
    c, sure = tail_constant(BC)
    assert sure and c == pytest.approx(2.0)
    c, sure = tail_constant(SystemSpec.gaussian(0.5))
    assert not sure and c == pytest.approx(math.sqrt(2 / math.pi) / 0.5)


# --- iteration -------------------------------------------------------------

def test_compose_order():
    f, g = (sample_function(SystemSpec.constant(Law.constant(v)), stream(0)) for v in (0.1, 0.9))
    # constant maps: the outermost (first) one wins
    assert compose([f, g], 0.5) == 0.1
    assert compose([g, f], 0.5) == 0.9


def test_iterate_backward_bernoulli_is_binary_sum():
    rng = stream(3, "digits")
    fs = [sample_function(BC, rng) for _ in range(20)]
    expected = sum(f.params["q"] * 0.5 ** k for k, f in enumerate(fs))
    assert compose(fs, 0.0) == pytest.approx(expected)
    assert 0.0 <= iterate_backward(BC, 10, stream(1)) <= 2.0


def test_iterate_to_limit_certificate():
    v, n = iterate_to_limit(BC, 1e-9, stream(4))
    assert 0.5 ** n * 2.0 <= 1e-9 < 0.5 ** (n - 1) * 2.0
    v2, _ = iterate_to_limit(SystemSpec.gaussian(0.5), 1e-6, stream(4))
    assert math.isfinite(v2)


def test_iteration_cap():
    with pytest.raises(TruncationError) as err:
        iterate_to_limit(BC, 1e-12, stream(0), n_max=5)
    assert err.value.n_used == 5 and err.value.bound > 1e-12


# --- limit laws against independent oracles ---------------------------------

N = 20_000


def test_bernoulli_half_is_uniform():
    z = sample_limit(BC, N, rng=stream(10))
    assert stats.kstest(z, stats.uniform(0, 2).cdf).pvalue > 0.01


def test_gaussian_variance():
    z = sample_limit(SystemSpec.gaussian(0.5, 1.0), N, rng=stream(11))
    assert stats.kstest(z, stats.norm(0, math.sqrt(1 / 0.75)).cdf).pvalue > 0.01


def test_dickman_moments():
    z = sample_limit(SystemSpec.dickman(), N, rng=stream(12))
    assert abs(z.mean() - 1.0) <= 4 * z.std() / math.sqrt(N)
    z2 = z * z
    assert abs(z2.mean() - 1.5) <= 4 * z2.std() / math.sqrt(N)


def test_lindley_against_walk_supremum():
    xi = Law.gaussian(-1.0, 1.0)
    z = sample_limit(SystemSpec.lindley(xi), 5000, rng=stream(13))
    ref = random_walk_supremum(xi, 5000, stream(14), n_steps=400)
    assert stats.ks_2samp(z, ref).pvalue > 0.01


def test_continued_fraction_fixed_point():
    spec = SystemSpec.continued_fraction(Law.gamma(3.0))
    z = sample_limit(spec, N, rng=stream(15))
    xi = Law.gamma(3.0).sample(stream(16), N)
    w = 1.0 / (xi + sample_limit(spec, N, rng=stream(17)))
    assert stats.ks_2samp(z, w).pvalue > 0.01


def test_constant_family_limit():
    z = sample_limit(SystemSpec.constant(Law.uniform()), N, rng=stream(18))
    assert stats.kstest(z, "uniform").pvalue > 0.01


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.9))
def test_bernoulli_limit_in_hull(lam):
    z = sample_limit(SystemSpec.bernoulli(lam), 200, rng=stream(19))
    assert np.all((z >= 0) & (z <= 1 / (1 - lam) + 1e-12))
