import math
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from sieveifs import ConfigurationError, Law, SystemSpec
from sieveifs.closed_forms import (
    PerpetuityMoments,
    binary_entropy,
    correlation,
    cross_moment,
    dimension_upper_bound,
    entropy_bounds,
    local_dimension_target,
    perpetuity_mean,
    second_moment_residual,
    singularity_threshold,
    stationary_covariance,
)

BC = PerpetuityMoments.bernoulli(Fraction(1, 2))

fracs = st.fractions(min_value=Fraction(1, 50), max_value=Fraction(49, 50), max_denominator=60)


def test_bernoulli_values_exact():
    assert perpetuity_mean(BC) == 1
    assert cross_moment(Fraction(1, 2), 1, BC) == Fraction(6, 5)
    assert cross_moment(1, 1, BC) == Fraction(4, 3)


@given(fracs, fracs, st.fractions(-3, 3, max_denominator=20), st.fractions(0, 3, max_denominator=20))
def test_second_moment_relation_exact(em, spread, eq, extra):
    # moments of independent M and Q with E M^2 < 1
    em2 = em * em + spread * (1 - em * em)
    if em2 >= 1:
        return
    m = PerpetuityMoments(em, em2, eq, eq * eq + extra)
    for x, y in ((Fraction(1, 3), Fraction(1, 2)), (Fraction(1, 5), 1), (1, 1)):
        assert second_moment_residual(x, y, m) == 0


@given(fracs)
def test_cross_moment_diagonal_is_stationary_second_moment(lam):
    m = PerpetuityMoments.bernoulli(lam)
    # E Z^2 from Z = lam Z + Q directly
    ez = Fraction(1, 2) / (1 - lam)
    ez2 = (Fraction(1, 2) + 2 * lam * Fraction(1, 2) * ez) / (1 - lam * lam)
    assert cross_moment(1, 1, m) == ez2


def test_centred_display_and_stationary_covariance():
    lam = 0.5
    m = PerpetuityMoments(lam, lam * lam, 0.0, 1.0)
    for s in (0.0, 0.3, 2.0):
        x, y = 1.0, math.exp(s)
        assert cross_moment(x, y, m) == pytest.approx(x / ((1 - lam) * y + (lam - lam * lam) * x))
        assert stationary_covariance(s, lam) == pytest.approx(cross_moment(x, y, m))
        assert stationary_covariance(-s, lam) == stationary_covariance(s, lam)


def test_correlation_limits():
    assert correlation(1.0, 1.0, PerpetuityMoments.bernoulli(0.5)) == pytest.approx(1.0)
    assert correlation(1 / 8, 1.0, PerpetuityMoments.bernoulli(0.5)) == pytest.approx(3 / 17)
    assert abs(correlation(1e-3, 1.0, PerpetuityMoments.bernoulli(0.5))) < 0.05


def test_from_spec_and_guards():
    g = PerpetuityMoments.from_spec(SystemSpec.gaussian(0.5, 2.0))
    assert (g.EQ, g.EQ2) == (0.0, 4.0)
    d = PerpetuityMoments.from_spec(SystemSpec.dickman())
    assert perpetuity_mean(d) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        cross_moment(0.5, 1.0, d)
    with pytest.raises(ConfigurationError):
        cross_moment(1.0, 0.5, BC)
    with pytest.raises(ConfigurationError):
        PerpetuityMoments.from_spec(SystemSpec.lindley(Law.gaussian(-1, 1)))
    with pytest.raises(ConfigurationError):
        PerpetuityMoments(0.5, 0.1, 0.0, 1.0)


def test_entropy_and_thresholds():
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert binary_entropy(0.0) == 0.0
        assert w
    ref = optimize.brentq(lambda t: binary_entropy(t) - t * math.log(2), 0.5, 0.99, xtol=1e-14)
    assert singularity_threshold() == pytest.approx(ref, abs=1e-9)
    assert abs(singularity_threshold() - 0.772908) < 1e-5
    assert dimension_upper_bound(0.8) == pytest.approx(1.92193, abs=1e-5)
    assert dimension_upper_bound(0.5) == 2.0
    assert local_dimension_target(0.8) == pytest.approx(1.152003, abs=1e-6)


def test_entropy_bounds_record():
    b = entropy_bounds(0.8)
    assert b.h1 == pytest.approx(b.h0 - 0.8 * math.log(2))
    assert b.lyap1 == pytest.approx(-0.8 * math.log(2))
    assert b.target < b.upper
