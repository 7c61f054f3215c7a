import math

import numpy as np
import pytest
from scipy import integrate

from sieveifs import ConfigurationError, Law, stream

LAWS = [
    Law.constant(0.7),
    Law.two_point(0.0, 1.0, 0.3),
    Law.uniform(-0.5, 0.8),
    Law.gaussian(1.0, 2.0),
    Law.gamma(3.0, 0.5),
    Law.int_uniform(1, 4),
]


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_moments_match_samples(law):
    x = law.sample(stream(0, "law", law.kind), 200_000)
    assert abs(x.mean() - law.mean) <= 5 * x.std() / math.sqrt(x.size) + 1e-12
    x2 = x * x
    assert abs(x2.mean() - law.second_moment) <= 5 * x2.std() / math.sqrt(x.size) + 1e-12
    assert law.variance == pytest.approx(law.second_moment - law.mean ** 2, abs=1e-12)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_roundtrip_dict(law):
    assert Law.from_dict(law.to_dict()) == law


def test_uniform_log_moment_by_quadrature():
    law = Law.uniform(-0.5, 0.8)
    ref = integrate.quad(lambda t: math.log(abs(t)), -0.5, 0.8, points=[0.0])[0] / 1.3
    assert law.mean_log_abs() == pytest.approx(ref, rel=1e-9)


def test_neg_moment_divergence():
    assert Law.uniform(0.0, 1.0).neg_moment(1.0) == math.inf
    assert Law.gamma(3.0).neg_moment(1.0) == pytest.approx(0.5)


def test_support_and_sup_abs():
    assert Law.uniform(-0.5, 0.8).sup_abs == 0.8
    assert Law.gaussian().sup_abs == math.inf


def test_bad_parameters():
    with pytest.raises(ConfigurationError):
        Law.uniform(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        Law.gamma(-1.0)
    with pytest.raises(ConfigurationError):
        Law.from_dict({"kind": "cauchy"})
