import numpy as np
import pytest
from sklearn.base import clone

from sieveifs import ConfigurationError, SystemSpec
from sieveifs.estimators import LocalDimensionEstimator, SievedProcessSampler


def test_sampler_params_and_clone():
    est = SievedProcessSampler(SystemSpec.bernoulli(0.5), sets=(0.5, 1.0), random_state=3)
    assert est.get_params()["sets"] == (0.5, 1.0)
    twin = clone(est)
    assert twin.get_params()["random_state"] == 3
    a = est.fit().sample(200)
    b = twin.fit().sample(200)
    assert a.shape == (200, 2) and np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 2))


def test_sampler_from_dict_and_rejection():
    spec = SystemSpec.bernoulli(0.5)
    est = SievedProcessSampler(spec.to_dict(), random_state=0).fit()
    assert est.conditions_.passed
    with pytest.raises(ConfigurationError):
        SievedProcessSampler("bc").fit()


def test_sampler_needs_fit():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        SievedProcessSampler(SystemSpec.bernoulli(0.5)).sample(5)


def test_local_dimension_estimator():
    est = LocalDimensionEstimator(x=0.8, k_min=4, k_max=8).fit([[1.0, 1.0]])
    assert est.predict().shape == (1,)
    assert abs(est.predict()[0] - est.target_) < 0.15
    with pytest.raises(ConfigurationError):
        est.predict([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ConfigurationError):
        LocalDimensionEstimator().fit([1.0, 1.0])
