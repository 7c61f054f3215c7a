import numpy as np
import pytest
from hypothesis import given, strategies as st

from sieveifs import ConfigurationError, check_rng, stream
from sieveifs._rng import spawn
from sieveifs._validation import check_count, check_sample, check_scalar


def test_stream_reproducible_and_keyed():
    a = stream(3, "paths", 4).random(5)
    assert np.array_equal(a, stream(3, "paths", 4).random(5))
    assert not np.array_equal(a, stream(3, "paths", 5).random(5))
    assert not np.array_equal(a, stream(4, "paths", 4).random(5))


def test_replicate_k_without_earlier_ones():
    # replicate 7 drawn alone equals replicate 7 drawn after 0..6
    seq = [stream(1, "rep", k).random() for k in range(8)]
    assert seq[7] == stream(1, "rep", 7).random()


def test_stream_rejects_bad_keys():
    with pytest.raises(TypeError):
        stream(0, 1.5)
    with pytest.raises(ValueError):
        stream(0, -1)


def test_check_rng_forms():
    g = stream(0)
    assert check_rng(g) is g
    assert check_rng(5).random() == stream(5).random()
    assert isinstance(check_rng(None), np.random.Generator)
    with pytest.raises(TypeError):
        check_rng("seed")
    kids = spawn(1, 3)
    assert len({k.random() for k in kids}) == 3


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_check_scalar_accepts_finite(v):
    assert check_scalar(v, "v") == v


def test_check_scalar_bounds():
    with pytest.raises(ConfigurationError):
        check_scalar(float("nan"), "v")
    with pytest.raises(ConfigurationError):
        check_scalar(0.0, "v", low=0.0, closed_low=False)
    with pytest.raises(ConfigurationError):
        check_scalar(2.0, "v", high=1.0)
    with pytest.raises(ConfigurationError):
        check_count(-1, "n")
    with pytest.raises(ConfigurationError):
        check_sample([1.0, np.inf], "a")
    with pytest.raises(ConfigurationError):
        check_sample([1.0], "a", min_size=2)
