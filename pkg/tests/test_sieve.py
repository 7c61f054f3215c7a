import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sieveifs import (
    ConfigurationError,
    IntervalSet,
    Law,
    SievedPath,
    SystemSpec,
    TruncationError,
    sample_coupled,
    sample_marginal,
    sample_path,
    sample_paths,
    sample_set_indexed,
    sample_strip,
    stream,
)
from sieveifs.sieve import (
    ThinningCounters,
    records_fast_path,
    sample_poisson_atoms,
    sieved_iteration_finite_t,
    sieved_limit_uniform_construction,
)

BC = SystemSpec.bernoulli(0.5)

intervals = st.lists(
    st.tuples(st.floats(0, 1), st.floats(0.001, 0.5)).map(lambda t: (t[0], t[0] + t[1])),
    min_size=1, max_size=5,
)


@given(intervals)
def test_interval_set_measure_and_membership(ivs):
    s = IntervalSet(ivs)
    # merged pieces are disjoint and ordered
    for (l1, h1), (l2, h2) in zip(s.intervals, s.intervals[1:]):
        assert h1 < l2
    grid = np.linspace(-0.1, 1.7, 4001)
    naive = np.zeros_like(grid, dtype=bool)
    for lo, hi in ivs:
        naive |= (grid >= lo) & (grid <= hi)
    assert np.array_equal(s.contains(grid), naive)
    assert s.measure <= sum(hi - lo for lo, hi in ivs) + 1e-12


def test_interval_set_coercion_and_errors():
    assert IntervalSet.coerce(0.4).intervals == ((0.0, 0.4),)
    assert IntervalSet.coerce((0.2, 0.3)).intervals == ((0.2, 0.3),)
    assert IntervalSet.coerce([(0, 0.1), (0.05, 0.2)]).intervals == ((0.0, 0.2),)
    assert IntervalSet([(0, 0.4)]).isdisjoint(IntervalSet([(0.6, 1)]))
    with pytest.raises(ConfigurationError):
        IntervalSet([(0.5, 0.5)])
    with pytest.raises(ConfigurationError):
        sample_set_indexed(BC, [[(0.5, 1.5)]])


def test_finite_horizon_sieve_uses_marks():
    atoms = sample_poisson_atoms(BC, 40.0, rng=stream(1))
    assert all(a.t < b.t for a, b in zip(atoms, atoms[1:]))
    A = IntervalSet([(0.0, 0.5)])
    active = [a.fn for a in atoms if a.x <= 0.5]
    expected = sum(f.params["q"] * 0.5 ** k for k, f in enumerate(active))
    assert sieved_iteration_finite_t(atoms, A, 0.0) == pytest.approx(expected)
    assert sieved_iteration_finite_t([], A, 0.3) == 0.3


def test_thinning_counters():
    c = ThinningCounters(np.array([0.9, 0.1, 0.5, 0.2, 0.95]))
    assert c.T(4, 0.5) == 3
    assert c.S(2, 0.5) == 3
    assert c.S(0, 0.5) == 0
    with pytest.raises(ValueError):
        c.S(4, 0.5)


def test_scalar_reference_loop_matches_chains():
    ref = np.array([sieved_limit_uniform_construction(BC, 0.3, 1e-8, stream(2, i)) for i in range(2000)])
    fast = sample_marginal(BC, 0.3, 2000, rng=stream(3))
    assert stats.ks_2samp(ref, fast).pvalue > 0.01


def test_scalar_loop_returns_draws():
    value, draws = sieved_limit_uniform_construction(BC, 0.5, 1e-6, stream(4), return_draws=True)
    z = 0.0
    for u, f in reversed(draws):
        if u <= 0.5:
            z = f.eval(z)
    assert value == z


def test_nested_sets_coupled():
    # the chain for [0, 0.3] is extended by the chain for [0, 1]: same draws, same first digit structure
    v = sample_coupled(BC, [0.3, 1.0], 20_000, rng=stream(5))
    r = np.corrcoef(v[:, 0], v[:, 1])[0, 1]
    # closed-form correlation at ratio 1/0.3
    from sieveifs.closed_forms import PerpetuityMoments, correlation

    assert abs(r - correlation(0.3, 1.0, PerpetuityMoments.bernoulli(0.5))) < 0.03


def test_total_space_measure_scaling():
    # on [0, 2] the set [0, 1] has half the mass: zeta([0, 1]) still has the limit law
    v = sample_set_indexed(BC, [[(0.0, 1.0)], [(1.0, 2.0)]], total_space_measure=2.0, rng=stream(6), n=5000)
    assert stats.kstest(v[:, 0], stats.uniform(0, 2).cdf).pvalue > 0.01
    one = sample_set_indexed(BC, [0.5], rng=stream(7))
    assert isinstance(one, list) and len(one) == 1


def test_truncation_tolerance_respected():
    # dropping all but the certified depth cannot move the value by more than tol
    a = sample_marginal(BC, 0.5, 500, tol=1e-4, rng=stream(8))
    b = sample_marginal(BC, 0.5, 500, tol=1e-4, rng=stream(8))
    assert np.array_equal(a, b)


def test_strip_matches_chains():
    s = sample_strip(BC, [0.5], 5000, 300.0, stream(9))[:, 0]
    c = sample_marginal(BC, 0.5, 5000, rng=stream(10))
    assert stats.ks_2samp(s, c).pvalue > 0.01


# --- paths -----------------------------------------------------------------

@pytest.fixture(scope="module")
def bc_paths():
    return sample_paths(BC, math.exp(-1), 200, rng=stream(11))


def test_paths_are_exact(bc_paths):
    rng = stream(12)
    for p in bc_paths[:20]:
        for x in np.concatenate([[p.a, 1.0], rng.uniform(p.a, 1.0, 5), p.breakpoints[:3]]):
            assert p.value_at(x) == pytest.approx(p.recompute(x), abs=1e-12)


def test_path_marginals(bc_paths):
    paths = sample_paths(BC, 0.5, 3000, rng=stream(13))
    v = np.array([p.value_at(0.7) for p in paths])
    assert stats.kstest(v, stats.uniform(0, 2).cdf).pvalue > 0.01


def test_path_structure(bc_paths):
    p = bc_paths[0]
    assert np.all(np.diff(p.breakpoints) > 0)
    assert p.values.size == p.breakpoints.size + 1
    assert all(d != 0 for _, d in p.jump_catalog)
    d = p.to_dict()
    assert set(d) == {"a", "breakpoints", "values", "truncation_tol"}
    with pytest.raises(ValueError):
        p.value_at(0.1)


def test_path_rejects_zero_a():
    with pytest.raises(ConfigurationError):
        sample_path(BC, 0.0)


def test_unbounded_lip_paths_exact():
    spec = SystemSpec.affine(Law.uniform(-0.5, 1.2), Law.gaussian(1, 1))
    for p in sample_paths(spec, 0.4, 20, tol=1e-8, rng=stream(14)):
        for x in (0.4, 0.55, 0.9, 1.0):
            assert p.value_at(x) == pytest.approx(p.recompute(x), abs=1e-6)


def test_sieved_path_validation():
    with pytest.raises(ValueError):
        SievedPath(0.5, [0.7, 0.6], [1, 2, 3], 0.0)
    with pytest.raises(ValueError):
        SievedPath(0.5, [0.7], [1], 0.0)


def test_records_fast_path_vs_general():
    spec = SystemSpec.constant(Law.uniform())
    fast = [records_fast_path(spec, 0.2, rng=stream(15, i)).value_at(0.6) for i in range(2000)]
    slow = [p.value_at(0.6) for p in sample_paths(spec, 0.2, 2000, rng=stream(16))]
    assert stats.ks_2samp(fast, slow).pvalue > 0.01


def test_records_fast_path_structure():
    spec = SystemSpec.constant(Law.uniform())
    p = records_fast_path(spec, 0.1, rng=stream(17))
    # values are i.i.d. uniform draws; between records the path is flat
    assert np.all((p.values >= 0) & (p.values <= 1))
    with pytest.raises(TruncationError):
        records_fast_path(spec, 0.1, horizon_T=1e-6, rng=stream(18))
    with pytest.raises(ConfigurationError):
        records_fast_path(BC, 0.1)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.9), st.integers(0, 1000))
def test_path_value_at_a_has_limit_support(a, seed):
    p = sample_path(BC, a, rng=stream(seed, "hyp"))
    assert np.all((p.values >= 0) & (p.values <= 2))
