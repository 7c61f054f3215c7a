"""Two-sample tests and moment checks used by the battery.

Every report records the seed and sample size it was built from, so
re-running with the same arguments gives a bit-identical result.
"""

from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np
from scipy import stats as _st

from ._rng import stream
from ._validation import ConfigurationError, check_count, check_sample, check_scalar
from .closed_forms import PerpetuityMoments, correlation, cross_moment, perpetuity_mean

__all__ = [
    "ALPHA",
    "TestReport",
    "MomentReport",
    "CurveReport",
    "ks_two_sample",
    "ks_one_sample",
    "energy_statistic",
    "energy_two_sample_2d",
    "mean_with_stderr",
    "correlation_with_stderr",
    "marginal_oracle_test",
    "covariance_battery",
    "scale_invariance_test",
    "correlation_decay",
    "mean_test",
    "rejection_rate",
]

ALPHA = 0.01
_MIN_KS = 100


def _clean(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return [_clean(x) for x in v]
    if isinstance(v, list):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


@dataclass
class TestReport:
    """Outcome of one statistical check."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_value: float
    n: int
    seed: object = None
    passed: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    def to_dict(self):
        return _clean(asdict(self))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class MomentReport:
    grid: list
    empirical: list
    stderr: list
    closed_form: list
    n: int = 0
    seed: object = None

    def __post_init__(self):
        if any(not s > 0 for s in self.stderr):
            raise ValueError("standard errors must be positive")

    @property
    def z_scores(self):
        return [(e - c) / s for e, c, s in zip(self.empirical, self.closed_form, self.stderr)]

    @property
    def max_z_score(self):
        return max(abs(z) for z in self.z_scores)

    @property
    def passed(self):
        return self.max_z_score <= 3.0

    def to_dict(self):
        return _clean({**asdict(self), "z_scores": self.z_scores, "max_z_score": self.max_z_score})


@dataclass
class CurveReport:
    ratios: list
    empirical: list
    stderr: list
    closed_form: list
    n: int = 0
    seed: object = None

    @property
    def monotone(self):
        """True if the closed-form curve is nonincreasing and the data never climb by more than 3 stderr."""
        e, s = self.empirical, self.stderr
        return all(e[i + 1] <= e[i] + 3 * math.hypot(s[i], s[i + 1]) for i in range(len(e) - 1))

    def to_dict(self):
        return _clean({**asdict(self), "monotone": self.monotone})


# ---------------------------------------------------------------------------
# generic tests
# ---------------------------------------------------------------------------


def ks_two_sample(a, b, name="ks-two-sample", seed=None, alpha=ALPHA):
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = check_sample(a, "a", min_size=_MIN_KS)
    b = check_sample(b, "b", min_size=_MIN_KS)
    res = _st.ks_2samp(a, b, method="asymp")
    p = float(min(1.0, max(0.0, res.pvalue)))
    return TestReport(name, float(res.statistic), p, int(min(a.size, b.size)), seed, p > alpha,
                      {"n_a": int(a.size), "n_b": int(b.size)})


def ks_one_sample(a, cdf, name="ks-one-sample", seed=None, max_distance=None, alpha=ALPHA):
    """One-sample KS against ``cdf``; with ``max_distance`` the pass rule is ``D < max_distance``."""
    a = check_sample(a, "a", min_size=_MIN_KS)
    res = _st.kstest(a, cdf, method="asymp")
    p = float(min(1.0, max(0.0, res.pvalue)))
    d = float(res.statistic)
    ok = d < max_distance if max_distance is not None else p > alpha
    return TestReport(name, d, p, int(a.size), seed, bool(ok), {"max_distance": max_distance})


def _as_points(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 2:
        raise ConfigurationError(f"{name} must be an (n, d) array with n >= 2")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return a


def _quad_forms(pooled, weights, block=1024):
    """``diag(W^T D W)`` for the Euclidean distance matrix ``D`` of ``pooled``, built in row blocks."""
    n = pooled.shape[0]
    sq = np.einsum("ij,ij->i", pooled, pooled)
    out = np.zeros(weights.shape[1])
    for s in range(0, n, block):
        blk = pooled[s:s + block]
        d2 = sq[s:s + block, None] + sq[None, :] - 2.0 * blk @ pooled.T
        np.maximum(d2, 0.0, out=d2)
        np.sqrt(d2, out=d2)
        out += np.einsum("ib,ib->b", weights[s:s + block], d2 @ weights)
    return out


def energy_statistic(a, b):
    """``n m / (n + m)`` times the V-statistic energy distance between samples ``a`` and ``b``."""
    a, b = _as_points(a, "a"), _as_points(b, "b")
    n, m = a.shape[0], b.shape[0]
    w = np.concatenate([np.full(n, 1.0 / n), np.full(m, -1.0 / m)])[:, None]
    return float(-_quad_forms(np.vstack([a, b]), w)[0]) * n * m / (n + m)


def energy_two_sample_2d(a, b, n_perm=999, seed=0, name="energy-two-sample", alpha=ALPHA):
    """Energy-distance test with a label-permutation p-value ``(1 + #{T* >= T}) / (B + 1)``."""
    a, b = _as_points(a, "a"), _as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ConfigurationError("samples have different dimensions")
    n_perm = check_count(n_perm, "n_perm", minimum=1)
    n, m = a.shape[0], b.shape[0]
    pooled = np.vstack([a, b])
    base = np.concatenate([np.full(n, 1.0 / n), np.full(m, -1.0 / m)])
    rng = stream(seed, "energy-permutations")
    perms = np.stack([rng.permutation(base) for _ in range(n_perm)], axis=1)
    w = np.concatenate([base[:, None], perms], axis=1)
    t = -_quad_forms(pooled, w) * n * m / (n + m)
    obs = t[0]
    # ties within rounding count as "at least as extreme"
    slack = 1e-9 * max(1.0, abs(obs))
    p = (1.0 + np.count_nonzero(t[1:] >= obs - slack)) / (n_perm + 1.0)
    return TestReport(name, float(obs), float(p), int(min(n, m)), seed, bool(p > alpha),
                      {"n_a": n, "n_b": m, "n_perm": n_perm})


def mean_with_stderr(v):
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def correlation_with_stderr(u, v):
    """Pearson correlation and its delta-method standard error (influence-function variance)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    su, sv = u.std(), v.std()
    if su == 0 or sv == 0:
        raise ConfigurationError("correlation undefined for a constant sample")
    a = (u - u.mean()) / su
    b = (v - v.mean()) / sv
    r = float(np.mean(a * b))
    infl = a * b - 0.5 * r * (a * a + b * b)
    return r, float(infl.std(ddof=1) / math.sqrt(u.size))


# ---------------------------------------------------------------------------
# tests tied to the sieved process
# ---------------------------------------------------------------------------


def marginal_oracle_test(spec, x, n, seed=0, tol=1e-10):
    """KS between sieved draws of ``zeta(x)`` and direct draws of the limit ``Z``."""
    from .sieve import sample_marginal
    from .systems import sample_limit

    x = check_scalar(x, "x", low=0.0, closed_low=False)
    n = check_count(n, "n", minimum=_MIN_KS)
    sieved = sample_marginal(spec, x, n, tol, stream(seed, "marginal-sieved", spec.family.value))
    direct = sample_limit(spec, n, tol, stream(seed, "marginal-direct", spec.family.value))
    rep = ks_two_sample(sieved, direct, f"marginal-{spec.family.value}", seed)
    rep.details["x"] = x
    return rep


def covariance_battery(spec, grid, n, seed=0, tol=1e-10):
    """Empirical ``E zeta(x) zeta(y)`` on ``grid`` against the closed form."""
    from .sieve import sample_coupled

    moments = PerpetuityMoments.from_spec(spec)
    if not moments.EM2 < 1:
        raise ConfigurationError("E M^2 >= 1: second moments are infinite")
    n = check_count(n, "n", minimum=2)
    emp, se, cf = [], [], []
    for i, (x, y) in enumerate(grid):
        lo, hi = min(x, y), max(x, y)
        pairs = sample_coupled(spec, [lo, hi], n, tol, stream(seed, "covariance", i))
        m, s = mean_with_stderr(pairs[:, 0] * pairs[:, 1])
        emp.append(m)
        se.append(s)
        cf.append(float(cross_moment(lo, hi, moments)))
    return MomentReport([tuple(g) for g in grid], emp, se, cf, n, seed)


def scale_invariance_test(spec, xs, c, n, seed=0, tol=1e-10, n_perm=999):
    """Energy test of ``(zeta(x_i))_i`` against an independent copy of ``(zeta(c x_i))_i``."""
    from .sieve import sample_coupled

    c = check_scalar(c, "c", low=0.0, closed_low=False)
    xs = [check_scalar(x, "x", low=0.0, closed_low=False) for x in xs]
    scaled = [c * x for x in xs]
    if any(not 0 < v <= 1.0 for v in xs + scaled):
        raise ConfigurationError("xs and c * xs must lie in (0, 1]")
    a = sample_coupled(spec, xs, n, tol, stream(seed, "scale-base"))
    b = sample_coupled(spec, scaled, n, tol, stream(seed, "scale-scaled"))
    rep = energy_two_sample_2d(a, b, n_perm, seed, "scale-invariance")
    rep.details.update(xs=xs, c=c)
    return rep


def correlation_decay(spec, ratios, n, seed=0, tol=1e-10):
    """Correlation of ``zeta(1 / r)`` and ``zeta(1)`` for each ratio ``r >= 1``."""
    from .sieve import sample_coupled

    moments = PerpetuityMoments.from_spec(spec)
    emp, se, cf = [], [], []
    for i, r in enumerate(ratios):
        r = check_scalar(r, "ratio", low=1.0)
        if r == 1.0:
            emp.append(1.0)
            se.append(0.0)
        else:
            pairs = sample_coupled(spec, [1.0 / r, 1.0], n, tol, stream(seed, "decay", i))
            c, s = correlation_with_stderr(pairs[:, 0], pairs[:, 1])
            emp.append(c)
            se.append(s)
        cf.append(float(correlation(1.0 / r, 1.0, moments)))
    return CurveReport(list(ratios), emp, se, cf, n, seed)


def mean_test(spec, n, seed=0, x=1.0, tol=1e-10):
    """``z``-test of the sieved mean against ``E Q / (1 - E M)``."""
    from .sieve import sample_marginal

    target = float(perpetuity_mean(PerpetuityMoments.from_spec(spec)))
    m, s = mean_with_stderr(sample_marginal(spec, x, n, tol, stream(seed, "mean", spec.family.value)))
    z = (m - target) / s
    return TestReport(f"mean-{spec.family.value}", z, float(2 * _st.norm.sf(abs(z))), n, seed, abs(z) <= 3.0,
                      {"mean": m, "stderr": s, "target": target})


def rejection_rate(run, seeds, alpha=ALPHA):
    """Fraction of ``run(seed)`` reports with p-value at or below ``alpha``."""
    seeds = list(seeds)
    return sum(run(s).p_value <= alpha for s in seeds) / len(seeds)
