"""The sixteen acceptance checks, each returning one :class:`TestReport`.

``run_battery`` executes them in order with a shared master seed.  Every
check draws from its own named stream, so any subset can be rerun alone and
reproduces the same numbers.
"""

import math
import os
import tempfile
import time

import numpy as np
from scipy import stats as _st

from ._rng import stream
from .closed_forms import dimension_upper_bound, singularity_threshold
from .dimension import (
    DyadicSquare,
    bivariate_ifs_sample,
    exact_square_measure,
    golden_rows,
    local_dimension_fit,
    lyapunov_average,
    mc_square_measure,
    read_golden,
)
from .laws import Law
from .markov import conditional_forward, conditional_reverse, generator_fd_check, generator_forward
from .paths import by_parts_residual, p_variation, variation_bound
from .sieve import sample_chains, sample_coupled, sample_marginal, sample_paths, sample_strip
from .stats import (
    TestReport,
    correlation_with_stderr,
    covariance_battery,
    energy_two_sample_2d,
    ks_one_sample,
    ks_two_sample,
    marginal_oracle_test,
    mean_test,
    scale_invariance_test,
)
from .svg import read_scatter_svg
from .systems import SystemSpec, sample_limit

__all__ = ["builtin_families", "CRITERIA", "run_criterion", "run_battery"]


def builtin_families():
    """One representative ``SystemSpec`` per family."""
    return {
        "bernoulli": SystemSpec.bernoulli(0.5),
        "gaussian": SystemSpec.gaussian(0.5, 1.0),
        "dickman": SystemSpec.dickman(),
        "affine": SystemSpec.affine(Law.uniform(-0.5, 0.8), Law.gaussian(1.0, 1.0)),
        "constant": SystemSpec.constant(Law.uniform(0.0, 1.0)),
        "lindley": SystemSpec.lindley(Law.gaussian(-1.0, 1.0)),
        "continued_fraction": SystemSpec.continued_fraction(Law.gamma(3.0)),
    }


def _combine(name, seed, parts, n, statistic=None, p_value=None, **details):
    ok = all(p.passed for p in parts) if parts else False
    stat = statistic if statistic is not None else min(p.p_value for p in parts)
    pv = p_value if p_value is not None else min(p.p_value for p in parts)
    return TestReport(name, float(stat), float(pv), n, seed, bool(ok),
                      {"parts": [p.to_dict() for p in parts], **details})


def _z_report(name, seed, n, estimate, stderr, target, **details):
    z = (estimate - target) / stderr
    return TestReport(name, z, float(2 * _st.norm.sf(abs(z))), n, seed, abs(z) <= 3.0,
                      {"estimate": estimate, "stderr": stderr, "target": target, **details})


def marginal_invariance(seed=1, n=10 ** 4):
    parts = [marginal_oracle_test(spec, 0.3, n, seed) for spec in builtin_families().values()]
    return _combine("marginal-invariance", seed, parts, n)


def uniform_marginal(seed=1, n=10 ** 4):
    bc = SystemSpec.bernoulli(0.5)
    parts = []
    for x in (0.25, 1.0):
        z = sample_marginal(bc, x, n, rng=stream(seed, "uniform-marginal", str(x)))
        parts.append(ks_one_sample(z, _st.uniform(0.0, 2.0).cdf, f"uniform-x={x}", seed, max_distance=0.02))
    return _combine("uniform-marginal", seed, parts, n, statistic=max(p.statistic for p in parts))


def covariance(seed=1, n=10 ** 5):
    rep = covariance_battery(SystemSpec.bernoulli(0.5), [(0.5, 1.0), (1.0, 1.0)], n, seed)
    z = rep.max_z_score
    return TestReport("covariance", z, float(min(1.0, 2 * 2 * _st.norm.sf(z))), n, seed, rep.passed, rep.to_dict())


def mean_formula(seed=1, n=10 ** 5):
    parts = [mean_test(SystemSpec.bernoulli(0.5), n, seed), mean_test(SystemSpec.dickman(), n, seed)]
    return _combine("mean-formula", seed, parts, n, statistic=max(abs(p.statistic) for p in parts))


def scale_invariance(seed=1, n=5000):
    return scale_invariance_test(SystemSpec.bernoulli(0.5), [0.2, 0.4], 2.0, n, seed)


def disjoint_independence(seed=1, n=10 ** 4):
    v = sample_chains(SystemSpec.bernoulli(0.5), [[(0.0, 0.4)], [(0.6, 1.0)]], n, rng=stream(seed, "disjoint"))
    r, se = correlation_with_stderr(v[:, 0], v[:, 1])
    return _z_report("disjoint-independence", seed, n, r, se, 0.0, sets=[[0.0, 0.4], [0.6, 1.0]])


def construction_equivalence(seed=1, n=10 ** 4, horizon_T=400.0):
    fams = builtin_families()
    parts = []
    for name in ("bernoulli", "continued_fraction"):
        spec = fams[name]
        strip = sample_strip(spec, [0.3], n, horizon_T, stream(seed, "strip", name))[:, 0]
        chains = sample_marginal(spec, 0.3, n, rng=stream(seed, "strip-chains", name))
        parts.append(ks_two_sample(strip, chains, f"strip-vs-uniform-{name}", seed))
    return _combine("construction-equivalence", seed, parts, n, horizon_T=horizon_T)


def jump_sum(seed=1, n=10 ** 4):
    bc = SystemSpec.bernoulli(0.5)
    a = math.exp(-1.0)
    paths = sample_paths(bc, a, n, rng=stream(seed, "jump-sum"))
    sums = np.array([p_variation(p, 1.0, a, 1.0, with_bound=False).jump_pvar for p in paths])
    est, se = float(sums.mean()), float(sums.std(ddof=1) / math.sqrt(n))
    bound, _ = variation_bound(bc, 1.0, a, 1.0)
    rep = _z_report("jump-sum", seed, n, est, se, 1.0, bound=bound)
    rep.passed = bool(rep.passed and est <= bound)
    return rep


def by_parts(seed=1, n=1000):
    bc = SystemSpec.bernoulli(0.5)
    a = math.exp(-1.0)
    paths = sample_paths(bc, a, n, rng=stream(seed, "by-parts"))
    res = max(by_parts_residual(p, lambda t: t) for p in paths)
    return TestReport("by-parts", res, 1.0 if res < 1e-12 else 0.0, n, seed, res < 1e-12, {"threshold": 1e-12})


def markov_tower(seed=1, n=10 ** 4):
    lam = 1.0 / 3.0
    spec = SystemSpec.bernoulli(lam)
    direct = sample_limit(spec, n, rng=stream(seed, "tower-direct"))
    z = sample_marginal(spec, 0.5, n, rng=stream(seed, "tower-start"))
    fwd = conditional_forward(z, lam, 0.5, 0.5, rng=stream(seed, "tower-forward"))
    rev = conditional_reverse(z, lam, 0.5, 0.25, rng=stream(seed, "tower-reverse"))
    parts = [ks_two_sample(fwd, direct, "forward-0.5-to-1", seed),
             ks_two_sample(rev, direct, "reverse-0.5-to-0.25", seed)]
    return _combine("markov-tower", seed, parts, n)


def generator_value(seed=1, n=10 ** 6):
    lam = 1.0 / 3.0
    val, bound = generator_forward(1.0, lam, [0.0, 1.0], return_bound=True)
    series_ok = abs(val - 1.0 / 12.0) <= 1e-8 and bound <= 1e-8
    fd = generator_fd_check(1.0, lam, [0.0, 1.0], 0.01, n, stream(seed, "generator-fd"))
    ok = series_ok and fd.consistent and abs(fd.closed_form - 1.0 / 12.0) <= 1e-8
    return TestReport("generator-value", fd.deviation, 1.0 if ok else 0.0, n, seed, bool(ok),
                      {"series": val, "series_bound": bound, "fd": fd.to_dict()})


def singularity(seed=1):
    root = singularity_threshold()
    upper = dimension_upper_bound(0.8)
    ok = abs(root - 0.772908) <= 1e-5 and abs(upper - 1.92) <= 5e-3
    return TestReport("singularity-threshold", root, 1.0 if ok else 0.0, 0, seed, ok,
                      {"threshold": root, "upper_bound_0.8": upper})


def local_dimension(seed=1):
    est = local_dimension_fit((1.0, 1.0), 0.8, (4, 10), mode="exact")
    ok = abs(est.slope - 1.152003) <= 0.1
    return TestReport("local-dimension", est.slope, 1.0 if ok else 0.0, 0, seed, ok, est.to_dict())


def oracle_soundness(seed=1, n=10 ** 5):
    golden = read_golden()
    parts = []
    ok = True
    for orient, z1, z2, k, x, depth in golden_rows()[1:7]:
        sq = DyadicSquare((z1, z2), k, orient)
        iv = exact_square_measure(sq, x, depth)
        coarse = exact_square_measure(sq, x, k + 2)
        finer = exact_square_measure(sq, x, k + 4)
        est, se = mc_square_measure(sq, x, n, stream(seed, "soundness", k, str(z1), str(z2)))
        inside = iv.lo - 3 * se <= est <= iv.hi + 3 * se
        contracts = finer.width_exact <= coarse.width_exact
        matches = golden[(orient, z1, z2, k, x, depth)] == (iv.lo_exact, iv.hi_exact)
        ok = ok and inside and contracts and matches
        parts.append({"z": [z1, z2], "k": k, "lo": iv.lo, "hi": iv.hi, "mc": est, "stderr": se,
                      "inside": inside, "contracts": contracts, "golden_match": matches})
    worst = max(max(p["lo"] - p["mc"], p["mc"] - p["hi"], 0.0) / p["stderr"] for p in parts)
    return TestReport("oracle-soundness", worst, 1.0 if ok else 0.0, n, seed, bool(ok), {"squares": parts})


def figure_scatter(seed=1, n=10 ** 4):
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "scatter.svg")
        code = main(["scatter", "--system", "bc", "--lambda", "0.5", "--x", "0.8", "--n", str(n),
                     "--seed", str(seed), "--output", out, "--format", "svg"])
        with open(out) as fh:
            pts = read_scatter_svg(fh.read())
    in_box = bool(code == 0 and pts.shape == (n, 2) and np.all((pts >= 0) & (pts <= 2)))
    cdf = _st.uniform(0.0, 2.0).cdf
    parts = [ks_one_sample(pts[:, j], cdf, f"scatter-marginal-{j}", seed, max_distance=0.02) for j in (0, 1)]
    rep = _combine("figure-scatter", seed, parts, n, statistic=max(p.statistic for p in parts), in_box=in_box)
    rep.passed = bool(rep.passed and in_box)
    return rep


def planar_ifs(seed=1, n=5000):
    ifs = bivariate_ifs_sample(0.8, n, stream(seed, "ifs"))
    sieved = sample_coupled(SystemSpec.bernoulli(0.5), [0.8, 1.0], n, rng=stream(seed, "ifs-sieved"))
    energy = energy_two_sample_2d(ifs, sieved, seed=seed, name="ifs-vs-sieved")
    mean, se = lyapunov_average(0.8, 200, 10 ** 4, stream(seed, "lyapunov"))
    lyap = _z_report("lyapunov", seed, 200, mean, se, -0.8 * math.log(2.0))
    return _combine("planar-ifs", seed, [energy, lyap], n)


CRITERIA = {
    1: marginal_invariance,
    2: uniform_marginal,
    3: covariance,
    4: mean_formula,
    5: scale_invariance,
    6: disjoint_independence,
    7: construction_equivalence,
    8: jump_sum,
    9: by_parts,
    10: markov_tower,
    11: generator_value,
    12: singularity,
    13: local_dimension,
    14: oracle_soundness,
    15: figure_scatter,
    16: planar_ifs,
}


def run_criterion(number, seed=1):
    rep = CRITERIA[number](seed=seed)
    rep.details["criterion"] = number
    return rep


def run_battery(seed=1, only=None, callback=None):
    """Run the selected criteria (all by default) and return their reports in order."""
    reports = []
    for number in sorted(only or CRITERIA):
        t = time.perf_counter()
        rep = run_criterion(number, seed)
        reports.append(rep)
        if callback is not None:
            callback(number, rep, time.perf_counter() - t)
    return reports
