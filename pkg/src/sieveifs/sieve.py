"""The sieved process: thinned backward iterations over Poisson atoms, and whole paths.

Three independent samplers produce the same law:

* :func:`sample_strip` realises the Poisson process on ``[0, T] x X`` and
  composes the atoms whose marks fall in the set (finite horizon).
* :func:`sample_chains` draws i.i.d. ``(U_i, f_i)`` and composes the maps with
  ``U_i`` in the set, truncating each set independently once its realised
  tail bound is certified.  Many sets share one stream (exact coupling).
* :func:`sample_paths` builds the whole step function ``x -> zeta(x)`` on
  ``[a, 1]`` by sweeping ``x`` upward through the realised marks and
  maintaining the backward composition in a segment tree.

:func:`sieved_limit_uniform_construction` is a plain scalar loop kept as the
reference for the vectorised code.
"""

from bisect import bisect_right
from dataclasses import dataclass, field
import math

import numpy as np

from ._rng import check_rng
from ._validation import (
    ConfigurationError,
    TruncationError,
    check_count,
    check_scalar,
)
from .systems import (
    N_MAX,
    Family,
    FunctionSample,
    SystemSpec,
    _require_conditions,
    compose,
    sample_function,
    tail_constant,
)

__all__ = [
    "IntervalSet",
    "SievedAtom",
    "SievedPath",
    "ThinningCounters",
    "sample_poisson_atoms",
    "sieved_iteration_finite_t",
    "sieved_limit_uniform_construction",
    "sample_chains",
    "sample_marginal",
    "sample_coupled",
    "sample_set_indexed",
    "sample_strip",
    "sample_path",
    "sample_paths",
    "records_fast_path",
]


# ---------------------------------------------------------------------------
# set descriptors
# ---------------------------------------------------------------------------


class IntervalSet:
    """A finite union of closed intervals with Lebesgue measure."""

    def __init__(self, intervals):
        ivs = []
        for lo, hi in intervals:
            lo = check_scalar(lo, "interval low")
            hi = check_scalar(hi, "interval high")
            if not lo < hi:
                raise ConfigurationError(f"interval [{lo}, {hi}] has no positive measure")
            ivs.append((lo, hi))
        if not ivs:
            raise ConfigurationError("empty set descriptor")
        ivs.sort()
        merged = [list(ivs[0])]
        for lo, hi in ivs[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        self.intervals = tuple((lo, hi) for lo, hi in merged)

    @classmethod
    def coerce(cls, obj):
        """Accept an IntervalSet, a point ``x`` (meaning ``[0, x]``), a pair or a list of pairs."""
        if isinstance(obj, IntervalSet):
            return obj
        if isinstance(obj, (int, float, np.floating)) and not isinstance(obj, bool):
            return cls([(0.0, float(obj))])
        obj = list(obj)
        if len(obj) == 2 and all(isinstance(v, (int, float, np.floating)) for v in obj):
            return cls([tuple(obj)])
        return cls([tuple(p) for p in obj])

    @property
    def measure(self):
        return math.fsum(hi - lo for lo, hi in self.intervals)

    @property
    def sup(self):
        return self.intervals[-1][1]

    @property
    def inf(self):
        return self.intervals[0][0]

    def contains(self, u):
        u = np.asarray(u)
        out = np.zeros(u.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (u >= lo) & (u <= hi)
        return out

    def isdisjoint(self, other):
        for lo1, hi1 in self.intervals:
            for lo2, hi2 in other.intervals:
                if lo1 <= hi2 and lo2 <= hi1:
                    return False
        return True

    def __repr__(self):
        return "IntervalSet(" + ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in self.intervals) + ")"


def _coerce_sets(sets, total):
    out = [IntervalSet.coerce(s) for s in sets]
    for s in out:
        if s.inf < 0 or s.sup > total:
            raise ConfigurationError(f"{s!r} is not inside [0, {total:g}]")
    return out


# ---------------------------------------------------------------------------
# atoms and counters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SievedAtom:
    t: float
    x: float
    fn: FunctionSample = field(repr=False)


def sample_poisson_atoms(spec, horizon_T, region=(0.0, 1.0), rng=None):
    """Atoms of a Poisson process with intensity ``Leb x Leb|region x nu`` on ``[0, T]``."""
    horizon_T = check_scalar(horizon_T, "horizon_T", low=0.0)
    lo, hi = (check_scalar(v, "region") for v in region)
    if not lo < hi:
        raise ConfigurationError("region must be a nonempty interval")
    rng = check_rng(rng)
    _require_conditions(spec)
    count = int(rng.poisson(horizon_T * (hi - lo))) if horizon_T > 0 else 0
    if count == 0:
        return []
    while True:
        t = np.sort(rng.uniform(0.0, horizon_T, count))
        if count == 1 or np.all(np.diff(t) > 0):
            break
    x = rng.uniform(lo, hi, count)
    return [SievedAtom(float(ti), float(xi), sample_function(spec, rng)) for ti, xi in zip(t, x)]


def _check_sorted(atoms):
    for prev, nxt in zip(atoms, atoms[1:]):
        if not prev.t < nxt.t:
            raise ConfigurationError("atoms must be sorted by strictly increasing t")


def sieved_iteration_finite_t(atoms, A, z0):
    """``f_{1,A} o ... o f_{N_A(t),A}(z0)``: earliest atom applied last."""
    _check_sorted(atoms)
    A = IntervalSet.coerce(A)
    z = float(z0)
    for atom in reversed(atoms):
        if A.contains(atom.x):
            z = atom.fn.eval(z)
    return z


@dataclass(frozen=True)
class ThinningCounters:
    """``T_n(x) = #{j <= n : U_j <= x}`` and its first-passage index ``S_n(x)``."""

    marks: np.ndarray

    def T(self, n, x):
        n = check_count(n, "n")
        return int(np.count_nonzero(np.asarray(self.marks[:n]) <= x))

    def S(self, n, x):
        n = check_count(n, "n")
        if n == 0:
            return 0
        hits = np.flatnonzero(np.asarray(self.marks) <= x)
        if n > hits.size:
            raise ValueError(f"only {hits.size} marks below {x} are stored")
        return int(hits[n - 1]) + 1


# ---------------------------------------------------------------------------
# scalar reference loop
# ---------------------------------------------------------------------------


def sieved_limit_uniform_construction(spec, x, tol=1e-10, rng=None, n_max=N_MAX, return_draws=False):
    """``zeta(x)`` from i.i.d. ``(U_i, f_i)`` with ``f_i`` used iff ``U_i <= x``.

    With ``return_draws=True`` the realised ``(U_i, f_i)`` list comes back too.
    """
    x = check_scalar(x, "x", low=0.0, high=1.0, closed_low=False)
    tol = check_scalar(tol, "tol", low=0.0, closed_low=False)
    rng = check_rng(rng)
    const, _ = tail_constant(spec)
    draws, active = [], []
    prod = 1.0
    while prod * const > tol:
        if len(draws) >= n_max:
            raise TruncationError("iteration cap reached", prod * const, len(draws))
        u = float(rng.random())
        f = sample_function(spec, rng)
        draws.append((u, f))
        if u <= x:
            active.append(f)
            prod *= f.lip
    value = compose(active, spec.z0)
    return (value, draws) if return_draws else value


# ---------------------------------------------------------------------------
# coupled chains over many sets
# ---------------------------------------------------------------------------


def _log(v):
    with np.errstate(divide="ignore"):
        return np.log(v)


def _chains_chunk(spec, sets, R, log_target, rng, n_max):
    m = len(sets)
    sups = np.array([s.sup for s in sets])
    cut = np.full((R, m), -1, dtype=np.int64)
    logprod = np.zeros((R, m))
    u_blocks, p_blocks = [], []
    used, block = 0, 64
    while np.any(cut < 0):
        if used >= n_max:
            raise TruncationError("iteration cap reached", float(np.exp(logprod[cut < 0].max() - log_target)), used)
        unc = cut < 0
        reach = np.where(unc, sups, 0.0).max(axis=1)
        # Draws with U above every uncertified set's supremum act as the
        # identity on all chains still running, so only the conditional
        # stream on [0, reach] needs to be realised.
        u = rng.random((R, block)) * reach[:, None]
        p = spec.draw(rng, (R, block))
        logl = _log(spec.lip(p))
        for j, s in enumerate(sets):
            act = s.contains(u)
            cum = logprod[:, j, None] + np.cumsum(np.where(act, logl, 0.0), axis=1)
            hit = cum <= log_target
            rows = unc[:, j] & hit.any(axis=1)
            cut[rows, j] = used + hit[rows].argmax(axis=1) + 1
            logprod[:, j] = cum[:, -1]
        u_blocks.append(u)
        p_blocks.append(p)
        used += block
        block = min(2 * block, 2048)

    u = np.concatenate(u_blocks, axis=1)
    params = {k: np.concatenate([b[k] for b in p_blocks], axis=1) for k in p_blocks[0]}
    z = np.full((R, m), spec.z0)
    for col in range(int(cut.max()) - 1, -1, -1):
        act = np.stack([s.contains(u[:, col]) for s in sets], axis=1) & (col < cut)
        if not act.any():
            continue
        pc = {k: v[:, col, None] for k, v in params.items()}
        z = np.where(act, spec.apply(pc, z), z)
    return z


def sample_chains(spec, sets, n, tol=1e-10, rng=None, total=1.0, chunk=4096, n_max=N_MAX):
    """Coupled draws of ``(zeta(A_1), ..., zeta(A_m))``, shape ``(n, m)``.

    Each replicate uses one stream ``(U_i, f_i)`` with ``U_i`` uniform on
    ``[0, total]``; each set is truncated at its own depth once the product
    of its active Lipschitz constants times the tail constant is ``<= tol``.
    """
    if not isinstance(spec, SystemSpec):
        raise ConfigurationError("sample_chains needs a SystemSpec")
    n = check_count(n, "n", minimum=1)
    tol = check_scalar(tol, "tol", low=0.0, closed_low=False)
    total = check_scalar(total, "total", low=0.0, closed_low=False)
    sets = _coerce_sets(sets, total)
    rng = check_rng(rng)
    const, _ = tail_constant(spec)
    log_target = math.log(tol) - math.log(const) if const > 0 else math.inf
    scaled = [IntervalSet([(lo / total, hi / total) for lo, hi in s.intervals]) for s in sets]
    out = np.empty((n, len(sets)))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        out[start:stop] = _chains_chunk(spec, scaled, stop - start, log_target, rng, n_max)
    return out


def sample_marginal(spec, x, n, tol=1e-10, rng=None):
    """``n`` independent draws of ``zeta(x)``."""
    x = check_scalar(x, "x", low=0.0, high=1.0, closed_low=False)
    return sample_chains(spec, [x], n, tol, rng)[:, 0]


def sample_coupled(spec, xs, n, tol=1e-10, rng=None):
    """``n`` replicates of the coupled vector ``(zeta(x_1), ..., zeta(x_m))``."""
    xs = [check_scalar(x, "x", low=0.0, high=1.0, closed_low=False) for x in xs]
    return sample_chains(spec, xs, n, tol, rng)


def sample_set_indexed(spec, sets, total_space_measure=1.0, tol=1e-10, rng=None, n=None):
    """Coupled ``(zeta(A_1), ..., zeta(A_m))`` from one ``(U_i, f_i)`` stream.

    Sets are finite unions of intervals inside ``[0, total_space_measure]``.
    Returns a list for a single replicate, or an ``(n, m)`` array.
    """
    out = sample_chains(spec, sets, 1 if n is None else n, tol, rng, total=total_space_measure)
    return out[0].tolist() if n is None else out


# ---------------------------------------------------------------------------
# Poisson strip
# ---------------------------------------------------------------------------


def sample_strip(spec, sets, n, horizon_T, rng=None, total=1.0):
    """Coupled finite-horizon values on the Poisson strip ``[0, T] x [0, total]``.

    Returns shape ``(n, m)``.  Each replicate realises ``Poisson(T total)``
    atoms in arrival order; each set composes the atoms marked inside it.
    """
    n = check_count(n, "n", minimum=1)
    horizon_T = check_scalar(horizon_T, "horizon_T", low=0.0, closed_low=False)
    sets = _coerce_sets(sets, total)
    rng = check_rng(rng)
    _require_conditions(spec)
    counts = rng.poisson(horizon_T * total, n)
    width = max(int(counts.max()), 1)
    t = rng.uniform(0.0, horizon_T, (n, width))
    t[np.arange(width)[None, :] >= counts[:, None]] = np.inf
    order = np.argsort(t, axis=1)
    t = np.take_along_axis(t, order, axis=1)
    with np.errstate(invalid="ignore"):
        tied = np.isfinite(t[:, 1:]) & (np.diff(t, axis=1) == 0)
    if tied.any():
        raise ConfigurationError("tied arrival times; rerun with another seed")
    marks = np.take_along_axis(rng.uniform(0.0, total, (n, width)), order, axis=1)
    params = spec.draw(rng, (n, width))
    valid = np.isfinite(t)
    z = np.full((n, len(sets)), spec.z0)
    for col in range(width - 1, -1, -1):
        act = np.stack([s.contains(marks[:, col]) for s in sets], axis=1) & valid[:, col, None]
        pc = {k: v[:, col, None] for k, v in params.items()}
        z = np.where(act, spec.apply(pc, z), z)
    return z


# ---------------------------------------------------------------------------
# exact paths
# ---------------------------------------------------------------------------


@dataclass
class SievedPath:
    """Right-continuous step function ``x -> zeta(x)`` on ``[a, 1]``.

    ``values[0]`` holds on ``[a, b_1)`` and ``values[j]`` on ``[b_j, b_{j+1})``.
    ``marks`` and ``params`` keep the realised draws so any value can be
    recomputed independently.
    """

    a: float
    breakpoints: np.ndarray
    values: np.ndarray
    truncation_tol: float
    spec: SystemSpec = field(default=None, repr=False)
    marks: np.ndarray = field(default=None, repr=False)
    params: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size != self.breakpoints.size + 1:
            raise ValueError("need one more value than breakpoints")
        if self.breakpoints.size and (
            np.any(np.diff(self.breakpoints) <= 0) or self.breakpoints[0] <= self.a or self.breakpoints[-1] > 1
        ):
            raise ValueError("breakpoints must increase strictly inside (a, 1]")

    @property
    def increments(self):
        return self.values[1:] - self.values[:-1]

    @property
    def jump_catalog(self):
        d = self.increments
        keep = d != 0
        return list(zip(self.breakpoints[keep].tolist(), d[keep].tolist()))

    def value_at(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.a) or np.any(x > 1):
            raise ValueError(f"x outside [{self.a}, 1]")
        return self.values[np.searchsorted(self.breakpoints, x, side="right")]

    def __call__(self, x):
        return self.value_at(x)

    def _lookup(self, x):
        return float(self.values[bisect_right(self.breakpoints.tolist(), x)])

    def partial(self, n, x):
        """Backward composition of the first ``n`` draws marked ``<= x``."""
        if self.marks is None:
            raise ValueError("path carries no draws")
        z = self.spec.z0
        for i in range(min(n, self.marks.size) - 1, -1, -1):
            if self.marks[i] <= x:
                z = float(self.spec.apply({k: v[i] for k, v in self.params.items()}, z))
        return z

    def recompute(self, x):
        """Independent evaluation of ``zeta(x)`` from the stored draws."""
        return self.partial(self.marks.size, x)

    @property
    def n_draws(self):
        return 0 if self.marks is None else int(self.marks.size)

    def to_dict(self):
        return {
            "a": self.a,
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
            "truncation_tol": self.truncation_tol,
        }


def _path_certificate(spec, a):
    """``(log constant, sure)`` for the uniform-on-[a, 1] truncation rule."""
    const, sure = tail_constant(spec)
    if not sure:
        const = const / a
    return math.log(const) if const > 0 else -math.inf, sure


def _paths_draw(spec, a, R, log_target, rng, n_max):
    """Draw phase: per-row depth so that the [a, 1] uniform bound is <= tol."""
    log_const = log_target[1]
    log_tol = log_target[0]
    bounded = spec.impl.sup_lip(spec.kw) <= 1.0
    cut = np.full(R, -1, dtype=np.int64)
    bound = np.full(R, np.inf)
    logprod = np.zeros(R)
    u_blocks, p_blocks = [], []
    used, block = 0, 32
    while np.any(cut < 0):
        if used >= n_max:
            raise TruncationError("iteration cap reached", float(np.exp(bound[cut < 0].min())), used)
        unc = cut < 0
        u = rng.random((R, block))
        p = spec.draw(rng, (R, block))
        logl = _log(spec.lip(p))
        cum = logprod[:, None] + np.cumsum(np.where(u <= a, logl, 0.0), axis=1)
        u_blocks.append(u)
        p_blocks.append(p)
        if bounded:
            # sup_{x >= a} of the active product is attained at x = a
            hit = cum + log_const <= log_tol
            rows = unc & hit.any(axis=1)
            first = hit[rows].argmax(axis=1)
            cut[rows] = used + first + 1
            bound[rows] = cum[rows, first] + log_const
        else:
            allu = np.concatenate(u_blocks, axis=1)
            rows = np.flatnonzero(unc)
            ul = allu[rows]
            ll = np.concatenate([_log(spec.lip(b))[rows] for b in p_blocks], axis=1)
            keys = np.where(ul > a, ul, np.inf)
            order = np.argsort(keys, axis=1)
            steps = np.where(np.isfinite(np.take_along_axis(keys, order, axis=1)),
                             np.take_along_axis(ll, order, axis=1), 0.0)
            excess = np.maximum(0.0, np.cumsum(steps, axis=1).max(axis=1))
            b = cum[rows, -1] + excess + log_const
            done = b <= log_tol
            cut[rows[done]] = used + block
            bound[rows[done]] = b[done]
        logprod = cum[:, -1]
        used += block
        block = min(2 * block, 4096)
    u = np.concatenate(u_blocks, axis=1)
    params = {k: np.concatenate([b[k] for b in p_blocks], axis=1) for k in p_blocks[0]}
    return u, params, cut, np.exp(bound)


def _paths_sweep(spec, a, u, params, cut):
    """Values after each breakpoint via a segment tree over draw indices.

    Leaves are the realised maps in draw order (identity while inactive); an
    internal node holds the composition of its children, left child outer.
    Sweeping ``x`` upward activates one leaf per breakpoint and refreshes its
    ancestors, so each path costs ``O(n log n)``.
    """
    R, width = u.shape
    mono = spec.monoid
    size = 1
    while size < max(width, 1):
        size *= 2
    used = np.arange(width)[None, :] < cut[:, None]
    pad = np.zeros((R, size - width), dtype=bool)
    ident = np.stack(mono.identity((R, size)))
    maps = np.stack([np.asarray(m, dtype=float) for m in spec.to_map(params)])
    full = ident.copy()
    full[:, :, :width] = np.where(used, maps, ident[:, :, :width])
    live = np.concatenate([used & (u <= a), pad], axis=1)
    levels = [np.where(live, full, ident)]
    while levels[-1].shape[2] > 1:
        cur = levels[-1]
        levels.append(np.stack(mono.compose(tuple(cur[:, :, 0::2]), tuple(cur[:, :, 1::2]))))
    keys = np.where(used & (u > a), u, np.inf)
    order = np.argsort(keys, axis=1)
    nb = np.count_nonzero(np.isfinite(keys), axis=1)
    steps = int(nb.max()) if R else 0
    values = np.full((R, steps + 1), np.nan)
    values[:, 0] = mono.apply(tuple(levels[-1][:, :, 0]), spec.z0)
    leaves = levels[0]
    by_len = np.argsort(-nb, kind="stable")
    remaining = R
    for s in range(steps):
        while nb[by_len[remaining - 1]] <= s:
            remaining -= 1
        rows = by_len[:remaining]
        pos = order[rows, s]
        leaves[:, rows, pos] = full[:, rows, pos]
        for lvl in range(1, len(levels)):
            below = levels[lvl - 1]
            pos = pos >> 1
            left = below[:, rows, 2 * pos]
            right = below[:, rows, 2 * pos + 1]
            levels[lvl][:, rows, pos] = np.stack(mono.compose(tuple(left), tuple(right)))
        values[rows, s + 1] = mono.apply(tuple(levels[-1][:, rows, 0]), spec.z0)
    return np.take_along_axis(keys, order, axis=1), nb, values


def sample_paths(spec, a, n, tol=1e-10, rng=None, n_max=N_MAX, memory_budget=2 ** 29):
    """``n`` independent exact paths of ``zeta`` on ``[a, 1]``.

    Every path uses one i.i.d. stream ``(U_i, f_i)``; depth is fixed by the
    tail bound at ``x = a`` (for families whose Lipschitz constants may
    exceed one, inflated by the largest realised excess over ``(a, x]``).
    """
    if not isinstance(spec, SystemSpec):
        raise ConfigurationError("sample_paths needs a SystemSpec")
    a = check_scalar(a, "a", low=0.0, high=1.0, closed_low=False)
    n = check_count(n, "n", minimum=1)
    tol = check_scalar(tol, "tol", low=0.0, closed_low=False)
    rng = check_rng(rng)
    log_const, _ = _path_certificate(spec, a)
    target = (math.log(tol), log_const)
    fields = spec.monoid.n_fields
    paths = []
    start = 0
    # Paths are processed in chunks sized by the expected depth.
    expected = max(64, int(40 / a))
    while start < n:
        R = max(1, min(n - start, memory_budget // (8 * 8 * fields * expected)))
        u, params, cut, bound = _paths_draw(spec, a, R, target, rng, n_max)
        breaks, nb, values = _paths_sweep(spec, a, u, params, cut)
        for r in range(R):
            k = int(nb[r])
            paths.append(SievedPath(
                a, breaks[r, :k], values[r, :k + 1], float(bound[r]), spec,
                u[r, :cut[r]].copy(), {key: v[r, :cut[r]].copy() for key, v in params.items()},
            ))
        start += R
    return paths


def sample_path(spec, a, tol=1e-10, rng=None, n_max=N_MAX):
    """One coupled realisation of ``(zeta(x))`` on ``[a, 1]``."""
    if a is not None and a == 0:
        raise ConfigurationError("a = 0 gives infinitely many breakpoints; use a > 0")
    return sample_paths(spec, a, 1, tol, rng, n_max)[0]


def records_fast_path(spec, a, horizon_T=None, rng=None):
    """Path of the degenerate system read off lower-left records.

    ``zeta(x)`` is the value carried by the earliest atom with mark ``<= x``;
    it changes only at record marks (atoms whose mark is below every earlier
    mark).
    """
    if spec.family is not Family.CONSTANT:
        raise ConfigurationError("records_fast_path needs the constant family")
    a = check_scalar(a, "a", low=0.0, high=1.0, closed_low=False)
    horizon_T = 50.0 / a if horizon_T is None else check_scalar(horizon_T, "horizon_T", low=0.0, closed_low=False)
    rng = check_rng(rng)
    _require_conditions(spec)
    # arrival order is index order once the times are sorted, and marks are
    # i.i.d., so the times themselves are not needed
    count = int(rng.poisson(horizon_T))
    marks = rng.uniform(0.0, 1.0, count)
    q = spec.kw["q"].sample(rng, count)
    if count == 0 or marks.min() > a:
        raise TruncationError("no atom below a within the horizon", math.inf, count)
    running = np.minimum.accumulate(marks)
    is_rec = np.concatenate([[True], marks[1:] < running[:-1]])
    rec_x, rec_q = marks[is_rec], q[is_rec]
    # records decrease; the first one at or below a fixes zeta(a)
    last = int(np.argmax(rec_x <= a))
    rec_x, rec_q = rec_x[: last + 1], rec_q[: last + 1]
    breaks = rec_x[:-1][::-1]
    values = rec_q[::-1]
    return SievedPath(a, breaks, values, 0.0, spec)
