"""Jumps, p-variation and Stieltjes integrals of sieved paths."""

from dataclasses import dataclass, field
import functools
import math

import numpy as np
from scipy import integrate

from ._rng import stream
from ._validation import ConfigurationError, check_count, check_scalar
from .sieve import SievedPath, sample_paths
from .systems import phi, sample_limit

__all__ = [
    "VariationReport",
    "PowerLaw",
    "IntegrabilityReport",
    "IntegrationReport",
    "jump_catalog",
    "p_variation",
    "variation_bound",
    "integrate_h_dzeta",
    "integrate_zeta_dh",
    "by_parts_residual",
    "check_integrability",
    "integrate_to_zero",
    "count_jumps",
    "uniform_truncation_gap",
]


@dataclass
class VariationReport:
    p: float
    interval: tuple
    jump_pvar: float
    bound: float = None
    bound_stderr: float = None
    n_jumps: int = 0


def jump_catalog(path):
    """Ordered ``(x_k, zeta(x_k) - zeta(x_k-))`` for the nonzero jumps."""
    return path.jump_catalog


def _interval(path, a, b):
    a = path.a if a is None else check_scalar(a, "a")
    b = 1.0 if b is None else check_scalar(b, "b")
    if not path.a <= a <= b <= 1.0:
        raise ConfigurationError(f"[{a}, {b}] is not inside [{path.a}, 1]")
    return a, b


def _jumps_in(path, a, b):
    """Breakpoints in ``(a, b]`` with their increments."""
    br = path.breakpoints
    lo = np.searchsorted(br, a, side="right")
    hi = np.searchsorted(br, b, side="right")
    return br[lo:hi], path.increments[lo:hi]


@functools.lru_cache(maxsize=None)
def variation_bound(spec, p, a, b, n_mc=10 ** 5, seed=0):
    """``(log(b/a) 2 E|Z|^p / (1 - Phi(p)), stderr)`` or ``(None, None)`` if ``Phi(p) >= 1``."""
    ph = phi(spec, p)
    if not ph < 1:
        return None, None
    z = np.abs(sample_limit(spec, n_mc, rng=stream(seed, "variation-bound"))) ** p
    scale = math.log(b / a) * 2.0 / (1.0 - ph)
    return scale * float(z.mean()), scale * float(z.std(ddof=1) / math.sqrt(z.size))


def p_variation(path, p, a=None, b=None, with_bound=True):
    """``sum |Delta|^p`` over the jumps in ``(a, b]`` plus the expectation bound."""
    p = check_scalar(p, "p", low=0.0, high=1.0, closed_low=False)
    a, b = _interval(path, a, b)
    _, d = _jumps_in(path, a, b)
    d = d[d != 0]
    rep = VariationReport(p, (a, b), math.fsum(np.abs(d) ** p), n_jumps=int(d.size))
    if with_bound and path.spec is not None and a > 0:
        rep.bound, rep.bound_stderr = variation_bound(path.spec, p, a, b)
    return rep


def integrate_h_dzeta(path, h, a=None, b=None):
    """``sum_{x_k in (a, b]} h(x_k) (zeta(x_k) - zeta(x_k-))``."""
    a, b = _interval(path, a, b)
    x, d = _jumps_in(path, a, b)
    if x.size == 0:
        return 0.0
    return math.fsum(np.asarray(h(x), dtype=float) * d)


def integrate_zeta_dh(path, h, a=None, b=None):
    """``int_a^b zeta dh`` summed segment by segment: ``sum v_j (h(r_j) - h(l_j))``."""
    a, b = _interval(path, a, b)
    x, _ = _jumps_in(path, a, b)
    edges = np.concatenate([[a], x, [b]])
    start = np.searchsorted(path.breakpoints, a, side="right")
    vals = path.values[start:start + edges.size - 1]
    hv = np.asarray(h(edges), dtype=float)
    return math.fsum(vals * (hv[1:] - hv[:-1]))


def by_parts_residual(path, h, a=None, b=None):
    """``|int zeta dh + int h dzeta - (zeta(b)h(b) - zeta(a)h(a))|``."""
    a, b = _interval(path, a, b)
    za, zb = path.value_at(a), path.value_at(b)
    ha, hb = (float(v) for v in np.asarray(h(np.array([a, b])), dtype=float))
    lhs = integrate_zeta_dh(path, h, a, b) + integrate_h_dzeta(path, h, a, b)
    return abs(lhs - math.fsum([zb * hb, -za * ha]))


# ---------------------------------------------------------------------------
# integration down to zero
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLaw:
    """``h(x) = c x^beta``; integrability of ``|h|^p / t`` is decided analytically."""

    c: float = 1.0
    beta: float = 1.0

    def __call__(self, x):
        return self.c * np.asarray(x, dtype=float) ** self.beta


@dataclass
class IntegrabilityReport:
    value: float
    finite: bool
    method: str


_EPS = 1e-8
_DIVERGENCE = 1e6


def check_integrability(h, p):
    """Decide whether ``int_0^1 |h(t)|^p t^{-1} dt`` is finite.

    Power laws get the exact answer.  Otherwise the integral is computed on
    ``(1e-8, 1]`` in the variable ``log t``; it is declared divergent if it
    exceeds ``1e6`` or if its last two decades do not shrink geometrically.
    """
    p = check_scalar(p, "p", low=0.0, closed_low=False)
    if isinstance(h, PowerLaw):
        if h.c == 0:
            return IntegrabilityReport(0.0, True, "analytic")
        e = p * h.beta
        if e <= 0:
            return IntegrabilityReport(math.inf, False, "analytic")
        return IntegrabilityReport(abs(h.c) ** p / e, True, "analytic")

    def g(s):
        return abs(float(np.asarray(h(np.array([math.exp(s)])), dtype=float)[0])) ** p

    def piece(lo, hi):
        return integrate.quad(g, math.log(lo), math.log(hi), limit=200)[0]

    far = piece(_EPS, 1e-6)
    mid = piece(1e-6, 1e-4)
    total = far + mid + piece(1e-4, 1.0)
    shrinking = far <= 0.5 * mid or far <= 1e-12 * max(total, 1.0)
    finite = total <= _DIVERGENCE and shrinking
    return IntegrabilityReport(total, finite, "quadrature")


@dataclass
class IntegrationReport:
    p: float
    a_values: list
    integrability: IntegrabilityReport
    cauchy: list = field(default_factory=list)
    cauchy_stderr: list = field(default_factory=list)
    n: int = 0

    @property
    def decreasing(self):
        return all(x2 < x1 for x1, x2 in zip(self.cauchy, self.cauchy[1:]))


def integrate_to_zero(spec, h, p, a_values, n, tol=1e-8, rng=None):
    """Empirical ``L^p`` Cauchy check of ``I(a) = int_a^1 h dzeta`` as ``a -> 0``.

    One path on ``[min a, 1]`` per replicate serves every ``a`` in the list,
    so consecutive differences are coupled.
    """
    p = check_scalar(p, "p", low=0.0, high=1.0, closed_low=False)
    n = check_count(n, "n", minimum=2)
    a_values = sorted((check_scalar(a, "a", low=0.0, high=1.0, closed_low=False) for a in a_values), reverse=True)
    if len(a_values) < 2:
        raise ConfigurationError("need at least two values of a")
    if not phi(spec, p) < 1:
        raise ConfigurationError(f"Phi({p}) >= 1: p is not admissible")
    integ = check_integrability(h, p)
    if not integ.finite:
        raise ConfigurationError(f"int |h|^p / t looks divergent (quadrature value {integ.value:.4g})")
    paths = sample_paths(spec, a_values[-1], n, tol, rng)
    I = np.array([[integrate_h_dzeta(path, h, a, 1.0) for a in a_values] for path in paths])
    diffs = np.abs(np.diff(I, axis=1)) ** p
    return IntegrationReport(
        p, a_values, integ,
        diffs.mean(axis=0).tolist(),
        (diffs.std(axis=0, ddof=1) / math.sqrt(n)).tolist(),
        n,
    )


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def count_jumps(path, eps, lo, hi):
    """Number of jumps with ``|Delta| >= eps`` at breakpoints in ``(lo, hi]``."""
    _, d = _jumps_in(path, *_interval(path, lo, hi))
    return int(np.count_nonzero(np.abs(d) >= eps))


def uniform_truncation_gap(path, n, grid):
    """``max_x |zeta_n(x) - zeta_{2n}(x)|`` over a grid, from the stored draws."""
    if not isinstance(path, SievedPath) or path.marks is None:
        raise ConfigurationError("need a path that carries its draws")
    return max(abs(path.partial(n, x) - path.partial(2 * n, x)) for x in grid)
