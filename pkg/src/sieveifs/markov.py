"""Markov structure of the Bernoulli-convolution sieved process.

For ``f(z) = lam z + Q`` with ``lam < 1/2`` the value ``z = zeta(x)``
determines the whole coefficient sequence ``q_k`` with
``z = sum lam^{k-1} q_k``.  Moving from ``x`` to ``x + u`` inserts fresh maps
between consecutive recovered maps; moving down to ``y < x`` deletes each
recovered map independently.  Both are simulated on the digit level.

Floating point pins ``z`` only to about 1e-16, so only the leading digits
are determined by the input.  Digits below :func:`reliable_depth` are drawn
afresh as fair coins, which is their conditional law given the prefix under
the product structure of the attractor.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from numpy.polynomial import Polynomial

from ._rng import check_rng
from ._validation import (
    ConfigurationError,
    NotInSupportError,
    check_count,
    check_scalar,
)

__all__ = [
    "DigitExpansion",
    "GeneratorReport",
    "reliable_depth",
    "recover_digits",
    "recover_digits_many",
    "reconstruct",
    "conditional_forward",
    "conditional_reverse",
    "forward_conditional_mean",
    "generator_forward",
    "generator_reverse",
    "generator_fd_check",
]

SUPPORT_TOL = 1e-9
_EPS = np.finfo(float).eps


def _check_lam(lam):
    lam = check_scalar(lam, "lambda", low=0.0, high=0.5, closed_low=False)
    return lam


def reliable_depth(lam):
    """Number of leading digits that a double-precision ``z`` determines."""
    lam = _check_lam(lam)
    hull = 1.0 / (1.0 - lam)
    if lam == 0.5:
        return 52
    gap = (1.0 - 2.0 * lam) / (1.0 - lam)
    return int(math.floor(math.log((gap / 4.0) / (_EPS * hull)) / math.log(1.0 / lam)))


@dataclass(frozen=True)
class DigitExpansion:
    lam: float
    digits: tuple
    residual: float

    @property
    def depth(self):
        return len(self.digits)


def recover_digits_many(z, lam, depth, strict=True):
    """Vectorised greedy recovery; returns an ``(n, depth)`` int8 array.

    At ``lam = 0.5`` a terminating binary expansion has a second,
    ``...0111`` form.  ``strict`` raises on those; otherwise the
    terminating form is returned.  Sampled doubles always terminate
    somewhere, hence the relaxed mode for the conditional samplers.
    """
    lam = _check_lam(lam)
    depth = check_count(depth, "depth")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    hull = 1.0 / (1.0 - lam)
    bad = (z < -SUPPORT_TOL) | (z > hull + SUPPORT_TOL)
    if bad.any():
        raise NotInSupportError(f"z = {z[bad][0]!r} lies outside [0, {hull:g}]")
    out = np.zeros((z.size, depth), dtype=np.int8)
    if lam == 0.5:
        return _binary_digits(z, depth, out, strict)
    top = lam * hull  # lam / (1 - lam), end of the lower branch
    gap = 1.0 - top
    mid = 0.5 * (top + 1.0)
    w = np.clip(z, 0.0, hull)
    scale_tol = SUPPORT_TOL
    for k in range(depth):
        if scale_tol < gap / 4:
            in_gap = (w > top + scale_tol) & (w < 1.0 - scale_tol)
            if in_gap.any():
                raise NotInSupportError(
                    f"z = {z[in_gap][0]!r} falls in a gap of the attractor at level {k + 1}"
                )
        q = w > mid
        out[:, k] = q
        w = np.clip((w - q) / lam, 0.0, hull)
        scale_tol /= lam
    return out


def _binary_digits(z, depth, out, strict):
    # z = sum_k 2^{-(k-1)} q_k; doubling is exact in binary floating point
    w = np.clip(z, 0.0, 2.0)
    for k in range(depth):
        q = w >= 1.0
        out[:, k] = q
        w = (w - q) * 2.0
    terminated = (w == 0.0) & (z > 0.0)
    if strict and terminated.any():
        raise NotInSupportError(
            f"z = {z[terminated][0]!r} is a dyadic rational whose expansion terminates "
            "within the requested depth; its digit sequence is not unique"
        )
    return out


def recover_digits(z, lam, depth=None):
    """Digits ``q_1..q_depth`` of ``z = sum lam^{k-1} q_k`` on the attractor."""
    lam = _check_lam(lam)
    z = check_scalar(z, "z")
    depth = reliable_depth(lam) if depth is None else check_count(depth, "depth")
    digits = recover_digits_many([z], lam, depth)[0]
    hull = 1.0 / (1.0 - lam)
    slack = max(0.0, -z, z - hull)
    return DigitExpansion(lam, tuple(int(d) for d in digits), lam ** depth * hull + slack + 8 * _EPS * hull)


def reconstruct(expansion):
    """Partial sum ``sum lam^{k-1} q_k`` (compensated)."""
    lam = expansion.lam
    return math.fsum(lam ** k * q for k, q in enumerate(expansion.digits))


# ---------------------------------------------------------------------------
# conditional samplers
# ---------------------------------------------------------------------------


def _depth_for(lam, tol):
    return max(1, int(math.ceil(math.log(tol * (1.0 - lam)) / math.log(lam))))


def _digit_table(z, lam, need, rng):
    """Known digits to the reliable depth, fresh fair digits below."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    known = min(reliable_depth(lam), need)
    table = np.empty((z.size, need), dtype=np.int8)
    table[:, :known] = recover_digits_many(z, lam, known, strict=False)
    if need > known:
        table[:, known:] = rng.random((z.size, need - known)) < 0.5
    return table


def _weights(lam, n):
    return lam ** np.arange(n)


def conditional_forward(z, lam, x, u, tol=1e-12, rng=None, return_insertions=False):
    """Draw ``zeta(x + u)`` given ``zeta(x) = z``.

    Before each recovered map ``g_k`` an independent geometric number ``G_k``
    (support ``{0, 1, ...}``, ``P(G = j) = p^j (1 - p)``, ``p = u / (x + u)``)
    of fresh maps is inserted.  Equivalently every position of the merged
    sequence is a fresh map with probability ``p``.  ``z`` may be an array;
    one draw is made per entry.  With ``return_insertions=True`` the
    number of fresh maps before ``g_1`` comes back as well.
    """
    lam = _check_lam(lam)
    x = check_scalar(x, "x", low=0.0, closed_low=False)
    u = check_scalar(u, "u", low=0.0, closed_low=False)
    tol = check_scalar(tol, "tol", low=0.0, closed_low=False)
    rng = check_rng(rng)
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    p = u / (x + u)
    positions = _depth_for(lam, tol)
    digits = _digit_table(zs, lam, positions, rng)
    fresh = rng.random((zs.size, positions)) < p
    fresh_q = rng.random((zs.size, positions)) < 0.5
    # the j-th non-fresh position takes recovered digit number j
    rank = np.cumsum(~fresh, axis=1) - 1
    recovered = np.take_along_axis(digits, np.clip(rank, 0, positions - 1), axis=1)
    coeff = np.where(fresh, fresh_q, recovered).astype(float)
    out = coeff @ _weights(lam, positions)
    if return_insertions:
        first = np.where((~fresh).any(axis=1), (~fresh).argmax(axis=1), positions)
        return (out[0] if scalar else out), (first[0] if scalar else first)
    return out[0] if scalar else out


def conditional_reverse(z, lam, x, y, tol=1e-12, rng=None):
    """Draw ``zeta(y)`` given ``zeta(x) = z`` for ``0 < y <= x``.

    Each recovered map is kept with probability ``y / x`` and replaced by the
    identity otherwise; the kept ones are composed in their original order.
    """
    lam = _check_lam(lam)
    x = check_scalar(x, "x", low=0.0, closed_low=False)
    y = check_scalar(y, "y", low=0.0, high=x, closed_low=False)
    tol = check_scalar(tol, "tol", low=0.0, closed_low=False)
    rng = check_rng(rng)
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    keep_p = y / x
    need = _depth_for(lam, tol)
    out = np.zeros(zs.size)
    kept = np.zeros(zs.size, dtype=np.int64)
    # digits are consumed in blocks until every draw has `need` kept digits
    known = reliable_depth(lam)
    recovered = recover_digits_many(zs, lam, known, strict=False)
    offset = 0
    block = max(need, 64)
    while np.any(kept < need):
        if offset < known:
            d = recovered[:, offset:offset + block]
        else:
            d = (rng.random((zs.size, block)) < 0.5).astype(np.int8)
        keep = (rng.random(d.shape) < keep_p) & (kept[:, None] < need)
        rank = kept[:, None] + np.cumsum(keep, axis=1) - 1
        with np.errstate(under="ignore"):
            w = np.where(keep, lam ** np.maximum(rank, 0), 0.0)
        out += (d * w).sum(axis=1)
        kept += keep.sum(axis=1)
        offset += d.shape[1]
    return out[0] if scalar else out


def forward_conditional_mean(expansion, p):
    """Exact ``E(zeta(x+u) | zeta(x) = z)`` with ``p = u/(x+u)``.

    ``p / (2(1 - lam)) + sum_k q_k lam^{k-1} ((1-p)/(1-lam p))^k``.
    """
    lam = expansion.lam
    r = (1.0 - p) / (1.0 - lam * p)
    return p / (2.0 * (1.0 - lam)) + math.fsum(
        q * lam ** k * r ** (k + 1) for k, q in enumerate(expansion.digits)
    )


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _as_poly(h):
    if isinstance(h, Polynomial):
        poly = h
    elif callable(h):
        raise ConfigurationError("h must be a polynomial (coefficient list or Polynomial)")
    else:
        poly = Polynomial(np.asarray(h, dtype=float))
    if poly.degree() > 4:
        raise ConfigurationError("h may have degree at most 4")
    return poly


def _lip_on_hull(poly, lam):
    hull = 1.0 / (1.0 - lam)
    d = poly.deriv()
    pts = [0.0, hull]
    if d.degree() >= 1:
        pts += [r.real for r in d.deriv().roots() if abs(r.imag) < 1e-12 and 0 <= r.real <= hull]
    return max(abs(d(t)) for t in pts) if poly.degree() >= 1 else 0.0


def _series_depth(lip, lam, target, shift):
    # smallest K with 2 lip lam^{K + shift} / (1 - lam) <= target
    if lip == 0:
        return 1
    return max(1, int(math.ceil(math.log(target * (1.0 - lam) / (2.0 * lip)) / math.log(lam) - shift)))


def _tails(z, digits, lam):
    """``zhat_k = sum_{i>k} lam^{i-1} q_i`` for ``k = 0..len(digits)``."""
    partial = np.concatenate([[0.0], np.cumsum(digits * _weights(lam, digits.size))])
    return z - partial


def generator_forward(z, lam, h, trunc=None, n_mc=None, rng=None, target=1e-8, return_bound=False):
    """Truncated forward-generator series ``sum_k [E h(z - (1-lam) zhat_k + lam^k Q) - h(z)]``.

    ``Q`` is averaged exactly over ``{0, 1}``, so ``n_mc`` and ``rng`` are
    accepted for interface symmetry and unused.  The tail after ``trunc``
    terms is at most ``2 Lip(h) lam^{trunc} / (1 - lam)``.
    """
    lam = _check_lam(lam)
    poly = _as_poly(h)
    lip = _lip_on_hull(poly, lam)
    depth = _series_depth(lip, lam, target, 0) if trunc is None else check_count(trunc, "trunc", minimum=1)
    depth = min(depth, reliable_depth(lam))
    digits = np.array(recover_digits(z, lam, depth).digits, dtype=float)
    zhat = _tails(z, digits, lam)[:depth]
    k = np.arange(depth)
    base = z - (1.0 - lam) * zhat
    terms = 0.5 * (poly(base) + poly(base + lam ** k)) - poly(z)
    value = math.fsum(terms)
    bound = 2.0 * lip * lam ** depth / (1.0 - lam)
    if bound > target:
        warnings.warn(f"forward series truncated with certified error {bound:.2e} > {target:.0e}", RuntimeWarning)
    return (value, bound) if return_bound else value


def generator_reverse(z, lam, h, trunc=None, target=1e-8, return_bound=False):
    """Truncated reverse-generator series ``sum_{k>=1} [h(z + (1/lam - 1) zhat_{k-1} - lam^{k-2} q_k) - h(z)]``."""
    lam = _check_lam(lam)
    poly = _as_poly(h)
    lip = _lip_on_hull(poly, lam)
    depth = _series_depth(lip, lam, target, -1) if trunc is None else check_count(trunc, "trunc", minimum=1)
    depth = min(depth, reliable_depth(lam))
    digits = np.array(recover_digits(z, lam, depth).digits, dtype=float)
    zhat = _tails(z, digits, lam)
    k = np.arange(1, depth + 1)
    moved = z + (1.0 / lam - 1.0) * zhat[k - 1] - lam ** (k - 2.0) * digits
    value = math.fsum(poly(moved) - poly(z))
    bound = 2.0 * lip * lam ** (depth - 1) / (1.0 - lam)
    if bound > target:
        warnings.warn(f"reverse series truncated with certified error {bound:.2e} > {target:.0e}", RuntimeWarning)
    return (value, bound) if return_bound else value


@dataclass
class GeneratorReport:
    z: float
    closed_form: float
    fd_estimate: float
    fd_stderr: float
    delta: float
    slack_C: float
    n: int

    @property
    def deviation(self):
        return abs(self.closed_form - self.fd_estimate)

    @property
    def consistent(self):
        return self.deviation <= 3.0 * self.fd_stderr + self.slack_C * self.delta

    def to_dict(self):
        return {**self.__dict__, "deviation": self.deviation, "consistent": self.consistent}


def generator_fd_check(z, lam, h, delta, n_mc, rng=None, slack_C=None, chunk=200_000):
    """Finite-difference Monte Carlo of the forward generator at ``x = 1``, ``u = e^delta - 1``.

    ``slack_C`` defaults to ``Lip(h)`` on the hull; for ``h = id`` the exact
    conditional mean (:func:`forward_conditional_mean`) shows the bias
    coefficient stays below that at the tested points.
    """
    lam = _check_lam(lam)
    delta = check_scalar(delta, "delta", low=1e-3, high=0.1)
    n_mc = check_count(n_mc, "n_mc", minimum=2)
    rng = check_rng(rng)
    poly = _as_poly(h)
    slack = _lip_on_hull(poly, lam) if slack_C is None else float(slack_C)
    u = math.expm1(delta)
    hz = poly(z)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        d = poly(conditional_forward(np.full(m, z), lam, 1.0, u, rng=rng)) - hz
        total += math.fsum(d)
        total_sq += math.fsum(d * d)
        done += m
    mean = total / n_mc
    var = max(total_sq / n_mc - mean * mean, 0.0) * n_mc / (n_mc - 1)
    closed = generator_forward(z, lam, poly)
    return GeneratorReport(float(z), closed, mean / delta, math.sqrt(var / n_mc) / delta, delta, slack, n_mc)
