"""The planar measure of ``(zeta(x), zeta(1))`` for the lam = 1/2 Bernoulli system.

Exact brackets come from enumerating the first ``D`` coin flips ``Q_n`` and
sieving indicators ``I_n``.  Given those, the pair equals
``(a_1 + 2^{-T} u, a_2 + 2^{-D} v)`` where ``T = sum I_n``, ``a_1`` and ``a_2``
are the truncated sums, and ``(u, v)`` is an independent copy of the pair.
Both coordinates of that copy are uniform on ``[0, 2]``, so the probability
of landing in a rectangle is squeezed between the Frechet bounds
``max(0, p_1 + p_2 - 1)`` and ``min(p_1, p_2)`` of the two marginal
probabilities.  All sums are carried out exactly (dyadic numbers as
integers, ``x`` as a rational) and rounded outward at the end.
"""

from dataclasses import dataclass, field
import enum
from fractions import Fraction
import importlib.resources
import math
import warnings

import numpy as np

from ._rng import check_rng
from ._validation import (
    ConfigurationError,
    EnumerationCostError,
    check_count,
    check_scalar,
)
from .closed_forms import local_dimension_target

__all__ = [
    "Orientation",
    "DyadicSquare",
    "MeasureInterval",
    "DimensionEstimate",
    "exact_rectangle_measure",
    "exact_square_measure",
    "mc_square_measure",
    "local_dimension_fit",
    "bivariate_ifs_sample",
    "ifs_maps",
    "lyapunov_average",
    "read_golden",
    "golden_rows",
    "MAX_DEPTH",
]

MAX_DEPTH = 14


class Orientation(str, enum.Enum):
    PLUS_PLUS = "plus-plus"
    CENTERED = "centered"


def _binary_string(v, k):
    """Digits ``g_1 g_2 ... g_m`` (last one 1) of ``v = sum g_j 2^{-(j-1)}``."""
    n = round(v * 2 ** k)
    if n == 0:
        return ""
    bits = format(n, "b").zfill(k + 1)
    return bits.rstrip("0")


@dataclass(frozen=True)
class DyadicSquare:
    """``z + [0, 2^-k]^2`` (plus-plus) or ``z + [-2^-k, 2^-k]^2`` (centered)."""

    z: tuple
    k: int
    orientation: Orientation = Orientation.CENTERED

    def __post_init__(self):
        k = check_count(self.k, "k")
        object.__setattr__(self, "k", k)
        z = tuple(float(check_scalar(v, "z")) for v in self.z)
        if len(z) != 2:
            raise ConfigurationError("z must be a pair")
        for v in z:
            if v * 2 ** k != round(v * 2 ** k):
                raise ConfigurationError(f"z coordinate {v} is not a multiple of 2^-{k}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @property
    def side(self):
        return 2.0 ** -self.k

    @property
    def bounds(self):
        """``((lo1, hi1), (lo2, hi2))``."""
        s = self.side
        if self.orientation is Orientation.PLUS_PLUS:
            return tuple((v, v + s) for v in self.z)
        return tuple((v - s, v + s) for v in self.z)

    def child(self):
        """The square one scale down at the same corner or centre."""
        return DyadicSquare(self.z, self.k + 1, self.orientation)

    @property
    def expansions(self):
        return tuple(_binary_string(v, self.k) for v in self.z)

    @property
    def substring_applicable(self):
        """True if the expansion of ``z_1`` occurs contiguously in that of ``z_2``."""
        e1, e2 = self.expansions
        return bool(e1) and bool(e2) and e1 in e2


@dataclass(frozen=True)
class MeasureInterval:
    lo: float
    hi: float
    depth: int
    lo_exact: Fraction = field(repr=False, default=None)
    hi_exact: Fraction = field(repr=False, default=None)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def width_exact(self):
        return self.hi_exact - self.lo_exact

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)


def _round_down(fr):
    v = float(fr)
    return math.nextafter(v, -math.inf) if Fraction(v) > fr else v


def _round_up(fr):
    v = float(fr)
    return math.nextafter(v, math.inf) if Fraction(v) < fr else v


def _exact_scale(lo, hi):
    # every marginal probability is a multiple of 2^-(bits) for dyadic corners
    bits = 1
    for v in (lo, hi):
        m, e = math.frexp(v) if v != 0 else (0.0, 0)
        while v * 2 ** bits != math.floor(v * 2 ** bits):
            bits += 1
    return bits + 1


def _marginal(lo, hi, offset, scale):
    """``P(offset + u / scale in [lo, hi])`` for ``u`` uniform on ``[0, 2]`` (shape of offset)."""
    a = np.clip((lo - offset) * scale, 0.0, 2.0)
    b = np.clip((hi - offset) * scale, 0.0, 2.0)
    return 0.5 * (b - a)


def exact_rectangle_measure(rect, x, depth, chunk=None):
    """Exact bracket of ``P(zeta(x) in [lo1, hi1], zeta(1) in [lo2, hi2])``.

    ``rect`` is ``((lo1, hi1), (lo2, hi2))`` with dyadic endpoints.
    """
    x = check_scalar(x, "x", low=0.0, high=1.0, closed_low=False, closed_high=False)
    depth = check_count(depth, "depth", minimum=1)
    if depth > MAX_DEPTH:
        raise EnumerationCostError(f"depth {depth} exceeds the cap {MAX_DEPTH} (cost 4^depth)")
    (lo1, hi1), (lo2, hi2) = ((float(a), float(b)) for a, b in rect)
    if not (lo1 <= hi1 and lo2 <= hi2):
        raise ConfigurationError("empty rectangle")
    D = depth
    bits = max(_exact_scale(lo1, hi1), _exact_scale(lo2, hi2))
    unit = float(2 ** bits)
    pats = np.arange(2 ** D)
    q = ((pats[:, None] >> np.arange(D)) & 1).astype(float)  # (2^D, D), column n = Q_{n+1}
    halves = 2.0 ** -np.arange(D)
    a2 = q @ halves
    p2 = _marginal(lo2, hi2, a2, 2.0 ** D)

    ind = (pats[:, None] >> np.arange(D)) & 1  # indicator patterns, same layout
    T = ind.sum(axis=1)
    rank = np.cumsum(ind, axis=1) - 1
    w1 = np.where(ind == 1, 2.0 ** -rank.clip(min=0), 0.0)  # (2^D, D)
    lo_sum = [0] * (D + 1)
    hi_sum = [0] * (D + 1)
    step = chunk or max(1, min(2 ** D, (1 << 23) // (2 ** D)))
    for start in range(0, 2 ** D, step):
        sl = slice(start, start + step)
        a1 = q @ w1[sl].T  # (2^D Q patterns, chunk of I patterns)
        p1 = _marginal(lo1, hi1, a1, (2.0 ** T[sl])[None, :])
        low = np.maximum(0.0, p1 + p2[:, None] - 1.0)
        high = np.minimum(p1, p2[:, None])
        low_i = np.rint(low.sum(axis=0) * unit).astype(np.int64)
        high_i = np.rint(high.sum(axis=0) * unit).astype(np.int64)
        for t in np.unique(T[sl]):
            sel = T[sl] == t
            lo_sum[t] += int(low_i[sel].sum())
            hi_sum[t] += int(high_i[sel].sum())
    fx = Fraction(x)
    denom = Fraction(2 ** D) * Fraction(int(unit))
    lo_exact = sum(fx ** t * (1 - fx) ** (D - t) * lo_sum[t] for t in range(D + 1)) / denom
    hi_exact = sum(fx ** t * (1 - fx) ** (D - t) * hi_sum[t] for t in range(D + 1)) / denom
    return MeasureInterval(_round_down(lo_exact), _round_up(hi_exact), D, lo_exact, hi_exact)


def exact_square_measure(sq, x, depth):
    """Exact bracket ``[lo, hi]`` of ``mu_x(sq)``; needs ``k + 2 <= depth <= 14``."""
    depth = check_count(depth, "depth", minimum=1)
    if depth > MAX_DEPTH:
        raise EnumerationCostError(f"depth {depth} exceeds the cap {MAX_DEPTH} (cost 4^depth)")
    if depth < sq.k + 2:
        raise ConfigurationError(f"depth must be at least k + 2 = {sq.k + 2}")
    return exact_rectangle_measure(sq.bounds, x, depth)


def mc_square_measure(sq, x, n, rng=None, tol=None):
    """Frequency of coupled draws ``(zeta(x), zeta(1))`` inside the square, with binomial stderr."""
    from .sieve import sample_coupled
    from .systems import SystemSpec

    n = check_count(n, "n", minimum=10 ** 4)
    tol = 1e-10 if tol is None else min(tol, 2.0 ** (-sq.k - 20))
    pairs = sample_coupled(SystemSpec.bernoulli(0.5), [x, 1.0], n, tol, check_rng(rng))
    (lo1, hi1), (lo2, hi2) = sq.bounds
    inside = (pairs[:, 0] >= lo1) & (pairs[:, 0] <= hi1) & (pairs[:, 1] >= lo2) & (pairs[:, 1] <= hi2)
    p = float(inside.mean())
    return p, math.sqrt(p * (1.0 - p) / n)


@dataclass
class DimensionEstimate:
    z: tuple
    x: float
    per_k: list
    slope: float
    slope_stderr: float
    intercept: float
    target: float
    applicable: bool = True
    mode: str = "exact"

    def to_dict(self):
        return {
            "z": list(self.z), "x": self.x, "mode": self.mode,
            "per_k": [list(r) for r in self.per_k],
            "slope": self.slope, "slope_stderr": self.slope_stderr,
            "intercept": self.intercept, "target": self.target,
            "applicable": self.applicable,
        }


def local_dimension_fit(z, x, k_range, mode="exact", rng=None, n=10 ** 6, orientation=Orientation.CENTERED):
    """Least-squares slope of ``log2 mu(B_{2^-k}(z))`` against ``-k``.

    Exact mode uses the midpoint of the enumeration bracket at depth ``k + 2``
    and reports half the bracket width (in log2 units) as uncertainty.
    """
    k_min, k_max = (check_count(v, "k") for v in k_range)
    if k_max <= k_min:
        raise ConfigurationError("k_range needs at least two scales for a slope")
    if mode == "exact" and k_max > 10:
        raise EnumerationCostError("exact mode supports k <= 10")
    if mode not in ("exact", "mc"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    ks = list(range(k_min, k_max + 1))
    sq0 = DyadicSquare(tuple(z), ks[0], orientation)
    applicable = sq0.substring_applicable
    if not applicable:
        warnings.warn("z does not satisfy the substring condition; the fit is exploratory", RuntimeWarning)
    rows = []
    if mode == "mc":
        from .sieve import sample_coupled
        from .systems import SystemSpec

        pairs = sample_coupled(SystemSpec.bernoulli(0.5), [x, 1.0], n, 1e-10, check_rng(rng))
    for k in ks:
        sq = DyadicSquare(tuple(z), k, orientation)
        if mode == "exact":
            iv = exact_square_measure(sq, x, k + 2)
            mid = iv.mid
            unc = (math.log2(iv.hi) - math.log2(iv.lo)) / 2 if iv.lo > 0 else math.inf
        else:
            (lo1, hi1), (lo2, hi2) = sq.bounds
            inside = ((pairs[:, 0] >= lo1) & (pairs[:, 0] <= hi1)
                      & (pairs[:, 1] >= lo2) & (pairs[:, 1] <= hi2))
            mid = float(inside.mean())
            unc = math.sqrt((1 - mid) / (mid * n)) / math.log(2) if mid > 0 else math.inf
        if mid <= 0:
            raise ConfigurationError(f"zero measure at k = {k}; no log-measure")
        rows.append((k, math.log2(mid), unc))
    X = -np.array([r[0] for r in rows], dtype=float)
    Y = np.array([r[1] for r in rows])
    A = np.column_stack([X, np.ones_like(X)])
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    dof = max(len(rows) - 2, 1)
    cov = np.linalg.inv(A.T @ A) * float(resid @ resid) / dof
    return DimensionEstimate(
        tuple(z), x, rows, float(coef[0]), float(math.sqrt(cov[0, 0])), float(coef[1]),
        local_dimension_target(x), applicable, mode,
    )


# ---------------------------------------------------------------------------
# planar iterated function system
# ---------------------------------------------------------------------------


def ifs_maps(x):
    """``(matrices, offsets, probabilities)`` of the four planar maps."""
    x = check_scalar(x, "x", low=0.0, high=1.0, closed_low=False, closed_high=False)
    mats = np.array([
        [[0.5, 0.0], [0.0, 0.5]],
        [[0.5, 0.0], [0.0, 0.5]],
        [[1.0, 0.0], [0.0, 0.5]],
        [[1.0, 0.0], [0.0, 0.5]],
    ])
    offs = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    probs = np.array([x / 2, x / 2, (1 - x) / 2, (1 - x) / 2])
    return mats, offs, probs


def bivariate_ifs_sample(x, n, rng=None, tol=1e-12):
    """``n`` draws from the invariant measure by backward iteration of the planar maps.

    Each replicate runs until the second coordinate has contracted below
    ``tol`` (total length) and the first coordinate has seen enough of the
    contracting maps 1 and 2 to do the same.
    """
    mats, offs, probs = ifs_maps(x)
    n = check_count(n, "n", minimum=1)
    rng = check_rng(rng)
    need = int(math.ceil(math.log2(2.0 / tol))) + 1
    blocks = []
    contracting = np.zeros(n, dtype=np.int64)
    length = 0
    while length < need or contracting.min() < need:
        b = rng.choice(4, size=(n, 64), p=probs)
        blocks.append(b)
        contracting += (b < 2).sum(axis=1)
        length += 64
    words = np.concatenate(blocks, axis=1)
    z = np.zeros((n, 2))
    for col in range(words.shape[1] - 1, -1, -1):
        w = words[:, col]
        z = np.einsum("nij,nj->ni", mats[w], z) + offs[w]
    return z


def lyapunov_average(x, n_words, length, rng=None):
    """``(mean, stderr)`` of ``(1/length) log ||M_{i_1} ... M_{i_length}||`` over words.

    Products are renormalised every step, so long words do not underflow.
    """
    mats, _, probs = ifs_maps(x)
    n_words = check_count(n_words, "n_words", minimum=2)
    length = check_count(length, "length", minimum=1)
    rng = check_rng(rng)
    prod = np.broadcast_to(np.eye(2), (n_words, 2, 2)).copy()
    logs = np.zeros(n_words)
    for _ in range(length):
        w = rng.choice(4, size=n_words, p=probs)
        prod = prod @ mats[w]
        s = np.abs(prod).max(axis=(1, 2))
        logs += np.log(s)
        prod /= s[:, None, None]
    norms = np.linalg.norm(prod, ord=2, axis=(1, 2))
    vals = (logs + np.log(norms)) / length
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_words))


# ---------------------------------------------------------------------------
# golden values
# ---------------------------------------------------------------------------

GOLDEN_FILE = "golden_enumeration.txt"


def golden_rows():
    """The fixed ``(orientation, z1, z2, k, x, depth)`` tuples kept in the golden file."""
    rows = []
    for orient, z, k in [
        ("plus-plus", (0.0, 0.0), 1),
        ("plus-plus", (0.0, 0.0), 2),
        ("plus-plus", (1.0, 1.0), 2),
        ("plus-plus", (0.5, 1.5), 2),
        ("plus-plus", (1.5, 0.5), 2),
        ("plus-plus", (0.75, 0.25), 2),
        ("plus-plus", (1.75, 1.75), 2),
        ("centered", (1.0, 1.0), 4),
        ("centered", (1.0, 1.0), 6),
        ("plus-plus", (2.0, 0.0), 2),
    ]:
        rows.append((orient, z[0], z[1], k, 0.8, 10))
    return rows


def format_golden(rows=None):
    lines = ["# orientation z1 z2 k x depth lo hi  (lo/hi as exact fractions)"]
    for orient, z1, z2, k, x, depth in rows or golden_rows():
        iv = exact_square_measure(DyadicSquare((z1, z2), k, orient), x, depth)
        lines.append(f"{orient} {z1!r} {z2!r} {k} {x!r} {depth} {iv.lo_exact} {iv.hi_exact}")
    return "\n".join(lines) + "\n"


def read_golden():
    """Parse the packaged golden file into ``{(orient, z1, z2, k, x, depth): (lo, hi)}``."""
    text = importlib.resources.files("sieveifs").joinpath("data", GOLDEN_FILE).read_text()
    out = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        orient, z1, z2, k, x, depth, lo, hi = line.split()
        out[(orient, float(z1), float(z2), int(k), float(x), int(depth))] = (Fraction(lo), Fraction(hi))
    return out


if __name__ == "__main__":  # pragma: no cover - maintenance entry point
    import sys

    if "--write-golden" not in sys.argv:
        sys.exit("refusing to regenerate the golden file without --write-golden")
    path = importlib.resources.files("sieveifs").joinpath("data", GOLDEN_FILE)
    with open(path, "w") as fh:
        fh.write(format_golden())
    print(f"wrote {path}")
