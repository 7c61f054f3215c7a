"""Closed-form moments and covariances, plus entropy-based dimension bounds.

All logarithms are natural; base-2 conversions happen only where a
dimension is expressed in bits.  The moment formulas are plain arithmetic,
so they accept :class:`fractions.Fraction` inputs and then return exact
rationals.
"""

from dataclasses import dataclass
from fractions import Fraction
import math
import warnings

from ._validation import ConfigurationError, check_scalar

__all__ = [
    "PerpetuityMoments",
    "EntropyBounds",
    "perpetuity_mean",
    "cross_moment",
    "correlation",
    "second_moment_residual",
    "stationary_covariance",
    "binary_entropy",
    "dimension_upper_bound",
    "singularity_threshold",
    "local_dimension_target",
    "entropy_bounds",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class PerpetuityMoments:
    """First two moments of ``M`` and ``Q`` in ``z -> M z + Q``."""

    EM: float
    EM2: float
    EQ: float
    EQ2: float
    independent_MQ: bool = True

    def __post_init__(self):
        # exact comparison for rationals, relative slack for floats
        for second, first, name in ((self.EM2, self.EM, "M"), (self.EQ2, self.EQ, "Q")):
            gap = second - first * first
            if gap < 0 and not (isinstance(gap, float) and gap > -1e-12 * max(1.0, abs(second))):
                raise ConfigurationError(f"E {name}^2 < (E {name})^2")

    @classmethod
    def bernoulli(cls, lam):
        """``M = lam`` and ``Q`` uniform on ``{0, 1}``."""
        return cls(lam, lam * lam, Fraction(1, 2) if isinstance(lam, Fraction) else 0.5,
                   Fraction(1, 2) if isinstance(lam, Fraction) else 0.5)

    @classmethod
    def from_spec(cls, spec):
        from .systems import Family

        kw = spec.kw
        if spec.family is Family.BERNOULLI:
            return cls.bernoulli(kw["lam"])
        if spec.family is Family.GAUSSIAN:
            sd = kw.get("sd", 1.0)
            return cls(kw["lam"], kw["lam"] ** 2, 0.0, sd * sd)
        if spec.family is Family.AFFINE:
            m, q = kw["m"], kw["q"]
            return cls(m.mean, m.second_moment, q.mean, q.second_moment)
        if spec.family is Family.CONSTANT:
            q = kw["q"]
            return cls(0.0, 0.0, q.mean, q.second_moment)
        if spec.family is Family.DICKMAN:
            return cls(0.5, 1.0 / 3.0, 0.5, 1.0 / 3.0, independent_MQ=False)
        raise ConfigurationError(f"{spec.family.value} is not an affine family")


def perpetuity_mean(m):
    """``E Q / (1 - E M)``."""
    if not m.EM < 1:
        raise ConfigurationError("E M >= 1: the mean is undefined")
    return m.EQ / (1 - m.EM)


def cross_moment(x, y, m):
    """``E(zeta(x) zeta(y))`` for ``0 < x <= y`` and independent ``M``, ``Q``."""
    if not 0 < x:
        raise ConfigurationError("x must be positive")
    if x > y:
        raise ConfigurationError("cross_moment needs x <= y; swap the arguments")
    if not m.independent_MQ:
        raise ConfigurationError("the closed form needs independent M and Q")
    if not m.EM2 < 1:
        raise ConfigurationError("E M^2 >= 1: second moments are infinite")
    exact = all(isinstance(v, (int, Fraction)) for v in (x, y))
    r = Fraction(y) / Fraction(x) if exact else y / x
    one = 1 - m.EM
    num = m.EQ2 * one + (2 * m.EM - 1) * m.EQ ** 2 + m.EQ ** 2 * r
    den = one * r + m.EM - m.EM2
    return num / (den * one)


def correlation(x, y, m):
    """Correlation of ``zeta(x)`` and ``zeta(y)`` implied by :func:`cross_moment`."""
    lo, hi = min(x, y), max(x, y)
    mean = perpetuity_mean(m)
    var = cross_moment(1, 1, m) - mean ** 2
    return (cross_moment(lo, hi, m) - mean ** 2) / var


def second_moment_residual(x, y, m):
    """Residual of ``y C(x,y) = x E f(zx) f(zy) + (y - x) E zx f(zy)`` for affine ``f``."""
    c = cross_moment(x, y, m)
    mean = perpetuity_mean(m)
    both = m.EM2 * c + 2 * m.EM * m.EQ * mean + m.EQ2
    one_side = m.EM * c + m.EQ * mean
    return y * c - x * both - (y - x) * one_side


def stationary_covariance(s, lam):
    """``E(zeta(1) zeta(e^s)) = 1 / ((1 - lam)(e^|s| + lam))`` for centred unit-variance Q."""
    lam = check_scalar(lam, "lambda", low=0.0, high=1.0, closed_low=False, closed_high=False)
    s = abs(check_scalar(s, "s"))
    if s > 700:
        return 0.0
    return 1.0 / ((1.0 - lam) * (math.exp(s) + lam))


def binary_entropy(x):
    """``-x log x - (1 - x) log(1 - x)`` in nats."""
    x = check_scalar(x, "x", low=0.0, high=1.0)
    if x in (0.0, 1.0):
        warnings.warn("binary entropy evaluated at an endpoint; returning the limit 0", RuntimeWarning)
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def dimension_upper_bound(x):
    """``min(2, 2 - x + I(x) / log 2)``."""
    x = check_scalar(x, "x", low=0.0, high=1.0, closed_low=False, closed_high=False)
    return min(2.0, 2.0 - x + binary_entropy(x) / LOG2)


def local_dimension_target(x):
    """``2 - log(1 + x) / log 2``."""
    x = check_scalar(x, "x", low=0.0, high=1.0, closed_low=False, closed_high=False)
    return 2.0 - math.log1p(x) / LOG2


def singularity_threshold(tol=1e-10, bracket=(0.5, 0.99)):
    """Root of ``I(x) = x log 2`` by bisection on a fixed bracket."""
    lo, hi = bracket

    def g(t):
        return binary_entropy(t) - t * LOG2

    glo, ghi = g(lo), g(hi)
    if not (glo > 0 > ghi):
        raise ArithmeticError("bracket does not straddle the root")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EntropyBounds:
    x: float
    I_x: float
    h0: float
    h1: float
    lyap1: float
    lyap2: float
    upper: float
    target: float


def entropy_bounds(x):
    """Entropies, Lyapunov exponents and the two dimension values at ``x``."""
    i = binary_entropy(x)
    h0 = i + LOG2
    return EntropyBounds(
        x=x, I_x=i, h0=h0, h1=h0 - x * LOG2,
        lyap1=-x * LOG2, lyap2=-LOG2,
        upper=dimension_upper_bound(x), target=local_dimension_target(x),
    )
