"""Random Lipschitz function systems and plain backward iteration.

A :class:`SystemSpec` names one of the built-in families together with its
parameters and the starting point ``z0``.  Every family knows how to

* draw i.i.d. parameter arrays (vectorised),
* evaluate the realised maps,
* report Lipschitz constants ``L_f`` and displacements ``|f(z0) - z0|``,
* express a realised map as an element of the family's composition monoid,
  so that long backward compositions can be maintained incrementally.
"""

from dataclasses import dataclass, field
import enum
import functools
import math

import numpy as np

from ._rng import check_rng, stream
from ._validation import (
    ConfigurationError,
    TruncationError,
    check_count,
    check_scalar,
)
from .laws import Law

__all__ = [
    "Family",
    "SystemSpec",
    "FunctionSample",
    "ConditionReport",
    "sample_function",
    "phi",
    "check_conditions",
    "iterate_backward",
    "iterate_to_limit",
    "sample_limit",
    "random_walk_supremum",
    "N_MAX",
]

N_MAX = 10 ** 6


class Family(str, enum.Enum):
    AFFINE = "affine"
    BERNOULLI = "bernoulli"
    LINDLEY = "lindley"
    CONTINUED_FRACTION = "continued_fraction"
    CONSTANT = "constant"
    DICKMAN = "dickman"
    GAUSSIAN = "gaussian"


# ---------------------------------------------------------------------------
# composition monoids
# ---------------------------------------------------------------------------


class AffineMonoid:
    """Maps ``z -> a z + b`` stored as ``(a, b)``."""

    n_fields = 2

    @staticmethod
    def identity(shape):
        return (np.ones(shape), np.zeros(shape))

    @staticmethod
    def compose(outer, inner):
        a1, b1 = outer
        a2, b2 = inner
        return (a1 * a2, a1 * b2 + b1)

    @staticmethod
    def apply(m, z):
        return m[0] * z + m[1]


class MaxAffineMonoid:
    """Maps ``z -> max(c, d z)`` with ``d > 0`` stored as ``(c, d)``."""

    n_fields = 2

    @staticmethod
    def identity(shape):
        return (np.full(shape, -np.inf), np.ones(shape))

    @staticmethod
    def compose(outer, inner):
        c1, d1 = outer
        c2, d2 = inner
        return (np.maximum(c1, d1 * c2), d1 * d2)

    @staticmethod
    def apply(m, z):
        return np.maximum(m[0], m[1] * z)


class MoebiusMonoid:
    """Maps ``z -> (a z + b) / (c z + d)`` stored as a normalised 2x2 matrix."""

    n_fields = 4

    @staticmethod
    def identity(shape):
        return (np.ones(shape), np.zeros(shape), np.zeros(shape), np.ones(shape))

    @staticmethod
    def compose(outer, inner):
        a1, b1, c1, d1 = outer
        a2, b2, c2, d2 = inner
        a = a1 * a2 + b1 * c2
        b = a1 * b2 + b1 * d2
        c = c1 * a2 + d1 * c2
        d = c1 * b2 + d1 * d2
        s = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
        return (a / s, b / s, c / s, d / s)

    @staticmethod
    def apply(m, z):
        a, b, c, d = m
        return (a * z + b) / (c * z + d)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class _FamilyImpl:
    monoid = AffineMonoid
    default_z0 = 0.0

    def validate(self, kw):
        pass

    def draw(self, kw, rng, size):
        raise NotImplementedError

    def apply(self, p, z):
        raise NotImplementedError

    def lip(self, p):
        raise NotImplementedError

    def to_map(self, p):
        raise NotImplementedError

    def disp(self, p, z0):
        return np.abs(self.apply(p, z0) - z0)

    def clamp_z0(self, z0):
        return z0

    def sup_lip(self, kw):
        return math.inf

    def sup_disp(self, kw, z0):
        return math.inf

    # closed forms; None means "use Monte Carlo"
    def closed_phi(self, kw, p):
        return None

    def closed_k(self, kw):
        return self.closed_phi(kw, 1.0)

    def closed_mean_log_lip(self, kw):
        return None

    def closed_mean_disp(self, kw, z0):
        return None


class _AffineBase(_FamilyImpl):
    fields = ("m", "q")

    def apply(self, p, z):
        return p["m"] * z + p["q"]

    def lip(self, p):
        return np.abs(p["m"])

    def to_map(self, p):
        return (np.asarray(p["m"], dtype=float), np.asarray(p["q"], dtype=float))


class _Affine(_AffineBase):
    def validate(self, kw):
        for name in ("m", "q"):
            if not isinstance(kw.get(name), Law):
                raise ConfigurationError(f"affine system needs a Law for {name!r}")

    def draw(self, kw, rng, size):
        m = kw["m"].sample(rng, size)
        q = kw["q"].sample(rng, size)
        return {"m": m, "q": q}

    def sup_lip(self, kw):
        return kw["m"].sup_abs

    def sup_disp(self, kw, z0):
        return kw["q"].sup_abs + (kw["m"].sup_abs + 1.0) * abs(z0)

    def closed_phi(self, kw, p):
        return kw["m"].abs_moment(p)

    def closed_mean_log_lip(self, kw):
        return kw["m"].mean_log_abs()

    def closed_mean_disp(self, kw, z0):
        return kw["q"].abs_moment(1.0) if z0 == 0 else None


class _Bernoulli(_AffineBase):
    def validate(self, kw):
        check_scalar(kw.get("lam"), "lam", low=0.0, high=1.0, closed_low=False, closed_high=False)

    def draw(self, kw, rng, size):
        q = (rng.random(size) < 0.5).astype(float)
        return {"m": np.full(size, kw["lam"]), "q": q}

    def sup_lip(self, kw):
        return kw["lam"]

    def sup_disp(self, kw, z0):
        s = (kw["lam"] - 1.0) * z0
        return max(abs(s), abs(1.0 + s))

    def closed_phi(self, kw, p):
        return kw["lam"] ** p

    def closed_mean_log_lip(self, kw):
        return math.log(kw["lam"])

    def closed_mean_disp(self, kw, z0):
        s = (kw["lam"] - 1.0) * z0
        return 0.5 * (abs(s) + abs(1.0 + s))


class _Gaussian(_AffineBase):
    def validate(self, kw):
        check_scalar(kw.get("lam"), "lam", low=0.0, high=1.0, closed_low=False, closed_high=False)
        check_scalar(kw.get("sd", 1.0), "sd", low=0.0, closed_low=False)

    def draw(self, kw, rng, size):
        return {"m": np.full(size, kw["lam"]), "q": rng.normal(0.0, kw.get("sd", 1.0), size)}

    def sup_lip(self, kw):
        return kw["lam"]

    def closed_phi(self, kw, p):
        return kw["lam"] ** p

    def closed_mean_log_lip(self, kw):
        return math.log(kw["lam"])

    def closed_mean_disp(self, kw, z0):
        return kw.get("sd", 1.0) * math.sqrt(2.0 / math.pi) if z0 == 0 else None


class _Dickman(_AffineBase):
    """M = Q uniform on (0, 1), one shared draw."""

    def draw(self, kw, rng, size):
        q = rng.random(size)
        return {"m": q, "q": q}

    def sup_lip(self, kw):
        return 1.0

    def closed_phi(self, kw, p):
        return 1.0 / (1.0 + p)

    def closed_mean_log_lip(self, kw):
        return -1.0

    def closed_mean_disp(self, kw, z0):
        return 0.5 if z0 == 0 else None


class _Constant(_AffineBase):
    def validate(self, kw):
        if not isinstance(kw.get("q"), Law):
            raise ConfigurationError("constant system needs a Law for 'q'")

    def draw(self, kw, rng, size):
        return {"m": np.zeros(size), "q": kw["q"].sample(rng, size)}

    def sup_lip(self, kw):
        return 0.0

    def sup_disp(self, kw, z0):
        return kw["q"].sup_abs + abs(z0)

    def closed_phi(self, kw, p):
        return 0.0

    def closed_mean_log_lip(self, kw):
        return -math.inf

    def closed_mean_disp(self, kw, z0):
        return kw["q"].abs_moment(1.0) if z0 == 0 else None


class _Lindley(_FamilyImpl):
    """``f(z) = max(1, e^xi z)`` on ``[1, inf)``; Lipschitz constant ``e^xi``."""

    monoid = MaxAffineMonoid
    default_z0 = 1.0
    fields = ("xi",)

    def validate(self, kw):
        if not isinstance(kw.get("xi"), Law):
            raise ConfigurationError("lindley system needs a Law for 'xi'")

    def draw(self, kw, rng, size):
        return {"xi": kw["xi"].sample(rng, size)}

    def apply(self, p, z):
        return np.maximum(1.0, np.exp(p["xi"]) * z)

    def lip(self, p):
        return np.exp(p["xi"])

    def to_map(self, p):
        xi = np.asarray(p["xi"], dtype=float)
        return (np.ones_like(xi), np.exp(xi))

    def clamp_z0(self, z0):
        return max(z0, 1.0)

    def closed_phi(self, kw, p):
        xi = kw["xi"]
        if xi.kind == "gaussian":
            mu, sd = xi.params
            return math.exp(p * mu + 0.5 * (p * sd) ** 2)
        atoms = xi._atoms()
        if atoms is not None:
            return float(np.dot(np.exp(p * atoms[0]), atoms[1]))
        return None

    def closed_mean_log_lip(self, kw):
        return kw["xi"].mean


class _ContinuedFraction(_FamilyImpl):
    """``f(z) = 1 / (z + xi)`` on ``z >= 0`` with ``xi > 0``."""

    monoid = MoebiusMonoid
    fields = ("xi",)

    def validate(self, kw):
        xi = kw.get("xi")
        if not isinstance(xi, Law):
            raise ConfigurationError("continued fraction system needs a Law for 'xi'")
        # continuous laws may touch 0 at an endpoint; atomic ones may not
        if xi.kind == "gaussian" or xi.support[0] < 0 or (xi.support[0] == 0 and xi._atoms() is not None):
            raise ConfigurationError("continued fraction needs xi > 0 almost surely")

    def draw(self, kw, rng, size):
        return {"xi": kw["xi"].sample(rng, size)}

    def apply(self, p, z):
        return 1.0 / (z + p["xi"])

    def lip(self, p):
        return p["xi"] ** -2.0

    def to_map(self, p):
        xi = np.asarray(p["xi"], dtype=float)
        one = np.ones_like(xi)
        return (np.zeros_like(xi), one, one, xi)

    def clamp_z0(self, z0):
        return max(z0, 0.0)

    def sup_lip(self, kw):
        lo = kw["xi"].support[0]
        return math.inf if lo <= 0 else lo ** -2.0

    def sup_disp(self, kw, z0):
        lo = kw["xi"].support[0]
        return math.inf if lo <= 0 else max(abs(1.0 / (z0 + lo) - z0), z0)

    def closed_phi(self, kw, p):
        return kw["xi"].neg_moment(2.0 * p)

    def closed_mean_log_lip(self, kw):
        m = kw["xi"].mean_log_abs()
        return None if m is None else -2.0 * m

    def closed_mean_disp(self, kw, z0):
        return kw["xi"].neg_moment(1.0) if z0 == 0 else None


_IMPLS = {
    Family.AFFINE: _Affine(),
    Family.BERNOULLI: _Bernoulli(),
    Family.LINDLEY: _Lindley(),
    Family.CONTINUED_FRACTION: _ContinuedFraction(),
    Family.CONSTANT: _Constant(),
    Family.DICKMAN: _Dickman(),
    Family.GAUSSIAN: _Gaussian(),
}


# ---------------------------------------------------------------------------
# system descriptor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemSpec:
    """A validated random function system.

    Use the classmethod constructors (``SystemSpec.bernoulli(0.5)`` etc.) or
    :meth:`from_dict` for JSON configs.  Construction enforces the
    family-specific parameter ranges; sampling additionally requires the
    contraction conditions to hold (see :func:`check_conditions`).
    """

    family: Family
    params: tuple = ()
    z0: float = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        params = self.params.items() if isinstance(self.params, dict) else self.params
        object.__setattr__(self, "params", tuple(sorted(params)))
        impl = _IMPLS[fam]
        z0 = impl.default_z0 if self.z0 is None else check_scalar(self.z0, "z0")
        object.__setattr__(self, "z0", float(impl.clamp_z0(z0)))
        impl.validate(self.kw)

    @property
    def kw(self):
        return dict(self.params)

    @property
    def impl(self):
        return _IMPLS[self.family]

    # constructors -------------------------------------------------------
    @classmethod
    def bernoulli(cls, lam=0.5, z0=None):
        return cls(Family.BERNOULLI, {"lam": float(lam)}, z0)

    @classmethod
    def gaussian(cls, lam=0.5, sd=1.0, z0=None):
        return cls(Family.GAUSSIAN, {"lam": float(lam), "sd": float(sd)}, z0)

    @classmethod
    def affine(cls, m, q, z0=None):
        return cls(Family.AFFINE, {"m": m, "q": q}, z0)

    @classmethod
    def dickman(cls, z0=None):
        return cls(Family.DICKMAN, {}, z0)

    @classmethod
    def constant(cls, q, z0=None):
        return cls(Family.CONSTANT, {"q": q}, z0)

    @classmethod
    def lindley(cls, xi, z0=None):
        return cls(Family.LINDLEY, {"xi": xi}, z0)

    @classmethod
    def continued_fraction(cls, xi, z0=None):
        return cls(Family.CONTINUED_FRACTION, {"xi": xi}, z0)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        fam = Family(d.pop("family"))
        z0 = d.pop("z0", None)
        params = {}
        for k, v in d.items():
            params[k] = Law.from_dict(v) if isinstance(v, dict) else float(v)
        return cls(fam, params, z0)

    def to_dict(self):
        out = {"family": self.family.value, "z0": self.z0}
        for k, v in self.params:
            out[k] = v.to_dict() if isinstance(v, Law) else v
        return out

    # vectorised primitives ---------------------------------------------
    def draw(self, rng, size):
        _require_conditions(self)
        return self.impl.draw(self.kw, rng, size)

    def apply(self, p, z):
        return self.impl.apply(p, z)

    def lip(self, p):
        return self.impl.lip(p)

    def disp(self, p):
        return self.impl.disp(p, self.z0)

    @property
    def monoid(self):
        return self.impl.monoid

    def to_map(self, p):
        return self.impl.to_map(p)

    @property
    def is_affine_constant_lip(self):
        return self.family in (Family.BERNOULLI, Family.GAUSSIAN)


@dataclass(frozen=True)
class FunctionSample:
    """One realised map with its Lipschitz constant and displacement."""

    spec: SystemSpec = field(repr=False)
    params: dict = field(default_factory=dict)
    lip: float = 0.0
    disp: float = 0.0

    def eval(self, u):
        return float(self.spec.apply(self.params, u))

    __call__ = eval


@dataclass
class ConditionReport:
    K_f: float
    mean_log_lip: float
    mean_disp: float
    phi_table: dict
    I_nonempty: bool
    stderr: dict = field(default_factory=dict)

    @property
    def passed(self):
        return math.isfinite(self.K_f) and self.mean_log_lip < 0 and math.isfinite(self.mean_disp)

    def to_dict(self):
        return {
            "K_f": self.K_f,
            "mean_log_lip": self.mean_log_lip,
            "mean_disp": self.mean_disp,
            "phi_table": {str(k): v for k, v in self.phi_table.items()},
            "I_nonempty": self.I_nonempty,
            "passed": self.passed,
            "stderr": self.stderr,
        }


# ---------------------------------------------------------------------------
# conditions
# ---------------------------------------------------------------------------


def _mc_mean(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return mean, se


def _looks_divergent(values):
    """Heuristic for an infinite mean: the running estimate is driven by a few terms."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        return True
    total = values.sum()
    if total <= 0:
        return False
    half = values[: values.size // 2].mean()
    full = values.mean()
    return values.max() > 0.1 * total or (half > 0 and full / half > 1.5 and values.max() > 0.02 * total)


def _raw_draw(spec, rng, size):
    # draws without the condition gate; used while checking the conditions
    return spec.impl.draw(spec.kw, rng, size)


def phi(spec, p, n_mc=10 ** 5, rng=None, return_stderr=False):
    """``Phi(p) = E L_f^p``.

    Closed form when the family admits one, Monte Carlo otherwise.  An
    apparently divergent Monte Carlo estimate is reported as ``inf``.
    """
    p = check_scalar(p, "p", low=0.0)
    if p == 0.0:
        return (1.0, 0.0) if return_stderr else 1.0
    exact = spec.impl.closed_phi(spec.kw, p)
    if exact is not None:
        return (float(exact), 0.0) if return_stderr else float(exact)
    rng = check_rng(rng) if rng is not None else stream(0, "phi", spec.family.value)
    vals = spec.lip(_raw_draw(spec, rng, n_mc)) ** p
    if _looks_divergent(vals):
        value, se = math.inf, math.inf
    else:
        value, se = _mc_mean(vals)
    return (value, se) if return_stderr else value


_PHI_GRID = (0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0)


def check_conditions(spec, n_mc=10 ** 4, rng=None, p_grid=_PHI_GRID):
    """Estimate ``E L_f``, ``E log L_f`` and ``E|f(z0) - z0|``.

    The report's ``passed`` flag is the caller's to act on; this function
    never raises on a violated condition.
    """
    n_mc = check_count(n_mc, "n_mc", minimum=1000)
    rng = check_rng(rng) if rng is not None else stream(0, "conditions", spec.family.value)
    impl, kw = spec.impl, spec.kw
    sample = _raw_draw(spec, rng, n_mc)
    lips = spec.lip(sample)
    stderr = {}

    k = impl.closed_k(kw)
    if k is None:
        if _looks_divergent(lips):
            k, stderr["K_f"] = math.inf, math.inf
        else:
            k, stderr["K_f"] = _mc_mean(lips)
    mll = impl.closed_mean_log_lip(kw)
    if mll is None:
        with np.errstate(divide="ignore"):
            mll, stderr["mean_log_lip"] = _mc_mean(np.log(lips))
    md = impl.closed_mean_disp(kw, spec.z0)
    if md is None:
        d = spec.disp(sample)
        if _looks_divergent(d):
            md, stderr["mean_disp"] = math.inf, math.inf
        else:
            md, stderr["mean_disp"] = _mc_mean(d)

    table = {}
    for p in p_grid:
        if p == 0:
            table[0.0] = 1.0
            continue
        exact = impl.closed_phi(kw, p)
        if exact is None:
            vals = lips ** p
            if _looks_divergent(vals):
                exact = math.inf
            else:
                exact, stderr[f"phi({p})"] = _mc_mean(vals)
        table[float(p)] = float(exact)
    nonempty = any(v < 1.0 for p, v in table.items() if p > 0)
    return ConditionReport(float(k), float(mll), float(md), table, nonempty, stderr)


@functools.lru_cache(maxsize=None)
def _conditions(spec):
    return check_conditions(spec, n_mc=10 ** 5)


def _require_conditions(spec):
    rep = _conditions(spec)
    if not rep.passed:
        raise ConfigurationError(
            f"{spec.family.value} system violates the contraction conditions "
            f"(K_f={rep.K_f}, E log L_f={rep.mean_log_lip}, E|f(z0)-z0|={rep.mean_disp})"
        )
    return rep


@functools.lru_cache(maxsize=None)
def tail_constant(spec):
    """``(C, certified)`` bounding ``|f^{n+1 -> inf}(z0) - z0|`` after a product ``P_n``.

    With ``sup L_f = c < 1`` and bounded displacements ``D`` the bound
    ``D / (1 - c)`` holds surely.  Otherwise the mean bound
    ``E|f(z0) - z0| / (1 - E L_f)`` is used.
    """
    rep = _require_conditions(spec)
    c = spec.impl.sup_lip(spec.kw)
    d = spec.impl.sup_disp(spec.kw, spec.z0)
    if c < 1 and math.isfinite(d):
        return d / (1.0 - c), True
    if rep.K_f >= 1:
        raise ConfigurationError(
            f"E L_f = {rep.K_f:.3g} >= 1: no tail constant for adaptive truncation"
        )
    return rep.mean_disp / (1.0 - rep.K_f), False


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------


def sample_function(spec, rng):
    """Draw one realised map ``f ~ nu``."""
    if not isinstance(spec, SystemSpec):
        raise ConfigurationError("sample_function needs a SystemSpec")
    rng = check_rng(rng)
    p = spec.draw(rng, 1)
    p = {k: float(v[0]) for k, v in p.items()}
    lip = float(spec.lip(p))
    disp = abs(float(spec.apply(p, spec.z0)) - spec.z0)
    return FunctionSample(spec, p, lip, disp)


def compose(functions, z):
    """``f_1 o ... o f_n (z)``: the last function is applied first."""
    for f in reversed(functions):
        z = f.eval(z)
    return z


def iterate_backward(spec, n, rng):
    """``Z_n = f_1 o ... o f_n (z0)`` with fresh i.i.d. maps."""
    n = check_count(n, "n")
    rng = check_rng(rng)
    fs = [sample_function(spec, rng) for _ in range(n)]
    return compose(fs, spec.z0)


def iterate_to_limit(spec, tol, rng, n_max=N_MAX):
    """Approximate ``Z_inf`` to within ``tol``.

    Returns ``(value, n_used)``.  For families with ``sup L_f < 1`` and bounded
    displacements the stopping rule is the sure bound ``P_n D / (1 - c)``;
    otherwise the realised tail sum ``sum_{i>n} disp_i prod_{k<i} L_k`` over a
    look-ahead window plus the mean remainder bound after the window.
    """
    tol = check_scalar(tol, "tol", low=0.0, closed_low=False)
    rng = check_rng(rng)
    const, certified = tail_constant(spec)
    fs = []
    prod = 1.0
    if certified:
        while True:
            f = sample_function(spec, rng)
            fs.append(f)
            prod *= f.lip
            if prod * const <= tol:
                return compose(fs, spec.z0), len(fs)
            if len(fs) >= n_max:
                raise TruncationError("iteration cap reached", prod * const, len(fs))

    terms = []
    block = 32
    while True:
        for _ in range(block):
            f = sample_function(spec, rng)
            terms.append(f.disp * prod)
            fs.append(f)
            prod *= f.lip
        remainder = prod * const
        if remainder <= tol / 2:
            break
        if len(fs) >= n_max:
            raise TruncationError("iteration cap reached", remainder + sum(terms[1:]), len(fs))
        block = min(2 * block, n_max - len(fs))
    # tails[n] = sum_{i > n} terms_i over the window (1-based i)
    tails = np.concatenate([np.cumsum(np.asarray(terms)[::-1])[::-1], [0.0]])
    ok = np.nonzero(tails[1:] + remainder <= tol)[0]
    n = max(1, int(ok[0]) + 1)
    return compose(fs[:n], spec.z0), n


def sample_limit(spec, n, tol=1e-10, rng=None, block=32, n_max=N_MAX):
    """``n`` independent draws of ``Z_inf`` by plain backward iteration.

    This is the direct-iteration sampler used as the reference law for the
    sieved constructions.  Each replicate is truncated at its own depth, once
    the product of realised Lipschitz constants times the tail constant is
    below ``tol``.
    """
    n = check_count(n, "n", minimum=1)
    rng = check_rng(rng)
    const, _ = tail_constant(spec)
    blocks = []
    prod = np.ones(n)
    cutoff = np.full(n, -1)
    used = 0
    while np.any(cutoff < 0):
        p = spec.draw(rng, (n, block))
        blocks.append(p)
        cum = prod[:, None] * np.cumprod(spec.lip(p), axis=1)
        hit = cum * const <= tol
        first = np.where(hit.any(axis=1), hit.argmax(axis=1), -1)
        new = (cutoff < 0) & (first >= 0)
        cutoff[new] = used + first[new] + 1
        prod = cum[:, -1]
        used += block
        if used >= n_max and np.any(cutoff < 0):
            raise TruncationError("iteration cap reached", float(np.max(prod * const)), used)
        block = min(2 * block, 4096)
    params = {k: np.concatenate([b[k] for b in blocks], axis=1) for k in blocks[0]}
    depth = int(cutoff.max())
    z = np.full(n, spec.z0)
    for col in range(depth - 1, -1, -1):
        pc = {k: v[:, col] for k, v in params.items()}
        z = np.where(col < cutoff, spec.apply(pc, z), z)
    return z


def random_walk_supremum(xi, n, rng, n_steps=4000):
    """``exp(sup_{j>=0} sum_{i<=j} xi_i)`` for a negative-drift walk."""
    rng = check_rng(rng)
    steps = xi.sample(rng, (n, n_steps))
    walk = np.cumsum(steps, axis=1)
    return np.exp(np.maximum(0.0, walk.max(axis=1)))
