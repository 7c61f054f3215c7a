"""Scalar random-variable descriptors used to parameterise function systems.

A :class:`Law` is a small immutable value (kind + parameters) that can be
sampled and, where the integral is elementary, report moments in closed form.
Methods return ``None`` when no closed form is implemented; callers then fall
back to Monte Carlo.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from ._validation import ConfigurationError

__all__ = ["Law"]

_KINDS = ("constant", "two_point", "uniform", "gaussian", "gamma", "int_uniform")
_EULER = 0.5772156649015329


@dataclass(frozen=True)
class Law:
    """Distribution descriptor.

    ``kind`` is one of ``constant(c)``, ``two_point(a, b, p)`` (value ``b`` with
    probability ``p``), ``uniform(low, high)``, ``gaussian(mean, sd)``,
    ``gamma(shape, scale)`` and ``int_uniform(low, high)`` (inclusive).
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown law kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        p = self.params
        expected = {"constant": 1, "two_point": 3, "uniform": 2, "gaussian": 2, "gamma": 2, "int_uniform": 2}
        if len(p) != expected[self.kind]:
            raise ConfigurationError(f"{self.kind} law takes {expected[self.kind]} parameters, got {len(p)}")
        if self.kind == "two_point" and not 0.0 <= p[2] <= 1.0:
            raise ConfigurationError("two_point probability must lie in [0, 1]")
        if self.kind == "uniform" and not p[0] < p[1]:
            raise ConfigurationError("uniform law needs low < high")
        if self.kind == "gaussian" and not p[1] > 0:
            raise ConfigurationError("gaussian sd must be positive")
        if self.kind == "gamma" and not (p[0] > 0 and p[1] > 0):
            raise ConfigurationError("gamma shape and scale must be positive")
        if self.kind == "int_uniform" and not (p[0] <= p[1] and p[0] == int(p[0]) and p[1] == int(p[1])):
            raise ConfigurationError("int_uniform needs integer low <= high")

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls("constant", (c,))

    @classmethod
    def two_point(cls, a=0.0, b=1.0, p=0.5):
        return cls("two_point", (a, b, p))

    @classmethod
    def uniform(cls, low=0.0, high=1.0):
        return cls("uniform", (low, high))

    @classmethod
    def gaussian(cls, mean=0.0, sd=1.0):
        return cls("gaussian", (mean, sd))

    @classmethod
    def gamma(cls, shape, scale=1.0):
        return cls("gamma", (shape, scale))

    @classmethod
    def int_uniform(cls, low, high):
        return cls("int_uniform", (low, high))

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in _KINDS:
            raise ConfigurationError(f"unknown law kind {kind!r}")
        if "params" in d:
            return cls(kind, tuple(d["params"]))
        return getattr(cls, kind)(**d)

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    # sampling -----------------------------------------------------------
    def sample(self, rng, size):
        p = self.params
        if self.kind == "constant":
            return np.full(size, p[0])
        if self.kind == "two_point":
            return np.where(rng.random(size) < p[2], p[1], p[0])
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], size)
        if self.kind == "gaussian":
            return rng.normal(p[0], p[1], size)
        if self.kind == "gamma":
            return rng.gamma(p[0], p[1], size)
        return rng.integers(int(p[0]), int(p[1]) + 1, size).astype(float)

    # support ------------------------------------------------------------
    @property
    def support(self):
        p = self.params
        if self.kind == "constant":
            return (p[0], p[0])
        if self.kind == "two_point":
            if p[2] == 0.0:
                return (p[0], p[0])
            if p[2] == 1.0:
                return (p[1], p[1])
            return (min(p[0], p[1]), max(p[0], p[1]))
        if self.kind in ("uniform", "int_uniform"):
            return (p[0], p[1])
        if self.kind == "gaussian":
            return (-math.inf, math.inf)
        return (0.0, math.inf)

    @property
    def sup_abs(self):
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    def _atoms(self):
        """(values, weights) for the discrete kinds."""
        p = self.params
        if self.kind == "constant":
            return np.array([p[0]]), np.array([1.0])
        if self.kind == "two_point":
            return np.array([p[0], p[1]]), np.array([1.0 - p[2], p[2]])
        if self.kind == "int_uniform":
            vals = np.arange(int(p[0]), int(p[1]) + 1, dtype=float)
            return vals, np.full(vals.size, 1.0 / vals.size)
        return None

    # moments ------------------------------------------------------------
    @property
    def mean(self):
        p = self.params
        atoms = self._atoms()
        if atoms is not None:
            return float(np.dot(*atoms))
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1])
        if self.kind == "gaussian":
            return p[0]
        return p[0] * p[1]

    @property
    def second_moment(self):
        p = self.params
        atoms = self._atoms()
        if atoms is not None:
            return float(np.dot(atoms[0] ** 2, atoms[1]))
        if self.kind == "uniform":
            return (p[1] ** 3 - p[0] ** 3) / (3.0 * (p[1] - p[0]))
        if self.kind == "gaussian":
            return p[0] ** 2 + p[1] ** 2
        return p[0] * (p[0] + 1.0) * p[1] ** 2

    @property
    def variance(self):
        return self.second_moment - self.mean ** 2

    def abs_moment(self, q):
        """E|X|^q for q > 0, or None when not available in closed form."""
        p = self.params
        atoms = self._atoms()
        if atoms is not None:
            return float(np.dot(np.abs(atoms[0]) ** q, atoms[1]))
        if self.kind == "uniform":
            lo, hi = p
            if lo >= 0:
                return (hi ** (q + 1) - lo ** (q + 1)) / ((q + 1) * (hi - lo))
            if hi <= 0:
                return ((-lo) ** (q + 1) - (-hi) ** (q + 1)) / ((q + 1) * (hi - lo))
            return (hi ** (q + 1) + (-lo) ** (q + 1)) / ((q + 1) * (hi - lo))
        if self.kind == "gaussian":
            if p[0] != 0.0:
                return None
            return p[1] ** q * 2 ** (q / 2) * math.exp(special.gammaln((q + 1) / 2)) / math.sqrt(math.pi)
        return math.exp(special.gammaln(p[0] + q) - special.gammaln(p[0])) * p[1] ** q

    def mean_log_abs(self):
        """E log|X|; ``-inf`` if X has an atom at zero, None without closed form."""
        p = self.params
        atoms = self._atoms()
        if atoms is not None:
            vals, w = atoms
            if np.any((vals == 0) & (w > 0)):
                return -math.inf
            keep = w > 0
            return float(np.dot(np.log(np.abs(vals[keep])), w[keep]))
        if self.kind == "uniform":
            def primitive(x):
                return 0.0 if x == 0 else x * math.log(x) - x

            lo, hi = p
            if lo >= 0:
                return (primitive(hi) - primitive(lo)) / (hi - lo)
            if hi <= 0:
                return (primitive(-lo) - primitive(-hi)) / (hi - lo)
            return (primitive(hi) + primitive(-lo)) / (hi - lo)
        if self.kind == "gaussian":
            if p[0] != 0.0:
                return None
            return math.log(p[1]) - 0.5 * (_EULER + math.log(2.0))
        return float(special.digamma(p[0])) + math.log(p[1])

    def neg_moment(self, q):
        """E X^{-q} for a positive law; ``inf`` when divergent."""
        lo, _ = self.support
        if lo < 0:
            raise ConfigurationError("negative moments need a non-negative law")
        p = self.params
        atoms = self._atoms()
        if atoms is not None:
            vals, w = atoms
            keep = w > 0
            if np.any(vals[keep] == 0):
                return math.inf
            return float(np.dot(vals[keep] ** (-q), w[keep]))
        if self.kind == "uniform":
            a, b = p
            if a == 0:
                return math.inf if q >= 1 else b ** (1 - q) / ((1 - q) * b)
            if q == 1:
                return math.log(b / a) / (b - a)
            return (b ** (1 - q) - a ** (1 - q)) / ((1 - q) * (b - a))
        shape, scale = p
        if shape <= q:
            return math.inf
        return math.exp(special.gammaln(shape - q) - special.gammaln(shape)) * scale ** (-q)
