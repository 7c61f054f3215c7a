"""scikit-learn style wrappers.

The sampler has no training data in the usual sense, so ``fit`` only
validates the configuration and records the condition check.  The wrappers
follow the estimator conventions (constructor stores parameters verbatim,
learned state ends in ``_``) so they plug into ``get_params``, ``set_params``
and ``sklearn.base.clone``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import check_rng
from ._validation import ConfigurationError
from .dimension import local_dimension_fit
from .sieve import sample_chains
from .systems import SystemSpec, check_conditions

__all__ = ["SievedProcessSampler", "LocalDimensionEstimator"]


class SievedProcessSampler(BaseEstimator):
    """Draw coupled vectors ``(zeta(A_1), ..., zeta(A_m))``.

    Parameters
    ----------
    system : SystemSpec or dict
    sets : list
        Points ``x`` (meaning ``[0, x]``) or lists of intervals.
    tol : float
        Truncation tolerance per coordinate.
    random_state : int, Generator or None
    """

    def __init__(self, system=None, sets=(1.0,), tol=1e-10, random_state=None):
        self.system = system
        self.sets = sets
        self.tol = tol
        self.random_state = random_state

    def fit(self, X=None, y=None):
        spec = self.system
        if isinstance(spec, dict):
            spec = SystemSpec.from_dict(spec)
        if not isinstance(spec, SystemSpec):
            raise ConfigurationError("system must be a SystemSpec or its dict form")
        self.spec_ = spec
        self.conditions_ = check_conditions(spec)
        if not self.conditions_.passed:
            raise ConfigurationError("convergence conditions fail for this system")
        self.rng_ = check_rng(self.random_state)
        self.n_features_out_ = len(list(self.sets))
        return self

    def sample(self, n):
        """``(n, m)`` array of coupled draws; successive calls continue the stream."""
        check_is_fitted(self, "spec_")
        return sample_chains(self.spec_, list(self.sets), n, self.tol, self.rng_)


class LocalDimensionEstimator(BaseEstimator):
    """Local-dimension slopes of the planar measure at a list of points."""

    def __init__(self, x=0.8, k_min=4, k_max=10, mode="exact", n=10 ** 6, random_state=None):
        self.x = x
        self.k_min = k_min
        self.k_max = k_max
        self.mode = mode
        self.n = n
        self.random_state = random_state

    def fit(self, X, y=None):
        pts = np.asarray(X, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigurationError("X must have shape (n_points, 2)")
        rng = check_rng(self.random_state)
        self.estimates_ = [
            local_dimension_fit(tuple(z), self.x, (self.k_min, self.k_max), self.mode, rng, self.n)
            for z in pts
        ]
        self.slopes_ = np.array([e.slope for e in self.estimates_])
        self.target_ = self.estimates_[0].target if self.estimates_ else None
        return self

    def predict(self, X=None):
        """Slopes from the last ``fit`` (``X`` must repeat the fitted points if given)."""
        check_is_fitted(self, "slopes_")
        if X is not None and len(X) != len(self.slopes_):
            raise ConfigurationError("predict only returns the slopes of the fitted points")
        return self.slopes_.copy()
