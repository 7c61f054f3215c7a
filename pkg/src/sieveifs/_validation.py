"""Input validation helpers and the package exception types."""

import math
import numbers

import numpy as np


class ConfigurationError(ValueError):
    """A system or run configuration is invalid."""


class TruncationError(RuntimeError):
    """The iteration cap was reached before the requested tolerance.

    ``bound`` carries the last certified tail bound.
    """

    def __init__(self, message, bound, n_used):
        super().__init__(f"{message} (last bound {bound:.3e} after {n_used} steps)")
        self.bound = bound
        self.n_used = n_used


class NotInSupportError(ValueError):
    """A point does not belong to the attractor of the function system."""


class EnumerationCostError(ValueError):
    """Requested enumeration depth exceeds the hard cap."""


def check_scalar(value, name, *, low=None, high=None, closed_low=True, closed_high=True):
    """Check a real scalar against an interval and return it as float."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigurationError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value):
        raise ConfigurationError(f"{name} must not be NaN")
    if low is not None and (value < low or (not closed_low and value == low)):
        raise ConfigurationError(f"{name}={value} below allowed range")
    if high is not None and (value > high or (not closed_high and value == high)):
        raise ConfigurationError(f"{name}={value} above allowed range")
    return value


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_unit_point(x, name="x"):
    """x in (0, 1]."""
    return check_scalar(x, name, low=0.0, high=1.0, closed_low=False)


def check_sample(a, name, min_size=1, ndim=1):
    arr = np.asarray(a, dtype=float)
    if ndim == 1:
        arr = arr.reshape(-1)
    elif arr.ndim != ndim:
        raise ConfigurationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_size:
        raise ConfigurationError(f"{name} needs at least {min_size} observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr
