"""Sieved random iterated function systems.

Random maps are attached to the points of a marked Poisson process; the
value at a set ``A`` composes, in arrival order, the maps whose marks fall
in ``A``.  The package samples these processes exactly up to a certified
truncation error and checks them against closed forms.
"""

__version__ = "0.1.0"

from ._rng import check_rng, stream
from ._validation import (
    ConfigurationError,
    EnumerationCostError,
    NotInSupportError,
    TruncationError,
)
from .laws import Law
from .systems import (
    ConditionReport,
    Family,
    FunctionSample,
    SystemSpec,
    check_conditions,
    compose,
    iterate_backward,
    iterate_to_limit,
    phi,
    sample_function,
    sample_limit,
)
from .sieve import (
    IntervalSet,
    SievedPath,
    sample_coupled,
    sample_marginal,
    sample_path,
    sample_paths,
    sample_set_indexed,
    sample_strip,
)
from .dimension import DyadicSquare, exact_square_measure, local_dimension_fit
from .stats import TestReport
from .estimators import LocalDimensionEstimator, SievedProcessSampler

__all__ = [
    "__version__", "stream", "check_rng",
    "ConfigurationError", "EnumerationCostError", "NotInSupportError", "TruncationError",
    "Law", "Family", "SystemSpec", "FunctionSample", "ConditionReport",
    "check_conditions", "phi", "compose", "sample_function", "iterate_backward", "iterate_to_limit",
    "sample_limit", "IntervalSet", "SievedPath", "sample_marginal", "sample_coupled",
    "sample_set_indexed", "sample_strip", "sample_paths", "sample_path",
    "DyadicSquare", "exact_square_measure", "local_dimension_fit", "TestReport",
    "SievedProcessSampler", "LocalDimensionEstimator",
]
