"""Input validation helpers shared by the estimators and the pipeline."""

import math
import numbers

import numpy as np

from .exceptions import ConfigurationError, ShapeError


def check_positive(value, name, *, strict=True):
    if not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise ConfigurationError(f"{name} must be a finite number, got {value!r}")
    if strict and value <= 0:
        raise ConfigurationError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ConfigurationError(f"{name} must be >= 0, got {value!r}")
    return value


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_range(pair, name):
    """Validate a ``(low, high)`` pair with ``low <= high``, both finite."""
    try:
        low, high = pair
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a (min, max) pair, got {pair!r}") from None
    for v in (low, high):
        if not isinstance(v, numbers.Real) or not math.isfinite(v):
            raise ConfigurationError(f"{name} bounds must be finite numbers, got {pair!r}")
    if low > high:
        raise ConfigurationError(f"{name} is empty: {pair!r}")
    return low, high


def check_finite_array(a, name="array", ndim=None, shape=None):
    a = np.asarray(a, dtype=np.float64)
    if ndim is not None and a.ndim != ndim:
        raise ShapeError(f"{name} must have {ndim} dimensions, got shape {a.shape}")
    if shape is not None:
        for i, (got, want) in enumerate(zip(a.shape, shape)):
            if want is not None and got != want:
                raise ShapeError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return a
