"""Input checks shared by the fitting estimators."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.utils.validation import check_array

from .optimize import FitError


class UniformWeightWarning(UserWarning):
    pass


def as_abscissa(X) -> np.ndarray:
    """1-D float abscissa from a vector or an (n, 1) array."""
    a = check_array(X, ensure_2d=False, dtype=float)
    if a.ndim == 2:
        if a.shape[1] != 1:
            raise FitError("expected a single abscissa column")
        a = a[:, 0]
    return a


def as_features(X, n_features: int) -> np.ndarray:
    a = check_array(X, dtype=float)
    if a.shape[1] != n_features:
        raise FitError(f"expected {n_features} columns, got {a.shape[1]}")
    return a


def as_sigma(sigma, shape, warn: bool = False):
    """Validated per-point standard deviations, or None for uniform weighting."""
    if sigma is None:
        if warn:
            warnings.warn("no per-point uncertainties supplied; weighting uniformly", UniformWeightWarning, stacklevel=3)
        return None
    s = np.broadcast_to(np.asarray(sigma, dtype=float), shape).copy()
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise FitError("sigma must be finite and > 0")
    return s


def require_points(n: int, minimum: int, what: str) -> None:
    if n < minimum:
        raise FitError(f"{what} needs at least {minimum} points, got {n}")
