"""Input validation shared by the functional API and the estimators."""

import math
import numbers

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length, column_or_1d

from .transform import MarginPair, TwoSampleData


def check_alpha(alpha, name="alpha"):
    if not isinstance(alpha, numbers.Real) or not 0.0 < alpha < 0.5:
        raise ValueError(f"{name} must lie in (0, 0.5), got {alpha!r}")
    return float(alpha)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_sigma(sigma):
    if not isinstance(sigma, numbers.Real) or not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be a positive finite number, got {sigma!r}")
    return float(sigma)


def check_margins(margins=None, eps_lower=None, eps_upper=None):
    if isinstance(margins, MarginPair):
        return margins
    if margins is not None:
        eps_lower, eps_upper = margins
    if eps_lower is None or eps_upper is None:
        raise ValueError("both eps_lower and eps_upper are required")
    return MarginPair(eps_lower, eps_upper)


def check_two_sample(X, y=None):
    """Coerce estimator input into :class:`TwoSampleData`.

    ``X`` is either a 1-d/single-column array of values with ``y`` giving the
    group label of each row, or, when ``y`` is None, a pair ``(sample_a, sample_b)``.
    Labels are sorted; the smaller label is group a.

    Returns
    -------
    data : TwoSampleData
    classes : ndarray of shape (2,)
    """
    if isinstance(X, TwoSampleData):
        return X, np.array([1, 2])
    if y is None:
        if not isinstance(X, (tuple, list)) or len(X) != 2:
            raise ValueError("without y, X must be a pair (sample_a, sample_b)")
        a = column_or_1d(check_array(np.asarray(X[0], dtype=float).reshape(-1, 1)))
        b = column_or_1d(check_array(np.asarray(X[1], dtype=float).reshape(-1, 1)))
        return TwoSampleData(a, b), np.array([1, 2])
    values = check_array(X, ensure_2d=False, dtype=float)
    if values.ndim == 2:
        if values.shape[1] != 1:
            raise ValueError(f"X must have a single feature column, got shape {values.shape}")
        values = values[:, 0]
    labels = column_or_1d(y)
    check_consistent_length(values, labels)
    classes = np.unique(labels)
    if classes.size != 2:
        raise ValueError(f"y must contain exactly two groups, found {classes.size}")
    return TwoSampleData(values[labels == classes[0]], values[labels == classes[1]]), classes
