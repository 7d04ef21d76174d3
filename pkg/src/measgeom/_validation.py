"""Input validation helpers built on :mod:`sklearn.utils`."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import InvalidArgumentError


def check_points(X, min_samples=1):
    """Validate a point cloud as a finite (n, D) float64 array."""
    if isinstance(X, (list, tuple)) and X and np.ndim(X[0]) == 1:
        lengths = {len(x) for x in X}
        if len(lengths) > 1:
            raise InvalidArgumentError(f"points have mismatched dimensions {sorted(lengths)}")
    try:
        return check_array(X, dtype=np.float64, ensure_min_samples=min_samples,
                           ensure_all_finite=True)
    except ValueError as exc:
        raise InvalidArgumentError(str(exc)) from None


def check_distance_matrix(d, atol=1e-12):
    """Validate a square, symmetric, nonnegative matrix with zero diagonal."""
    try:
        d = check_array(d, dtype=np.float64, ensure_min_samples=1, ensure_min_features=1,
                        ensure_all_finite=True)
    except ValueError as exc:
        raise InvalidArgumentError(str(exc)) from None
    if d.shape[0] != d.shape[1]:
        raise InvalidArgumentError(f"distance matrix must be square, got {d.shape}")
    if np.any(d < 0):
        raise InvalidArgumentError("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise InvalidArgumentError("distance matrix must have a zero diagonal")
    scale = max(1.0, float(d.max()))
    if not np.allclose(d, d.T, rtol=0.0, atol=atol * scale):
        raise InvalidArgumentError("distance matrix is not symmetric")
    return d


def check_positive(name, value):
    if not (isinstance(value, (int, float, np.integer, np.floating))
            and np.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be a positive real, got {value!r}")
    return float(value)
