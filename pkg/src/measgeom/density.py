"""Local density: normalized counts of points inside a closed ball.

The count for point ``i`` includes ``i`` itself, so every density is strictly
positive.  Three metrics are supported:

* ``"embedding-euclidean"`` and ``"measurement-euclidean"``: Euclidean distance
  between rows of a point array (diffusion coordinates or image vectors);
* ``"torus-wraparound"``: wrap-around distance between angles.

A precomputed distance matrix can be passed instead of points.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator

from ._validation import check_distance_matrix, check_points, check_positive
from .exceptions import InvalidArgumentError, NumericalDegeneracyError
from .scene import torus_distance

METRICS = ("embedding-euclidean", "measurement-euclidean", "torus-wraparound")
DEFAULT_RADIUS_Z = 0.05
DEFAULT_RADIUS_Y = 9.0


@dataclass(frozen=True, eq=False)
class DensityProfile:
    radius: float
    values: np.ndarray
    counts: np.ndarray
    metric_id: str

    @property
    def n(self):
        return len(self.values)

    def scaled(self, c):
        """Profile with values multiplied by ``c`` (no longer normalized)."""
        return DensityProfile(self.radius, self.values * c, self.counts, self.metric_id)


def distance_matrix_for(points, metric_id):
    if metric_id == "torus-wraparound":
        a = np.asarray(points, dtype=float).reshape(-1)
        return torus_distance(a[:, None], a[None, :])
    if metric_id in ("embedding-euclidean", "measurement-euclidean"):
        X = check_points(getattr(points, "images", points))
        if len(X) == 1:
            return np.zeros((1, 1))
        return squareform(pdist(X, metric="euclidean"))
    raise InvalidArgumentError(f"unknown metric {metric_id!r}; expected one of {METRICS}")


def ball_counts(d, r):
    """Number of points within the closed ball of radius ``r`` (self included)."""
    return np.count_nonzero(d <= r, axis=1)


def local_density(points=None, r=DEFAULT_RADIUS_Z, metric_id="embedding-euclidean",
                  distances=None):
    """Normalized local density of every point.

    Parameters
    ----------
    points : array-like, optional
        (n, D) coordinates, or (n,) angles for ``"torus-wraparound"``.
    r : float
        Ball radius in the units of the metric.
    metric_id : str
        One of :data:`METRICS`.
    distances : ndarray of shape (n, n), optional
        Precomputed distances in the chosen metric; ``points`` is then ignored.
    """
    r = check_positive("radius r", r)
    if metric_id not in METRICS:
        raise InvalidArgumentError(f"unknown metric {metric_id!r}; expected one of {METRICS}")
    if distances is None:
        if points is None:
            raise InvalidArgumentError("either points or distances is required")
        d = distance_matrix_for(points, metric_id)
    else:
        d = check_distance_matrix(distances)
    counts = ball_counts(d, r)
    values = counts / counts.sum()
    return DensityProfile(r, values, counts, metric_id)


def density_ratio(p):
    """max / min of the density values (>= 1)."""
    values = p.values if isinstance(p, DensityProfile) else np.asarray(p, dtype=float)
    return float(values.max() / values.min())


def max_density_for_radius(d, r):
    counts = ball_counts(d, r)
    return counts.max() / counts.sum()


def calibrate_radius(d, target_max, rtol=0.05, n_grid=64):
    """Radius whose maximum normalized density matches ``target_max``.

    While a ball is larger than the sample spacing but smaller than the
    curvature scale of the data, counts grow linearly in ``r`` and the
    normalized maximum barely changes, so many radii match.  The radii are
    scanned on a log grid from the median nearest-neighbor distance to the
    median pairwise distance; the result is the middle of the longest run of
    grid radii matching within ``rtol``.  Without any matching grid radius,
    the first bracket around the target is bisected over the distinct
    pairwise distances inside it.

    Returns
    -------
    r : float
    achieved_max : float
    """
    d = check_distance_matrix(d)
    n = d.shape[0]
    target_max = check_positive("target max density", target_max)
    if n < 2:
        raise InvalidArgumentError("radius calibration needs at least 2 points")
    off = d[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    nn = off.min(axis=1)
    r_lo = float(np.median(nn[nn > 0])) if np.any(nn > 0) else 0.0
    r_hi = float(np.median(off))
    if r_lo <= 0 or r_hi <= 0:
        raise NumericalDegeneracyError("all points coincide; density radius is undefined")
    if r_hi <= r_lo:
        r_hi = float(off.max())
    grid = np.geomspace(r_lo, r_hi, n_grid)
    vals = np.array([max_density_for_radius(d, r) for r in grid])
    match = np.abs(vals / target_max - 1.0) <= rtol

    if match.any():
        best_start, best_len, start = 0, 0, None
        for i, ok in enumerate(np.append(match, False)):
            if ok and start is None:
                start = i
            elif not ok and start is not None:
                if i - start > best_len:
                    best_start, best_len = start, i - start
                start = None
        k = best_start + (best_len - 1) // 2
        return float(grid[k]), float(vals[k])

    above = vals >= target_max
    brackets = np.flatnonzero(above[1:] != above[:-1])
    if len(brackets) == 0:
        raise NumericalDegeneracyError(
            f"no radius reaches max density {target_max:.4g} "
            f"(range {vals.min():.4g}..{vals.max():.4g})")
    b = brackets[0]
    cand = np.unique(off[(off > grid[b]) & (off <= grid[b + 1])])
    lo, hi = 0, len(cand) - 1
    rising = not above[b]
    while lo < hi:
        mid = (lo + hi) // 2
        if (max_density_for_radius(d, cand[mid]) >= target_max) == rising:
            hi = mid
        else:
            lo = mid + 1
    r = float(cand[lo]) if len(cand) else float(grid[b + 1])
    return r, float(max_density_for_radius(d, r))


class LocalDensity(BaseEstimator):
    """Estimator wrapper around :func:`local_density`.

    Parameters
    ----------
    radius : float, default=0.05
    metric : {"euclidean", "precomputed", "torus"}, default="euclidean"
    metric_id : str, optional
        Label recorded in the profile; inferred from ``metric`` when omitted.

    Attributes
    ----------
    profile_ : DensityProfile
    density_ : ndarray of shape (n_samples,)
    """

    def __init__(self, radius=DEFAULT_RADIUS_Z, metric="euclidean", metric_id=None):
        self.radius = radius
        self.metric = metric
        self.metric_id = metric_id

    def fit(self, X, y=None):
        if self.metric == "torus":
            mid = "torus-wraparound"
            self.profile_ = local_density(X, self.radius, mid)
        elif self.metric == "precomputed":
            mid = self.metric_id or "embedding-euclidean"
            self.profile_ = local_density(None, self.radius, mid, distances=X)
        elif self.metric == "euclidean":
            mid = self.metric_id or "embedding-euclidean"
            self.profile_ = local_density(X, self.radius, mid)
        else:
            raise InvalidArgumentError(f"unknown metric {self.metric!r}")
        self.density_ = self.profile_.values
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).density_
