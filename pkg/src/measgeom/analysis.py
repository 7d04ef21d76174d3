"""Checks on an embedding against the known turntable angles.

* :func:`check_topology` - is the embedding a circle traversed once, in order?
* :func:`detect_modes` - peaks of a density profile along the recovered circle.
* :func:`procrustes_align` - best rigid fit between two index-aligned embeddings.
* :func:`compare_density_Y_vs_Z` - density on the images vs. on the embedding.
* :func:`uniformity_report` - how far a profile is from uniform.

All results are invariant to rotating or reflecting the embedding, except for
the sign of the winding number and the raw embedded angles.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .density import DensityProfile, calibrate_radius, density_ratio, local_density
from .diffusion import Embedding, diffusion_map, pairwise_distances
from .exceptions import InvalidArgumentError, NumericalDegeneracyError, UnsupportedStructureError
from .scene import TWO_PI, torus_distance

ANTIPODAL_TOL = math.radians(15.0)


def _coords(e):
    return e.coords if isinstance(e, Embedding) else np.asarray(e, dtype=float)


def _angles(angles, n):
    if angles is None:
        raise InvalidArgumentError("true angles are required")
    a = np.asarray([getattr(x, "angle", x) for x in angles], dtype=float).reshape(-1)
    if len(a) != n:
        raise InvalidArgumentError(f"{len(a)} angles for {n} embedded points")
    return a


@dataclass(frozen=True, eq=False)
class TopologyReport:
    embedded_angle: np.ndarray
    cyclic_order_ok: bool
    winding_number: int


def check_topology(e, angles=None):
    """Does the embedded angle ``atan2(z2, z1)`` wind once around the origin,
    strictly monotonically, as the true angle goes once around the circle?"""
    z = _coords(e)
    if z.ndim != 2 or z.shape[1] < 2:
        raise InvalidArgumentError("topology check needs at least 2 embedding coordinates")
    if angles is None and isinstance(e, Embedding):
        angles = e.angles
    a = _angles(angles, len(z))
    theta = np.arctan2(z[:, 1], z[:, 0])
    order = np.argsort(a, kind="stable")
    t = theta[order]
    steps = np.angle(np.exp(1j * (np.roll(t, -1) - t)))
    winding = int(round(steps.sum() / TWO_PI))
    monotone = bool(np.all(steps > 0) or np.all(steps < 0))
    ok = monotone and abs(winding) == 1
    return TopologyReport(theta, ok, winding)


_GRID = 2.0 ** 32


def circular_moving_average(x, window):
    x = np.asarray(x, dtype=float)
    n = len(x)
    window = min(int(window), n if n % 2 else n - 1)
    if window < 1 or window % 2 == 0:
        raise InvalidArgumentError(f"smoothing window must be a positive odd integer, got {window}")
    h = window // 2
    padded = np.concatenate([x[n - h:], x, x[:h]]) if h else x
    c = np.concatenate([[0.0], np.cumsum(padded)])
    return (c[window:] - c[:-window]) / window


def _circular_peaks(s):
    """Plateau runs of a circular signal that are strictly higher than both
    neighboring samples.  Returns a list of index arrays."""
    n = len(s)
    if n < 3:
        return []
    change = np.flatnonzero(s != np.roll(s, 1))
    if len(change) == 0:
        return []
    runs = []
    for k, start in enumerate(change):
        stop = change[(k + 1) % len(change)]
        length = (stop - start) % n or n
        runs.append((start + np.arange(length)) % n)
    peaks = []
    for run in runs:
        left = s[(run[0] - 1) % n]
        right = s[(run[-1] + 1) % n]
        if s[run[0]] > left and s[run[0]] > right:
            peaks.append(run)
    return peaks


def _circular_prominence(s, pos):
    """Height of ``s[pos]`` above the higher of the two lowest points reached
    walking left and right until the signal exceeds it."""
    n = len(s)
    h = s[pos]
    rolled = np.roll(s, -pos)
    right = rolled[1:]
    left = rolled[:0:-1]

    def low(seq):
        above = np.flatnonzero(seq > h)
        stop = above[0] if len(above) else len(seq)
        return seq[:stop].min() if stop > 0 else h

    return float(h - max(low(right), low(left)))


@dataclass(frozen=True, eq=False)
class ModeReport:
    mode_indices: np.ndarray
    mode_angles: np.ndarray
    mode_density: np.ndarray
    prominence: np.ndarray
    antipodal_flag: bool
    threshold: float
    smoothing_window: int
    prominence_frac: float
    smoothed: np.ndarray = field(repr=False, default=None)
    order: np.ndarray = field(repr=False, default=None)

    @property
    def n_modes(self):
        return len(self.mode_indices)


def detect_modes(p, e, angles=None, smoothing_window=21, prominence_frac=0.2):
    """Find density peaks along the recovered circle.

    Densities are ordered by embedded angle, smoothed with a circular moving
    average and scanned for local maxima.  A maximum counts as a mode when
    its prominence is at least ``prominence_frac`` times the range
    (max - min) of the unsmoothed densities.
    """
    values = p.values if isinstance(p, DensityProfile) else np.asarray(p, dtype=float)
    z = _coords(e)
    if angles is None and isinstance(e, Embedding):
        angles = e.angles
    a = _angles(angles, len(z))
    if len(values) != len(z):
        raise InvalidArgumentError("density profile and embedding differ in length")
    topo = check_topology(z, a)
    if not topo.cyclic_order_ok:
        raise UnsupportedStructureError(
            f"embedding is not a circle traversed once in angle order "
            f"(winding {topo.winding_number}); modes along the circle are undefined")
    if not 0 <= prominence_frac:
        raise InvalidArgumentError("prominence_frac must be non-negative")

    order = np.argsort(topo.embedded_angle, kind="stable")
    smoothed = circular_moving_average(values[order], smoothing_window)
    lo = float(values.min())
    span = float(values.max() - lo)
    threshold = prominence_frac * span

    found = []
    if span > 0:
        # peaks are located on a range-normalised copy snapped to a fine grid,
        # so rounding noise in the running sum cannot split a plateau and the
        # result does not depend on the units of p
        snapped = np.round((smoothed - lo) / span * _GRID) / _GRID
        for run in _circular_peaks(snapped):
            prom = _circular_prominence(snapped, run[0])
            if prom < prominence_frac or prom <= 0:
                continue
            members = order[run]
            # representative point: highest raw density, then lowest index;
            # independent of traversal direction
            best = members[np.lexsort((members, -values[members]))[0]]
            found.append((snapped[run[0]], smoothed[run[0]], prom * span, int(best)))
    found.sort(key=lambda t: (-t[0], t[3]))
    idx = np.array([f[3] for f in found], dtype=np.int64)
    mode_angles = a[idx] if len(idx) else np.zeros(0)
    antipodal = bool(len(idx) >= 2
                     and abs(float(torus_distance(mode_angles[0], mode_angles[1])) - math.pi)
                     <= ANTIPODAL_TOL)
    return ModeReport(idx, mode_angles, np.array([f[1] for f in found]),
                      np.array([f[2] for f in found]), antipodal, threshold,
                      int(smoothing_window), float(prominence_frac), smoothed, order)


def broadside_angles(camera_azimuth, long_axis_angle=0.0):
    """Turntable angles at which the object's long axis is perpendicular to
    the horizontal viewing direction of a camera at ``camera_azimuth``."""
    base = camera_azimuth - long_axis_angle + math.pi / 2
    return np.mod(np.array([base, base + math.pi]), TWO_PI)


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    """``scale * rotation @ a_i + translation`` approximates ``b_i``."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float
    residual: float
    baseline_residual: float = float("nan")

    @property
    def residual_ratio(self):
        return self.residual / self.baseline_residual


def _procrustes(A, B, with_scale):
    mu_a, mu_b = A.mean(axis=0), B.mean(axis=0)
    A0, B0 = A - mu_a, B - mu_b
    norm_a = float(np.sum(A0 ** 2))
    if norm_a == 0.0 or float(np.sum(B0 ** 2)) == 0.0:
        raise NumericalDegeneracyError("cannot align a point set whose points all coincide")
    U, S, Vt = np.linalg.svd(A0.T @ B0)
    R = U @ Vt  # row-vector convention: A0 @ R ~ B0
    c = float(S.sum() / norm_a) if with_scale else 1.0
    t = mu_b - c * mu_a @ R
    resid = float(np.sqrt(np.mean(np.sum((c * A @ R + t - B) ** 2, axis=1))))
    return R.T, t, c, resid


def split_half_baseline(distances, s=2, sigma_multiplier=1.0, sigma=None):
    """Residual of aligning the embeddings of the even- and odd-indexed halves
    of one dataset, a same-modality yardstick for :func:`procrustes_align`.

    With ``sigma=None`` each half selects its own kernel width with the same
    multiplier.
    """
    d = np.asarray(distances, dtype=float)
    n = d.shape[0]
    if n < 4:
        raise InvalidArgumentError("split-half baseline needs at least 4 points")
    m = n // 2
    even, odd = np.arange(0, 2 * m, 2), np.arange(1, 2 * m, 2)
    ea = diffusion_map(d[np.ix_(even, even)], s=s, sigma=sigma, sigma_multiplier=sigma_multiplier)
    eb = diffusion_map(d[np.ix_(odd, odd)], s=s, sigma=sigma, sigma_multiplier=sigma_multiplier)
    return _procrustes(ea.coords, eb.coords, False)[3]


def procrustes_align(a, b, with_scale=False, baseline_distances=None, sigma_multiplier=None):
    """Optimal rigid (optionally similarity) alignment of ``a`` onto ``b``.

    Rows must be index-aligned.  The rotation is the orthogonal polar factor
    of the cross-covariance, so reflections are allowed.  When
    ``baseline_distances`` (the distance matrix behind ``a``) is given, the
    split-half baseline residual is computed with ``a``'s kernel multiplier.
    """
    A, B = _coords(a), _coords(b)
    if A.shape != B.shape:
        raise InvalidArgumentError(f"embeddings differ in shape: {A.shape} vs {B.shape}")
    rot, t, c, resid = _procrustes(A, B, with_scale)
    baseline = float("nan")
    if baseline_distances is not None:
        if sigma_multiplier is None:
            sigma_multiplier = getattr(a, "sigma_multiplier", 1.0)
            if not np.isfinite(sigma_multiplier):
                sigma_multiplier = 1.0
        baseline = split_half_baseline(baseline_distances, s=A.shape[1],
                                       sigma_multiplier=sigma_multiplier)
    return AlignmentReport(rot, t, c, resid, baseline)


@dataclass(frozen=True, eq=False)
class AgreementReport:
    spearman: float
    mode_offset: float
    radius_Y: float
    radius_Z: float
    max_density_Y: float
    max_density_Z: float
    profile_Y: DensityProfile = field(repr=False)
    profile_Z: DensityProfile = field(repr=False)
    modes_Y: ModeReport = field(repr=False, default=None)
    modes_Z: ModeReport = field(repr=False, default=None)

    @property
    def max_density_rel_diff(self):
        return abs(self.max_density_Y / self.max_density_Z - 1.0)


def compare_density_Y_vs_Z(ds, e, rY="auto", rZ=0.05, angles=None, distances_Y=None,
                           smoothing_window=21, prominence_frac=0.2, rtol=0.05):
    """Compare the local density of the raw measurements with the density of
    their embedding.

    ``rY="auto"`` picks the measurement-space radius whose maximum density
    matches the embedding's maximum density within ``rtol``.  The mode offset
    is the wrap-around angle between the strongest modes of the two profiles
    (``nan`` when either profile has no modes).
    """
    z = _coords(e)
    if angles is None:
        angles = getattr(ds, "angles", None)
        if angles is None and isinstance(e, Embedding):
            angles = e.angles
    a = _angles(angles, len(z))
    if distances_Y is None:
        distances_Y = pairwise_distances(ds)
    if distances_Y.shape[0] != len(z):
        raise InvalidArgumentError("measurements and embedding differ in length")
    pZ = local_density(z, rZ, "embedding-euclidean")
    if isinstance(rY, str):
        if rY != "auto":
            raise InvalidArgumentError(f"rY must be a positive number or 'auto', got {rY!r}")
        rY, _ = calibrate_radius(distances_Y, pZ.values.max(), rtol=rtol)
    pY = local_density(None, rY, "measurement-euclidean", distances=distances_Y)
    if np.ptp(pY.values) == 0 or np.ptp(pZ.values) == 0:
        rho = 1.0 if np.array_equal(pY.counts, pZ.counts) else float("nan")
    else:
        rho = float(spearmanr(pY.values, pZ.values).statistic)
    mY = detect_modes(pY, z, a, smoothing_window, prominence_frac)
    mZ = detect_modes(pZ, z, a, smoothing_window, prominence_frac)
    if mY.n_modes and mZ.n_modes:
        offset = float(torus_distance(mY.mode_angles[0], mZ.mode_angles[0]))
    else:
        offset = float("nan")
    return AgreementReport(rho, offset, float(rY), float(rZ), float(pY.values.max()),
                           float(pZ.values.max()), pY, pZ, mY, mZ)


@dataclass(frozen=True)
class UniformityReport:
    density_ratio: float
    cv: float
    p_value: float
    n_boot: int


def coefficient_of_variation(values):
    v = np.asarray(values, dtype=float)
    if v.max() == v.min():
        return 0.0  # np.std of a constant array is not always exactly 0
    return float(v.std() / v.mean())


def uniformity_report(p, n_boot=200, seed=0):
    """Ratio, coefficient of variation and a bootstrap p-value for uniformity.

    The null distribution of the CV is sampled by drawing ``n`` i.i.d.
    uniform angles and computing their wrap-around local density with the
    radius at which a uniform sample has the same expected ball count as
    ``p``.  The p-value is ``(1 + #{cv_null >= cv}) / (n_boot + 1)``.
    """
    values = p.values
    n = len(values)
    cv = coefficient_of_variation(values)
    ratio = density_ratio(p)
    if n_boot <= 0 or n < 2:
        return UniformityReport(ratio, cv, float("nan"), 0)
    mean_count = float(np.mean(p.counts)) if p.counts is not None else 1.0
    # expected count 1 + (n - 1) * r / pi for an arc of half-width r
    r_null = min(math.pi, max(math.pi * (mean_count - 1.0) / (n - 1), 1e-12))
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(n_boot):
        null = local_density(rng.uniform(0.0, TWO_PI, size=n), r_null, "torus-wraparound")
        exceed += coefficient_of_variation(null.values) >= cv
    return UniformityReport(ratio, cv, (1 + exceed) / (n_boot + 1), int(n_boot))
