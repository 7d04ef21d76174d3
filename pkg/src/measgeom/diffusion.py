"""Diffusion maps on a dense Euclidean distance matrix.

The pipeline is: pairwise distances -> Gaussian kernel ``W`` -> first
normalization ``Q W Q`` with ``Q = diag(rowsum(W))^-1`` -> second, symmetric
normalization with ``diag(rowsum)^-1/2`` -> full eigendecomposition -> the
coordinates ``lambda_k u_k(i) / u_0(i)`` for ``k = 1..s``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_distance_matrix, check_points
from .exceptions import ConvergenceError, InvalidArgumentError, NumericalDegeneracyError


def angles_to_points(angles):
    """Represent angles as unit complex numbers, i.e. rows ``(cos a, sin a)``."""
    a = np.asarray(angles, dtype=float).reshape(-1)
    return np.column_stack([np.cos(a), np.sin(a)])


def pairwise_distances(X):
    """Dense Euclidean distance matrix between the rows of ``X``.

    ``X`` may be an (n, D) array, a list of equal-length vectors or a
    :class:`~measgeom.render.Dataset`.  Each entry is accumulated over the
    coordinates in index order, so results do not depend on threading.
    """
    X = getattr(X, "images", X)
    X = check_points(X, min_samples=2)
    return squareform(pdist(X, metric="euclidean"))


def select_sigma(d, multiplier=1.0):
    """Median of the off-diagonal squared distances, times ``multiplier``.

    ``sigma`` enters the kernel as ``exp(-d**2 / sigma)``, so it has units of
    squared distance.
    """
    d = check_distance_matrix(d)
    if d.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 points to select sigma")
    if not multiplier > 0:
        raise InvalidArgumentError(f"sigma multiplier must be > 0, got {multiplier!r}")
    iu = np.triu_indices(d.shape[0], k=1)
    med = float(np.median(d[iu] ** 2))
    if med == 0.0:
        raise NumericalDegeneracyError(
            "median squared distance is zero (too many duplicate points); "
            "cannot select a kernel width")
    return multiplier * med


@dataclass(frozen=True, eq=False)
class KernelMatrices:
    """Intermediate matrices of the two-stage normalization.

    ``Q`` and ``Q_tilde`` hold the diagonals only.
    """

    W: np.ndarray
    Q: np.ndarray
    K_tilde: np.ndarray
    Q_tilde: np.ndarray
    K: np.ndarray
    sigma: float

    @property
    def n(self):
        return self.K.shape[0]


def build_kernel(d, sigma):
    d = check_distance_matrix(d)
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidArgumentError(f"sigma must be a positive real, got {sigma!r}")
    with np.errstate(over="ignore"):
        # tiny sigma: off-diagonal entries underflow to exactly 0
        W = np.exp(-(d ** 2) / sigma)
    row = W.sum(axis=1)
    if np.any(row == 0):
        raise NumericalDegeneracyError(
            "kernel row sum underflowed to zero; increase sigma")
    Q = 1.0 / row
    K_tilde = Q[:, None] * W * Q[None, :]
    row_t = K_tilde.sum(axis=1)
    if np.any(row_t == 0) or not np.all(np.isfinite(row_t)):
        raise NumericalDegeneracyError(
            "normalized kernel row sum is zero or not finite; increase sigma")
    Q_tilde = row_t ** -0.5
    K = Q_tilde[:, None] * K_tilde * Q_tilde[None, :]
    # remove the last-ulp asymmetry left by the diagonal scalings
    K = 0.5 * (K + K.T)
    return KernelMatrices(W, Q, K_tilde, Q_tilde, K, float(sigma))


@dataclass(frozen=True, eq=False)
class Embedding:
    """Diffusion coordinates and the spectrum they came from.

    Attributes
    ----------
    coords : ndarray of shape (n, s)
    eigenvalues : ndarray of shape (s + 1,)
        ``lambda_0 .. lambda_s`` in descending order.
    eigenvectors : ndarray of shape (n, s + 1)
        ``u_0 .. u_s`` as columns, each with a positive first entry.
    sigma : float
    angles : ndarray of shape (n,), optional
        Ground-truth angles carried along for analysis and output.
    """

    coords: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = None
    sigma: float = float("nan")
    sigma_multiplier: float = float("nan")
    angles: np.ndarray = None
    u0_sign_convention: str = "first entry of every eigenvector is positive"

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=float))
        if self.angles is not None:
            ang = np.asarray(self.angles, dtype=float).reshape(-1)
            if len(ang) != len(coords):
                raise InvalidArgumentError("angles and coordinates differ in length")
            object.__setattr__(self, "angles", ang)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def s(self):
        return self.coords.shape[1]

    def with_coords(self, coords):
        """Copy with replaced coordinates (e.g. after a rigid motion)."""
        return Embedding(coords, self.eigenvalues, self.eigenvectors, self.sigma,
                         self.sigma_multiplier, self.angles, self.u0_sign_convention)


def _fix_signs(vecs):
    for k in range(vecs.shape[1]):
        nz = np.flatnonzero(vecs[:, k])
        if len(nz) and vecs[nz[0], k] < 0:
            vecs[:, k] *= -1.0
    return vecs


def spectral_embed(kernel, s=2):
    """Eigendecompose ``kernel.K`` and form the ``s``-dimensional coordinates.

    All ``n`` eigenpairs are computed with a dense symmetric solver and sorted
    by descending eigenvalue.  Eigenvectors of (near-)repeated eigenvalues are
    only defined up to a rotation inside their eigenspace.
    """
    K = kernel.K if isinstance(kernel, KernelMatrices) else np.asarray(kernel, dtype=float)
    n = K.shape[0]
    if not isinstance(s, (int, np.integer)) or isinstance(s, bool) or s < 0:
        raise InvalidArgumentError(f"s must be a non-negative integer, got {s!r}")
    if s > n - 1:
        raise InvalidArgumentError(f"s={s} must be at most n-1={n - 1}")
    try:
        evals, evecs = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from None
    order = np.argsort(-evals, kind="stable")
    evals = evals[order][: s + 1]
    evecs = _fix_signs(np.array(evecs[:, order][:, : s + 1]))
    resid = np.linalg.norm(K @ evecs[:, 0] - evals[0] * evecs[:, 0])
    if not np.isfinite(resid) or resid > 1e-6 * max(np.linalg.norm(K), 1.0):
        raise ConvergenceError(
            f"leading eigenpair residual {resid:.3g} is too large", residual=resid)
    u0 = evecs[:, 0]
    if np.any(np.abs(u0) < 1e-12):
        raise NumericalDegeneracyError(
            "leading eigenvector has (near-)zero entries; the kernel is disconnected, "
            "increase sigma")
    coords = evals[1:][None, :] * evecs[:, 1:] / u0[:, None]
    sigma = kernel.sigma if isinstance(kernel, KernelMatrices) else float("nan")
    return Embedding(coords, evals, evecs, sigma)


def diffusion_distance(e, i, j):
    """Euclidean distance between embedded points ``i`` and ``j``."""
    n = e.n
    for idx in (i, j):
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < n:
            raise IndexError(f"index {idx!r} out of range for {n} points")
    return float(np.linalg.norm(e.coords[i] - e.coords[j]))


def diffusion_map(d, s=2, sigma=None, sigma_multiplier=1.0, angles=None):
    """Full pipeline from a distance matrix to an :class:`Embedding`."""
    d = check_distance_matrix(d)
    if sigma is None:
        sigma = select_sigma(d, sigma_multiplier)
    emb = spectral_embed(build_kernel(d, sigma), s)
    return Embedding(emb.coords, emb.eigenvalues, emb.eigenvectors, sigma,
                     sigma_multiplier, angles)


class DiffusionMap(TransformerMixin, BaseEstimator):
    """Diffusion-map embedding as a scikit-learn estimator.

    Parameters
    ----------
    n_components : int, default=2
        Number of diffusion coordinates ``s``.
    sigma : float, optional
        Kernel width (squared-distance units).  Chosen by the median heuristic
        when omitted.
    sigma_multiplier : float, default=1.0
        Scales the median heuristic.
    metric : {"euclidean", "precomputed", "angle"}, default="euclidean"
        ``"precomputed"`` takes a distance matrix; ``"angle"`` takes a column
        of angles and embeds them as unit complex numbers.

    Attributes
    ----------
    embedding_ : ndarray of shape (n_samples, n_components)
    eigenvalues_ : ndarray of shape (n_components + 1,)
    sigma_ : float
    result_ : Embedding

    Like :class:`sklearn.manifold.SpectralEmbedding` there is no
    out-of-sample ``transform``; use :meth:`fit_transform`.
    """

    def __init__(self, n_components=2, sigma=None, sigma_multiplier=1.0, metric="euclidean"):
        self.n_components = n_components
        self.sigma = sigma
        self.sigma_multiplier = sigma_multiplier
        self.metric = metric

    def _distances(self, X):
        if self.metric == "precomputed":
            return check_distance_matrix(X)
        if self.metric == "angle":
            return pairwise_distances(angles_to_points(np.asarray(X, dtype=float).reshape(-1)))
        if self.metric == "euclidean":
            return pairwise_distances(X)
        raise InvalidArgumentError(f"unknown metric {self.metric!r}")

    def fit(self, X, y=None):
        d = self._distances(X)
        self.result_ = diffusion_map(d, s=self.n_components, sigma=self.sigma,
                                     sigma_multiplier=self.sigma_multiplier)
        self.embedding_ = self.result_.coords
        self.eigenvalues_ = self.result_.eigenvalues
        self.sigma_ = self.result_.sigma
        if self.metric == "precomputed":
            self.n_features_in_ = d.shape[0]
        elif self.metric == "angle":
            self.n_features_in_ = 1
        else:
            self.n_features_in_ = np.shape(getattr(X, "images", X))[-1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        raise NotImplementedError(
            "diffusion maps has no out-of-sample extension here; use fit_transform")
