"""Measurement function: orthographic flat-shaded rendering of the turntable.

Images are flat float64 vectors of length ``width * height * 3`` (row-major,
channel-interleaved, values in [0, 1]).  :class:`TurntableRenderer` wraps the
renderer as a scikit-learn transformer mapping angles to image vectors.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import InvalidArgumentError
from .scene import TWO_PI, CameraConfig, TriMesh, builtin_mesh, wrap_angle

# angles are snapped to this grid after wrapping so that theta and theta + 2*pi
# give bit-identical images
ANGLE_QUANTUM = 2.0 ** -40


def canonical_angle(angle):
    a = float(wrap_angle(float(angle)))
    a = round(a / ANGLE_QUANTUM) * ANGLE_QUANTUM
    return 0.0 if a >= TWO_PI else a


def project(mesh, angle, cam):
    """Camera-frame coordinates of the mesh vertices after turning it by ``angle``.

    Returns an (V, 3) array of (right, up, towards-camera) coordinates.
    """
    a = canonical_angle(angle)
    c, s = math.cos(a), math.sin(a)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return mesh.vertices @ (cam.basis() @ rot).T


def to_pixels(cam_xyz, cam):
    """Map camera-frame x/y onto continuous pixel coordinates (column, row).

    Pixel ``(r, c)`` has its center at ``(c + 0.5, r + 0.5)``.
    """
    pix = cam.scale / cam.height
    col = cam_xyz[:, 0] / pix + 0.5 * cam.width
    row = 0.5 * cam.height - cam_xyz[:, 1] / pix
    return col, row


def face_shading(cam_xyz, triangles, light):
    """Lambertian factor per face, with normals flipped to face the camera."""
    p = cam_xyz[triangles]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    norm = np.linalg.norm(n, axis=1)
    ok = norm > 0
    n[ok] /= norm[ok, None]
    n[n[:, 2] < 0] *= -1.0
    return np.maximum(0.0, n @ np.asarray(light, dtype=float))


def rasterize(mesh, angle, cam):
    """Z-buffer rasterization.

    Returns ``(face_index, depth)`` arrays of shape (height, width); pixels
    not covered by any triangle have ``face_index == -1``.  A pixel center
    belongs to a triangle when all three edge functions are >= 0 (closed
    triangle).  The nearest depth wins; equal depths keep the lower index.
    """
    h, w = cam.height, cam.width
    face = np.full((h, w), -1, dtype=np.int64)
    zbuf = np.full((h, w), -np.inf)
    if mesh.n_triangles == 0:
        return face, zbuf
    xyz = project(mesh, angle, cam)
    col, row = to_pixels(xyz, cam)
    depth = xyz[:, 2]

    for k, (i0, i1, i2) in enumerate(mesh.triangles):
        x0, x1, x2 = col[i0], col[i1], col[i2]
        y0, y1, y2 = row[i0], row[i1], row[i2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        c_lo = max(int(math.ceil(min(x0, x1, x2) - 0.5)), 0)
        c_hi = min(int(math.floor(max(x0, x1, x2) - 0.5)), w - 1)
        r_lo = max(int(math.ceil(min(y0, y1, y2) - 0.5)), 0)
        r_hi = min(int(math.floor(max(y0, y1, y2) - 0.5)), h - 1)
        if c_lo > c_hi or r_lo > r_hi:
            continue
        px = np.arange(c_lo, c_hi + 1) + 0.5
        py = (np.arange(r_lo, r_hi + 1) + 0.5)[:, None]
        sign = 1.0 if area > 0 else -1.0
        e0 = sign * ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1))
        e1 = sign * ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2))
        e2 = sign * ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0))
        inside = (e0 >= 0) & (e1 >= 0) & (e2 >= 0)
        if not inside.any():
            continue
        z = (e0 * depth[i0] + e1 * depth[i1] + e2 * depth[i2]) / abs(area)
        zb = zbuf[r_lo:r_hi + 1, c_lo:c_hi + 1]
        win = inside & (z > zb)
        zb[win] = z[win]
        face[r_lo:r_hi + 1, c_lo:c_hi + 1][win] = k
    return face, zbuf


def sample_grid_camera(cam):
    """Camera whose pixel centers are the supersampling positions of ``cam``."""
    k = cam.supersample
    if k == 1:
        return cam
    return replace(cam, width=cam.width * k, height=cam.height * k, supersample=1)


def render_view(mesh, angle, cam):
    """Render ``mesh`` turned by ``angle`` as seen by ``cam``.

    Returns a flat float64 vector of length ``cam.width * cam.height * 3``.
    With ``cam.supersample = k`` each pixel is the mean of its ``k x k``
    sub-pixel samples.
    """
    grid = sample_grid_camera(cam)
    face, _ = rasterize(mesh, angle, grid)
    img = np.empty((grid.height, grid.width, 3))
    img[:] = cam.background_color
    covered = face >= 0
    if covered.any():
        shade = face_shading(project(mesh, angle, grid), mesh.triangles, cam.light_direction)
        colors = np.clip(mesh.face_colors * shade[:, None], 0.0, 1.0)
        img[covered] = colors[face[covered]]
    k = cam.supersample
    if k > 1:
        img = img.reshape(cam.height, k, cam.width, k, 3).mean(axis=(1, 3))
    return img.reshape(-1)


def coverage_mask(image, cam):
    """Boolean (height, width) mask of pixels that differ from the background."""
    img = np.asarray(image).reshape(cam.height, cam.width, 3)
    return np.any(img != np.asarray(cam.background_color), axis=2)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rendered measurements: ``images[i]`` is the view at ``angles[i]``."""

    angles: np.ndarray
    images: np.ndarray
    camera: CameraConfig
    mesh_id: str = "mesh"

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        images = np.asarray(self.images, dtype=float)
        if images.ndim != 2 or images.shape[0] != angles.shape[0]:
            raise InvalidArgumentError(
                f"need one image per angle, got images {images.shape} for {len(angles)} angles")
        if images.shape[1] != self.camera.n_features:
            raise InvalidArgumentError(
                f"image length {images.shape[1]} does not match camera ({self.camera.n_features})")
        if np.any((angles < 0) | (angles >= TWO_PI)):
            raise InvalidArgumentError("angles must lie in [0, 2*pi)")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "images", images)

    @property
    def n(self):
        return len(self.angles)

    @property
    def n_features(self):
        return self.images.shape[1]

    def subset(self, index):
        index = np.asarray(index)
        return Dataset(self.angles[index], self.images[index], self.camera, self.mesh_id)


def render_dataset(mesh, angles, cam):
    """Render one image per angle, in order."""
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if len(angles) == 0:
        raise InvalidArgumentError("angle list is empty")
    images = np.empty((len(angles), cam.n_features))
    for i, a in enumerate(angles):
        images[i] = render_view(mesh, a, cam)
    return Dataset(angles, images, cam, mesh_id=mesh.name)


class TurntableRenderer(TransformerMixin, BaseEstimator):
    """Transformer mapping turntable angles to rendered image vectors.

    Parameters
    ----------
    mesh : TriMesh, optional
        Object on the turntable; the built-in quadruped when omitted.
    camera : CameraConfig, optional
        Default side camera when omitted.

    Examples
    --------
    >>> from sklearn.pipeline import make_pipeline
    >>> from measgeom import DiffusionMap, sample_angles
    >>> pipe = make_pipeline(TurntableRenderer(), DiffusionMap(n_components=2))
    >>> z = pipe.fit_transform(sample_angles(50)[:, None])
    >>> z.shape
    (50, 2)
    """

    def __init__(self, mesh=None, camera=None):
        self.mesh = mesh
        self.camera = camera

    def _resolved(self):
        mesh = builtin_mesh() if self.mesh is None else self.mesh
        cam = CameraConfig() if self.camera is None else self.camera
        if not isinstance(mesh, TriMesh):
            raise InvalidArgumentError("mesh must be a TriMesh")
        return mesh, cam

    def fit(self, X=None, y=None):
        self.mesh_, self.camera_ = self._resolved()
        self.n_features_out_ = self.camera_.n_features
        return self

    def transform(self, X):
        if not hasattr(self, "mesh_"):
            self.fit()
        angles = np.asarray(X, dtype=float)
        if angles.ndim == 2:
            if angles.shape[1] != 1:
                raise InvalidArgumentError("expected a single column of angles")
            angles = angles[:, 0]
        return render_dataset(self.mesh_, wrap_angle(angles), self.camera_).images
