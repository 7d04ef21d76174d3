"""Phenomenon side of the experiment: turntable angles, the rigid object, cameras.

Angles live on the circle [0, 2*pi); the object is a triangle mesh spun about
the z-axis; a :class:`CameraConfig` fixes everything else the measurement
depends on.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import InvalidArgumentError, MeshParseError

TWO_PI = 2.0 * math.pi
DEFAULT_FACE_COLOR = (0.5, 0.5, 0.5)
SYMMETRY_TOL = 1e-9


class SymmetryWarning(UserWarning):
    """The mesh is mapped onto itself by a nontrivial rotation about z."""


def wrap_angle(a):
    """Map angles onto [0, 2*pi)."""
    out = np.mod(a, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def torus_distance(a, b):
    """Wrap-around distance min(|a-b|, 2*pi-|a-b|), broadcasting."""
    d = np.abs(wrap_angle(np.asarray(a, dtype=float)) - wrap_angle(np.asarray(b, dtype=float)))
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class AngleSample:
    index: int
    angle: float


def sample_angles(n, mode="equispaced", seed=None):
    """Draw ``n`` orientation angles on the circle.

    Parameters
    ----------
    n : int
        Number of samples, at least 1.
    mode : {"equispaced", "uniform"}
        ``"equispaced"`` returns ``2*pi*i/n`` exactly; ``"uniform"`` draws
        i.i.d. uniform angles from a generator seeded with ``seed``.
    seed : int, optional
        Seed for the uniform mode.

    Returns
    -------
    ndarray of shape (n,)
        Angles in [0, 2*pi); entry ``i`` is the angle of sample ``i``.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    if mode == "equispaced":
        return TWO_PI * np.arange(n) / n
    if mode in ("uniform", "uniform-random"):
        rng = np.random.default_rng(seed)
        return wrap_angle(rng.uniform(0.0, TWO_PI, size=n))
    raise InvalidArgumentError(f"unknown angle mode {mode!r}")


def as_angle_samples(angles):
    return [AngleSample(i, float(a)) for i, a in enumerate(angles)]


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh with one RGB color per face.

    Arrays are copied and made read-only on construction.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    face_colors: np.ndarray = None
    name: str = "mesh"

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.face_colors is None:
            c = np.tile(np.asarray(DEFAULT_FACE_COLOR, dtype=float), (len(t), 1))
        else:
            c = np.array(self.face_colors, dtype=float).reshape(-1, 3)
        if len(c) != len(t):
            raise InvalidArgumentError(
                f"{len(c)} face colors given for {len(t)} triangles")
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise InvalidArgumentError(
                f"triangle index out of range for {len(v)} vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("vertices must be finite")
        if np.any((c < 0) | (c > 1)):
            raise InvalidArgumentError("face colors must lie in [0, 1]")
        for arr in (v, t, c):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "face_colors", c)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    def is_degenerate(self):
        return self.n_triangles == 0 or not np.any(self.triangle_areas() > 0)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def rotate_about_z(mesh, angle):
    """Rigidly rotate ``mesh`` by ``angle`` radians about the z-axis."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    v = mesh.vertices @ rot.T
    return TriMesh(v, mesh.triangles, mesh.face_colors, name=mesh.name)


def hausdorff_distance(a, b):
    """Symmetric Hausdorff distance between two finite point sets."""
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def z_symmetry_angle(mesh, tol=SYMMETRY_TOL):
    """Return the smallest nontrivial rotation about z mapping the vertex set
    onto itself within ``tol``, or ``None`` if there is none.

    Every symmetry must send an off-axis reference vertex to another vertex of
    the same height and radius, so only those angles are candidates.
    """
    v = mesh.vertices
    if len(v) == 0:
        return None
    radius = np.hypot(v[:, 0], v[:, 1])
    if radius.max() <= tol:
        # everything on the axis: every rotation is a symmetry
        return 0.0
    ref = int(np.argmax(radius))
    same = (np.abs(radius - radius[ref]) <= tol) & (np.abs(v[:, 2] - v[ref, 2]) <= tol)
    ref_phi = math.atan2(v[ref, 1], v[ref, 0])
    cands = []
    for j in np.flatnonzero(same):
        if j == ref:
            continue
        phi = float(wrap_angle(math.atan2(v[j, 1], v[j, 0]) - ref_phi))
        if min(phi, TWO_PI - phi) * radius[ref] > tol:
            cands.append(phi)
    tree = cKDTree(v)
    for phi in sorted(cands):
        d, _ = tree.query(rotate_about_z(mesh, phi).vertices)
        if d.max() <= tol:
            return phi
    return None


def check_mesh(mesh):
    """List violated mesh invariants (empty list if the mesh is fine)."""
    problems = []
    if mesh.is_degenerate():
        problems.append("mesh has no triangle with nonzero area")
    phi = z_symmetry_angle(mesh)
    if phi is not None:
        problems.append(f"mesh is symmetric under rotation by {phi:.6g} rad about z")
    return problems


def ellipsoid_patch(center, radii, pitch=0.0, n_around=8, n_rings=5):
    """Faceted ellipsoid (UV sphere) pitched about the y-axis.

    Returns ``(vertices, triangles)`` with ``n_around * 2 * (n_rings - 1)``
    triangles.
    """
    verts = [(0.0, 0.0, 1.0)]
    for r in range(1, n_rings):
        ph = math.pi * r / n_rings
        for k in range(n_around):
            t = TWO_PI * k / n_around
            verts.append((math.sin(ph) * math.cos(t), math.sin(ph) * math.sin(t), math.cos(ph)))
    verts.append((0.0, 0.0, -1.0))
    c, s = math.cos(pitch), math.sin(pitch)
    pitch_rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    v = (np.array(verts) * np.asarray(radii)) @ pitch_rot.T + np.asarray(center)

    tris = [(0, 1 + k, 1 + (k + 1) % n_around) for k in range(n_around)]
    for r in range(n_rings - 2):
        a0 = 1 + r * n_around
        b0 = a0 + n_around
        for k in range(n_around):
            k1 = (k + 1) % n_around
            tris.append((a0 + k, b0 + k, b0 + k1))
            tris.append((a0 + k, b0 + k1, a0 + k1))
    last = len(verts) - 1
    a0 = 1 + (n_rings - 2) * n_around
    tris.extend((a0 + k, last, a0 + (k + 1) % n_around) for k in range(n_around))
    return v, np.array(tris)


# (center, radii, pitch, n_around, n_rings); x is the long axis, the head points to +x
_HORSE_PARTS = [
    ((0.00, 0.00, 0.25), (1.05, 0.32, 0.34), 0.00, 12, 6),    # body
    ((1.00, 0.00, 0.65), (0.18, 0.14, 0.42), -0.60, 8, 5),    # neck
    ((1.38, 0.00, 0.95), (0.34, 0.13, 0.14), 0.35, 8, 5),     # head
    ((1.20, 0.07, 1.12), (0.04, 0.03, 0.10), 0.00, 6, 3),     # ears
    ((1.20, -0.07, 1.12), (0.04, 0.03, 0.10), 0.00, 6, 3),
    ((0.72, 0.16, -0.45), (0.08, 0.08, 0.45), 0.10, 6, 4),    # front legs
    ((0.72, -0.16, -0.45), (0.08, 0.08, 0.45), -0.05, 6, 4),
    ((-0.75, 0.16, -0.45), (0.09, 0.09, 0.45), -0.10, 6, 4),  # hind legs
    ((-0.75, -0.16, -0.45), (0.09, 0.09, 0.45), 0.05, 6, 4),
    ((-1.25, 0.00, 0.15), (0.30, 0.05, 0.08), 0.70, 6, 3),    # tail
]
_FRONT_COLOR = np.array([0.90, 0.55, 0.20])
_BACK_COLOR = np.array([0.20, 0.45, 0.85])


def builtin_mesh():
    """Low-poly quadruped standing on the turntable.

    Faceted ellipsoids for body, neck, head, ears, legs and tail; the body is
    elongated along x with the head forward (+x).  Faces in front of the
    turntable axis are orange, faces behind it blue, and faces on the +y side
    are slightly brighter, so no two turntable poses give the same image.
    """
    verts, tris = [], []
    off = 0
    for center, radii, pitch, n_around, n_rings in _HORSE_PARTS:
        v, t = ellipsoid_patch(center, radii, pitch, n_around, n_rings)
        verts.append(v)
        tris.append(t + off)
        off += len(v)
    verts = np.vstack(verts)
    tris = np.vstack(tris)
    centroid = verts[tris].mean(axis=1)
    colors = np.where((centroid[:, 0] > 0)[:, None], _FRONT_COLOR, _BACK_COLOR)
    colors = colors * np.where(centroid[:, 1] > 0, 1.0, 0.8)[:, None]
    return TriMesh(verts, tris, colors, name="builtin:horse")


def load_mesh(path):
    """Parse a plain-text ``v``/``f``/``fc`` mesh file.

    Lines are ``v x y z``, ``f i j k`` with 1-based indices, and optionally
    ``fc r g b`` directly after a face to color it.  ``#`` starts a comment.
    Faces without ``fc`` are mid-gray.  A :class:`SymmetryWarning` is issued
    (not raised) if the mesh is rotationally symmetric about z.
    """
    verts, tris, colors = [], [], []
    face_lines = []
    last_was_face = False
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise MeshParseError(f"cannot open mesh file ({exc.strerror})", path=path) from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag, args = parts[0], parts[1:]
            try:
                if tag == "v":
                    if len(args) != 3:
                        raise MeshParseError("vertex needs 3 coordinates", lineno, path)
                    verts.append([float(a) for a in args])
                    last_was_face = False
                elif tag == "f":
                    if len(args) != 3:
                        raise MeshParseError("only triangular faces are supported", lineno, path)
                    idx = [int(a) for a in args]
                    if any(i < 1 or i > len(verts) for i in idx):
                        raise MeshParseError(
                            f"face references vertex outside 1..{len(verts)}", lineno, path)
                    tris.append([i - 1 for i in idx])
                    colors.append(list(DEFAULT_FACE_COLOR))
                    face_lines.append(lineno)
                    last_was_face = True
                elif tag == "fc":
                    if not last_was_face:
                        raise MeshParseError("'fc' must directly follow a face line", lineno, path)
                    if len(args) != 3:
                        raise MeshParseError("face color needs 3 components", lineno, path)
                    rgb = [float(a) for a in args]
                    if any(not 0.0 <= x <= 1.0 for x in rgb):
                        raise MeshParseError("face color components must be in [0, 1]", lineno, path)
                    colors[-1] = rgb
                    last_was_face = False
                else:
                    raise MeshParseError(f"unknown record type {tag!r}", lineno, path)
            except ValueError as exc:
                if isinstance(exc, MeshParseError):
                    raise
                raise MeshParseError(f"malformed number ({exc})", lineno, path) from None

    mesh = TriMesh(np.array(verts, dtype=float).reshape(-1, 3),
                   np.array(tris, dtype=np.int64).reshape(-1, 3),
                   np.array(colors, dtype=float).reshape(-1, 3),
                   name=f"file:{path}")
    for problem in check_mesh(mesh):
        warnings.warn(f"{path}: {problem}", SymmetryWarning, stacklevel=2)
    return mesh


def save_mesh(mesh, path):
    """Write ``mesh`` in the format read by :func:`load_mesh`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {mesh.name}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for (a, b, c), (r, g, bl) in zip(mesh.triangles, mesh.face_colors):
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
            fh.write(f"fc {float(r)!r} {float(g)!r} {float(bl)!r}\n")


@dataclass(frozen=True)
class CameraConfig:
    """Fixed orthographic camera looking at the turntable center.

    ``azimuth`` and ``elevation`` place the camera on a sphere around the
    origin; ``elevation = pi/2`` looks straight down.  ``scale`` is the number
    of model units spanned by the image height.  The light direction is given
    in camera coordinates (x right, y up, z towards the camera).

    ``supersample = k`` averages a regular ``k x k`` grid of samples per
    pixel; ``k = 1`` samples only the pixel center (no anti-aliasing).
    """

    azimuth: float = 0.0
    elevation: float = 0.0
    width: int = 66
    height: int = 60
    scale: float = 4.0
    light_direction: tuple = (0.0, 0.0, 1.0)
    background_color: tuple = (0.0, 0.0, 0.0)
    supersample: int = 1
    name: str = field(default="camera", compare=False)

    def __post_init__(self):
        for attr in ("width", "height", "supersample"):
            val = getattr(self, attr)
            if not isinstance(val, (int, np.integer)) or isinstance(val, bool) or val < 1:
                raise InvalidArgumentError(f"camera {attr} must be an integer >= 1, got {val!r}")
        if not self.scale > 0:
            raise InvalidArgumentError(f"camera scale must be > 0, got {self.scale!r}")
        light = tuple(float(x) for x in self.light_direction)
        if len(light) != 3 or abs(math.sqrt(sum(x * x for x in light)) - 1.0) > 1e-9:
            raise InvalidArgumentError("light_direction must be a unit 3-vector")
        bg = tuple(float(x) for x in self.background_color)
        if len(bg) != 3 or any(not 0.0 <= x <= 1.0 for x in bg):
            raise InvalidArgumentError("background_color must be RGB in [0, 1]")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "supersample", int(self.supersample))
        object.__setattr__(self, "azimuth", float(self.azimuth))
        object.__setattr__(self, "elevation", float(self.elevation))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "light_direction", light)
        object.__setattr__(self, "background_color", bg)

    @property
    def n_features(self):
        return self.width * self.height * 3

    def basis(self):
        """Rows are the camera right, up and back (towards camera) axes in world coordinates."""
        ca, sa = math.cos(self.azimuth), math.sin(self.azimuth)
        ce, se = math.cos(self.elevation), math.sin(self.elevation)
        back = np.array([ce * ca, ce * sa, se])
        right = np.array([-sa, ca, 0.0])
        up = np.cross(back, right)
        return np.vstack([right, up, back])

    def view_direction(self):
        """Unit vector pointing from the camera towards the origin."""
        return -self.basis()[2]

    def summary(self):
        return (f"{self.name}: azimuth={self.azimuth:.6g} elevation={self.elevation:.6g} "
                f"{self.width}x{self.height} scale={self.scale:.6g} supersample={self.supersample}")


def side_camera(azimuth=0.0, width=66, height=60, name="side", **kw):
    return CameraConfig(azimuth=azimuth, elevation=0.0, width=width, height=height, name=name, **kw)


def top_camera(width=66, height=60, name="top", **kw):
    return CameraConfig(azimuth=0.0, elevation=math.pi / 2, width=width, height=height, name=name, **kw)
