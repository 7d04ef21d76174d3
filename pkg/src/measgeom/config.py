"""Experiment configuration as flat ``key=value`` text.

Cameras live under ``camera.<name>.<field>``; every other key is a top-level
field of :class:`ExperimentConfig`.  Example::

    n=1000
    resolution=66x60
    sigma_multiplier=0.02
    camera.left.azimuth=0
    camera.left.elevation=0.35
    camera.top.elevation=1.5707963267948966
"""

import hashlib
import math
import os
from dataclasses import dataclass, field, fields, replace

from .exceptions import InvalidArgumentError
from .formats import fmt_float
from .scene import CameraConfig

DEFAULT_RESOLUTION = (66, 60)
FULL_RESOLUTION = (200, 180)
SIDE_ELEVATION = 0.35
SUPERSAMPLE = 4

CAMERA_FIELDS = ("azimuth", "elevation", "scale", "light_x", "light_y", "light_z",
                 "bg_r", "bg_g", "bg_b", "supersample")


def default_cameras():
    common = dict(elevation=SIDE_ELEVATION, supersample=SUPERSAMPLE)
    return {
        "left": dict(azimuth=0.0, **common),
        "right": dict(azimuth=math.pi / 3, **common),
        "top": dict(azimuth=0.0, elevation=math.pi / 2, supersample=SUPERSAMPLE),
    }


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to regenerate a run.

    ``cameras`` maps a camera name to its parameters (any subset of
    :data:`CAMERA_FIELDS`; the rest take :class:`CameraConfig` defaults).
    ``side_camera``, ``second_camera`` and ``top_camera`` name the cameras
    used by the reproduction experiments.
    """

    mesh: str = "builtin"
    n: int = 1000
    angle_mode: str = "equispaced"
    seed: int = 0
    resolution: tuple = DEFAULT_RESOLUTION
    sigma_multiplier: float = 0.02
    s: int = 2
    r_Z: float = 0.05
    r_Y: object = "auto"
    output_dir: str = "out"
    smoothing_window: int = 21
    prominence_frac: float = 0.2
    n_boot: int = 200
    side_camera: str = "left"
    second_camera: str = "right"
    top_camera: str = "top"
    cameras: dict = field(default_factory=default_cameras, hash=False)

    def __post_init__(self):
        _check_int("n", self.n, 4)
        _check_int("s", self.s, 1)
        _check_int("seed", self.seed, 0)
        _check_int("smoothing_window", self.smoothing_window, 1)
        _check_int("n_boot", self.n_boot, 0)
        if self.smoothing_window % 2 == 0:
            raise InvalidArgumentError("config field 'smoothing_window' must be odd")
        if self.s > self.n - 1:
            raise InvalidArgumentError(f"config field 's' must be at most n-1={self.n - 1}")
        if self.angle_mode not in ("equispaced", "uniform"):
            raise InvalidArgumentError(
                f"config field 'angle_mode' must be equispaced or uniform, got {self.angle_mode!r}")
        if len(self.resolution) != 2:
            raise InvalidArgumentError("config field 'resolution' must be WIDTHxHEIGHT")
        for name in ("sigma_multiplier", "r_Z", "prominence_frac"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"config field {name!r} must be a positive number")
        if self.r_Y != "auto" and not (isinstance(self.r_Y, (int, float)) and self.r_Y > 0):
            raise InvalidArgumentError("config field 'r_Y' must be 'auto' or a positive number")
        if not self.mesh:
            raise InvalidArgumentError("config field 'mesh' must be 'builtin' or a file path")
        for role in ("side_camera", "second_camera", "top_camera"):
            if getattr(self, role) not in self.cameras:
                raise InvalidArgumentError(
                    f"config field {role!r} names unknown camera {getattr(self, role)!r}")
        for name in self.cameras:
            self.camera(name)  # validates every camera

    def camera(self, name):
        if name not in self.cameras:
            raise InvalidArgumentError(
                f"unknown camera {name!r}; configured: {', '.join(sorted(self.cameras))}")
        p = self.cameras[name]
        unknown = set(p) - set(CAMERA_FIELDS)
        if unknown:
            raise InvalidArgumentError(
                f"config field 'camera.{name}.{sorted(unknown)[0]}' is not a camera parameter")
        try:
            return CameraConfig(
                azimuth=p.get("azimuth", 0.0), elevation=p.get("elevation", 0.0),
                width=self.resolution[0], height=self.resolution[1],
                scale=p.get("scale", 4.0),
                light_direction=(p.get("light_x", 0.0), p.get("light_y", 0.0),
                                 p.get("light_z", 1.0)),
                background_color=(p.get("bg_r", 0.0), p.get("bg_g", 0.0), p.get("bg_b", 0.0)),
                supersample=p.get("supersample", 1), name=name)
        except InvalidArgumentError as exc:
            raise InvalidArgumentError(f"config camera {name!r}: {exc}") from None

    def with_overrides(self, **kw):
        return replace(self, **kw)

    def full_res(self):
        return replace(self, resolution=FULL_RESOLUTION)

    def to_text(self):
        lines = []
        for f in fields(self):
            if f.name == "cameras":
                continue
            lines.append(f"{f.name}={_fmt(getattr(self, f.name))}")
        for name in sorted(self.cameras):
            for key in CAMERA_FIELDS:
                if key in self.cameras[name]:
                    lines.append(f"camera.{name}.{key}={_fmt(self.cameras[name][key])}")
        return "\n".join(lines) + "\n"

    def config_hash(self):
        """First 16 hex digits of the SHA-256 of :meth:`to_text`.

        ``output_dir`` does not affect the hash, so the same experiment
        written to two places has one identity.
        """
        text = "\n".join(ln for ln in self.to_text().splitlines()
                         if not ln.startswith("output_dir="))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _check_int(name, value, minimum):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise InvalidArgumentError(f"config field {name!r} must be an integer >= {minimum}, "
                                   f"got {value!r}")


def _fmt(value):
    if isinstance(value, tuple):
        return "x".join(str(v) for v in value)
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


_INT_FIELDS = {"n", "seed", "s", "smoothing_window", "n_boot"}
_FLOAT_FIELDS = {"sigma_multiplier", "r_Z", "prominence_frac"}


def _parse_value(key, raw):
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        if key == "r_Y":
            return "auto" if raw == "auto" else float(raw)
        if key == "resolution":
            w, h = raw.lower().split("x")
            return (int(w), int(h))
    except ValueError:
        raise InvalidArgumentError(f"config field {key!r} has malformed value {raw!r}") from None
    return raw


def parse_config(text, source="<config>"):
    """Build an :class:`ExperimentConfig` from ``key=value`` text.

    Keys not given keep their defaults.  If any ``camera.*`` key is present
    the camera set is replaced by exactly the cameras named in the text.
    """
    known = {f.name for f in fields(ExperimentConfig)} - {"cameras"}
    kw, cameras = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{source}:{lineno}: expected key=value")
        key, raw = (x.strip() for x in line.split("=", 1))
        if key.startswith("camera."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in CAMERA_FIELDS:
                raise InvalidArgumentError(f"{source}:{lineno}: unknown camera key {key!r}")
            try:
                value = int(raw) if parts[2] == "supersample" else float(raw)
            except ValueError:
                raise InvalidArgumentError(
                    f"{source}:{lineno}: config field {key!r} has malformed value {raw!r}") from None
            cameras.setdefault(parts[1], {})[parts[2]] = value
        elif key in known:
            kw[key] = _parse_value(key, raw)
        else:
            raise InvalidArgumentError(f"{source}:{lineno}: unknown config field {key!r}")
    if cameras:
        kw["cameras"] = cameras
    return ExperimentConfig(**kw)


def load_config(path):
    if not os.path.isfile(path):
        raise InvalidArgumentError(f"config file {path!r} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=path)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.to_text())
    return path
