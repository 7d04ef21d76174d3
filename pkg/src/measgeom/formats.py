"""On-disk formats.

Dataset directory::

    manifest.tsv     index<TAB>angle_radians<TAB>file
    camera.cfg       key=value camera parameters
    provenance.cfg   mesh_id, config_hash
    img_000000.ppm   binary P6 pixmaps, maxval 65535 (big-endian 16 bit)

Embeddings and densities are CSV files with a ``.meta`` key=value sidecar.
Floats are written with 17 significant digits so they round-trip exactly.
"""

import math
import os
import re

import numpy as np

from .density import DensityProfile
from .diffusion import Embedding
from .exceptions import DatasetFormatError
from .render import Dataset
from .scene import CameraConfig

MAXVAL = 65535
MANIFEST = "manifest.tsv"
CAMERA_CFG = "camera.cfg"
PROVENANCE_CFG = "provenance.cfg"
IMAGE_PATTERN = re.compile(r"img_\d{6}\.ppm$")


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def write_kv(path, items):
    """Write ``key=value`` lines in the given order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items.items():
            if isinstance(value, float):
                value = fmt_float(value)
            elif isinstance(value, (list, tuple, np.ndarray)):
                value = ",".join(fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                                 for v in value)
            fh.write(f"{key}={value}\n")


def read_kv(path):
    if not os.path.isfile(path):
        raise DatasetFormatError("file is missing", path)
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DatasetFormatError(f"line {lineno} is not key=value", path)
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


# -- pixmaps ---------------------------------------------------------------

def quantize(values):
    return np.round(np.clip(values, 0.0, 1.0) * MAXVAL).astype(">u2")


def write_ppm16(path, image, width, height):
    data = quantize(np.asarray(image).reshape(height, width, 3))
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n{MAXVAL}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_ppm16(path):
    """Read a 16-bit binary P6 pixmap; returns ``(flat_values, width, height)``."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read image ({exc.strerror})", path) from None
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetFormatError("truncated pixmap header", path)
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace byte after maxval
    if tokens[0] != b"P6":
        raise DatasetFormatError("not a binary P6 pixmap", path)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DatasetFormatError("malformed pixmap header", path) from None
    if maxval != MAXVAL:
        raise DatasetFormatError(f"expected maxval {MAXVAL}, found {maxval}", path)
    expected = width * height * 3 * 2
    body = raw[pos:]
    if len(body) != expected:
        raise DatasetFormatError(f"pixel data has {len(body)} bytes, expected {expected}", path)
    values = np.frombuffer(body, dtype=">u2").astype(np.float64) / MAXVAL
    return values, width, height


# -- cameras and datasets ----------------------------------------------------

def camera_to_kv(cam):
    lx, ly, lz = cam.light_direction
    br, bg, bb = cam.background_color
    return {
        "azimuth": cam.azimuth, "elevation": cam.elevation,
        "width": cam.width, "height": cam.height, "scale": cam.scale,
        "light_x": float(lx), "light_y": float(ly), "light_z": float(lz),
        "bg_r": float(br), "bg_g": float(bg), "bg_b": float(bb),
        "supersample": cam.supersample, "name": cam.name,
    }


def camera_from_kv(kv, path=None):
    try:
        return CameraConfig(
            azimuth=float(kv["azimuth"]), elevation=float(kv["elevation"]),
            width=int(kv["width"]), height=int(kv["height"]), scale=float(kv["scale"]),
            light_direction=(float(kv["light_x"]), float(kv["light_y"]), float(kv["light_z"])),
            background_color=(float(kv["bg_r"]), float(kv["bg_g"]), float(kv["bg_b"])),
            supersample=int(kv.get("supersample", 1)), name=kv.get("name", "camera"))
    except KeyError as exc:
        raise DatasetFormatError(f"missing camera key {exc.args[0]!r}", path) from None
    except ValueError as exc:
        raise DatasetFormatError(f"bad camera value ({exc})", path) from None


def save_dataset(ds, directory, config_hash=""):
    """Write ``ds`` as a dataset directory (created if needed).

    Image values are quantized to 16 bits, an error of at most 1/131070.
    """
    os.makedirs(directory, exist_ok=True)
    cam = ds.camera
    rows = []
    for i, (angle, image) in enumerate(zip(ds.angles, ds.images)):
        name = "img_%06d.ppm" % i
        write_ppm16(os.path.join(directory, name), image, cam.width, cam.height)
        rows.append(f"{i}\t{fmt_float(angle)}\t{name}\n")
    with open(os.path.join(directory, MANIFEST), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index\tangle_radians\tfile\n")
        fh.writelines(rows)
    write_kv(os.path.join(directory, CAMERA_CFG), camera_to_kv(cam))
    write_kv(os.path.join(directory, PROVENANCE_CFG),
             {"mesh_id": ds.mesh_id, "config_hash": config_hash, "n": ds.n,
              "n_features": ds.n_features})
    return directory


def read_manifest(directory):
    path = os.path.join(directory, MANIFEST)
    if not os.path.isfile(path):
        raise DatasetFormatError("manifest is missing", path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0].split("\t") != ["index", "angle_radians", "file"]:
        raise DatasetFormatError("manifest header must be index, angle_radians, file", path)
    angles, files = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DatasetFormatError(f"line {lineno} does not have 3 columns", path)
        try:
            idx, angle = int(parts[0]), float(parts[1])
        except ValueError:
            raise DatasetFormatError(f"line {lineno} has a malformed number", path) from None
        if idx != len(angles):
            raise DatasetFormatError(
                f"line {lineno}: index {idx}, expected {len(angles)} (indices must be 0..n-1)", path)
        angles.append(angle)
        files.append(parts[2])
    return np.array(angles), files


def read_provenance(directory):
    path = os.path.join(directory, PROVENANCE_CFG)
    return read_kv(path) if os.path.isfile(path) else {}


def load_dataset(directory):
    if not os.path.isdir(directory):
        raise DatasetFormatError("dataset directory does not exist", directory)
    angles, files = read_manifest(directory)
    on_disk = sorted(f for f in os.listdir(directory) if IMAGE_PATTERN.match(f))
    if len(on_disk) != len(files):
        raise DatasetFormatError(
            f"manifest lists {len(files)} images but {len(on_disk)} image files exist",
            os.path.join(directory, MANIFEST))
    cam = camera_from_kv(read_kv(os.path.join(directory, CAMERA_CFG)),
                         os.path.join(directory, CAMERA_CFG))
    images = np.empty((len(files), cam.n_features))
    for i, name in enumerate(files):
        path = os.path.join(directory, name)
        values, w, h = read_ppm16(path)
        if (w, h) != (cam.width, cam.height):
            raise DatasetFormatError(f"image is {w}x{h}, camera says {cam.width}x{cam.height}", path)
        images[i] = values
    prov = read_provenance(directory)
    return Dataset(angles, images, cam, mesh_id=prov.get("mesh_id", "unknown"))


# -- embeddings --------------------------------------------------------------

def save_embedding(e, path, config_hash="", extra=None):
    """Write ``e`` as CSV plus a ``<path>.meta`` sidecar."""
    angles = e.angles if e.angles is not None else np.full(e.n, np.nan)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["index", "angle_radians"] + [f"z{k + 1}" for k in range(e.s)]) + "\n")
        for i in range(e.n):
            fh.write(",".join([str(i), fmt_float(angles[i])]
                              + [fmt_float(v) for v in e.coords[i]]) + "\n")
    meta = {"n": e.n, "s": e.s, "sigma": float(e.sigma),
            "sigma_multiplier": float(e.sigma_multiplier),
            "eigenvalues": [float(v) for v in e.eigenvalues],
            "u0_sign_convention": e.u0_sign_convention, "config_hash": config_hash}
    meta.update(extra or {})
    write_kv(path + ".meta", meta)
    return path


def _read_csv(path, header_prefix):
    if not os.path.isfile(path):
        raise DatasetFormatError("file is missing", path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DatasetFormatError("file is empty", path)
    header = lines[0].split(",")
    if header[:len(header_prefix)] != header_prefix:
        raise DatasetFormatError(f"header must start with {','.join(header_prefix)}", path)
    try:
        rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError:
        raise DatasetFormatError("malformed number", path) from None
    if rows.size == 0:
        rows = rows.reshape(0, len(header))
    if rows.shape[1] != len(header):
        raise DatasetFormatError("rows and header differ in width", path)
    if not np.array_equal(rows[:, 0], np.arange(len(rows))):
        raise DatasetFormatError("index column must be 0..n-1", path)
    return header, rows


def load_embedding(path):
    """Read an embedding CSV (and its sidecar, when present).

    Returns ``(Embedding, meta)``.
    """
    header, rows = _read_csv(path, ["index", "angle_radians"])
    meta = read_kv(path + ".meta") if os.path.isfile(path + ".meta") else {}
    eig = [float(x) for x in meta.get("eigenvalues", "").split(",") if x]
    angles = rows[:, 1]
    e = Embedding(rows[:, 2:], np.array(eig), None,
                  float(meta.get("sigma", "nan")), float(meta.get("sigma_multiplier", "nan")),
                  None if np.all(np.isnan(angles)) else angles)
    return e, meta


# -- densities ---------------------------------------------------------------

def save_density(p, path, config_hash="", extra=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(p.values):
            fh.write(f"{i},{fmt_float(v)}\n")
    meta = {"radius": float(p.radius), "metric_id": p.metric_id, "n": p.n,
            "counts": [int(c) for c in p.counts], "config_hash": config_hash}
    meta.update(extra or {})
    write_kv(path + ".meta", meta)
    return path


def load_density(path):
    _, rows = _read_csv(path, ["index", "value"])
    meta = read_kv(path + ".meta") if os.path.isfile(path + ".meta") else {}
    counts = np.array([int(c) for c in meta.get("counts", "").split(",") if c])
    if len(counts) != len(rows):
        counts = None
    p = DensityProfile(float(meta.get("radius", "nan")), rows[:, 1], counts,
                       meta.get("metric_id", "embedding-euclidean"))
    return p, meta


# -- reports -----------------------------------------------------------------

def write_report(path, items, blocks=None):
    """Flat ``key=value`` lines followed by optional named CSV blocks.

    ``blocks`` maps a block name to ``(header, rows)``; each block is written
    as ``[name]``, the header line, then one line per row.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items.items():
            if isinstance(value, (float, np.floating)):
                value = fmt_float(value)
            elif isinstance(value, (bool, np.bool_)):
                value = "true" if value else "false"
            elif isinstance(value, (list, tuple, np.ndarray)):
                value = ",".join(fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                                 for v in value)
            fh.write(f"{key}={value}\n")
        for name, (header, rows) in (blocks or {}).items():
            fh.write(f"\n[{name}]\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                                  for v in row) + "\n")
    return path


def read_report(path):
    """Parse a report back into ``(items, blocks)``; block rows stay strings."""
    if not os.path.isfile(path):
        raise DatasetFormatError("report is missing", path)
    items, blocks, current = {}, {}, None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                blocks[current] = []
            elif current is not None:
                blocks[current].append(line.split(","))
            else:
                key, _, value = line.partition("=")
                items[key] = value
    return items, blocks
