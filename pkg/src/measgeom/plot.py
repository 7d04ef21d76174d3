"""Self-contained SVG figures.

Three kinds of figure:

* ``scatter-by-angle``: embedding coloured by true angle on a hue wheel;
* ``scatter-by-density``: embedding coloured by local density on a
  sequential ramp;
* ``density-vs-angle``: one or more density curves against true angle.

Mode markers are drawn as open circles (scatters) or vertical lines (curves).
Output is plain text with fixed number formatting, so it is byte-stable.
"""

import colorsys
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import InvalidArgumentError

KINDS = ("scatter-by-angle", "scatter-by-density", "density-vs-angle")

# sequential ramp anchors (dark blue -> teal -> yellow)
_RAMP = np.array([[0.267, 0.005, 0.329], [0.230, 0.322, 0.546], [0.128, 0.567, 0.551],
                  [0.369, 0.789, 0.383], [0.993, 0.906, 0.144]])
_LINE_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")

WIDTH, HEIGHT, MARGIN = 480, 480, 48


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    title: str = ""
    config_hash: str = ""
    point_radius: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"figure kind must be one of {KINDS}, got {self.kind!r}")


def _hex(rgb):
    r, g, b = (int(round(255 * min(max(c, 0.0), 1.0))) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def hue_color(angle):
    return _hex(colorsys.hsv_to_rgb((angle % (2 * math.pi)) / (2 * math.pi), 0.85, 0.9))


def ramp_color(t):
    t = min(max(float(t), 0.0), 1.0) * (len(_RAMP) - 1)
    k = min(int(t), len(_RAMP) - 2)
    return _hex(_RAMP[k] + (t - k) * (_RAMP[k + 1] - _RAMP[k]))


def _f(x):
    return f"{x:.2f}"


class _Axes:
    def __init__(self, xlim, ylim, equal=False):
        (x0, x1), (y0, y1) = xlim, ylim
        if x1 <= x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 <= y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        if equal:
            half = 0.5 * max(x1 - x0, y1 - y0)
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            x0, x1, y0, y1 = cx - half, cx + half, cy - half, cy + half
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.w = WIDTH - 2 * MARGIN
        self.h = HEIGHT - 2 * MARGIN

    def px(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * self.h


def _padded(values, frac=0.05):
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = frac * (hi - lo) if hi > lo else 0.5
    return lo - pad, hi + pad


def _header(spec):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" data-kind="{spec.kind}">',
           f"<metadata>config_hash={escape(spec.config_hash)}</metadata>",
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>']
    if spec.title:
        out.append(f'<text x="{WIDTH // 2}" y="{MARGIN // 2}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{escape(spec.title)}</text>')
    return out


def _frame(ax, xlabel, ylabel):
    return [f'<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{ax.w}" height="{ax.h}" '
            f'fill="none" stroke="#444444"/>',
            f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>',
            f'<text x="14" y="{HEIGHT // 2}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 14 {HEIGHT // 2})">{escape(ylabel)}</text>']


def _scatter(coords, colors, spec, modes):
    z = np.asarray(coords, dtype=float)
    if z.ndim != 2 or z.shape[1] < 2:
        raise InvalidArgumentError("scatter plots need at least 2 coordinates per point")
    ax = _Axes(_padded(z[:, 0]), _padded(z[:, 1]), equal=True)
    out = _header(spec) + _frame(ax, "z1", "z2")
    out.append('<g class="points">')
    for (x, y), c in zip(z[:, :2], colors):
        out.append(f'<circle cx="{_f(ax.px(x))}" cy="{_f(ax.py(y))}" '
                   f'r="{_f(spec.point_radius)}" fill="{c}"/>')
    out.append("</g>")
    if modes is not None and len(modes):
        out.append('<g class="modes">')
        for i in modes:
            out.append(f'<circle class="mode" cx="{_f(ax.px(z[i, 0]))}" cy="{_f(ax.py(z[i, 1]))}" '
                       f'r="{_f(4 * spec.point_radius)}" fill="none" stroke="#000000" '
                       f'stroke-width="2"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_by_angle(coords, angles, modes=None, title="", config_hash=""):
    """Embedding scatter coloured by true angle; ``modes`` are point indices."""
    spec = FigureSpec("scatter-by-angle", title, config_hash)
    return _scatter(coords, [hue_color(a) for a in np.asarray(angles, dtype=float)], spec, modes)


def scatter_by_density(coords, density, modes=None, title="", config_hash=""):
    """Embedding scatter coloured by density, low to high on a sequential ramp."""
    d = np.asarray(density, dtype=float)
    span = float(d.max() - d.min())
    t = (d - d.min()) / span if span > 0 else np.zeros_like(d)
    spec = FigureSpec("scatter-by-density", title, config_hash)
    return _scatter(coords, [ramp_color(v) for v in t], spec, modes)


def density_vs_angle(angles, curves, mode_angles=None, title="", config_hash=""):
    """Density curves against true angle (degrees).

    ``curves`` maps a label to a density vector aligned with ``angles``;
    each curve is drawn in its own colour and rescaled to its maximum so
    curves with different units share the axis.
    """
    a = np.asarray(angles, dtype=float)
    order = np.argsort(a, kind="stable")
    if not curves:
        raise InvalidArgumentError("no density curves given")
    ax = _Axes((0.0, 360.0), (0.0, 1.05))
    spec = FigureSpec("density-vs-angle", title, config_hash)
    out = _header(spec) + _frame(ax, "true angle (degrees)", "density / max")
    for k, (label, values) in enumerate(curves.items()):
        v = np.asarray(values, dtype=float)
        if len(v) != len(a):
            raise InvalidArgumentError(f"curve {label!r} has {len(v)} values for {len(a)} angles")
        v = v / v.max() if v.max() > 0 else v
        pts = " ".join(f"{_f(ax.px(math.degrees(a[i])))},{_f(ax.py(v[i]))}" for i in order)
        color = _LINE_COLORS[k % len(_LINE_COLORS)]
        out.append(f'<polyline class="curve" data-label="{escape(label)}" points="{pts}" '
                   f'fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{MARGIN + 8}" y="{MARGIN + 16 + 14 * k}" font-family="sans-serif" '
                   f'font-size="12" fill="{color}">{escape(label)}</text>')
    for m in (mode_angles if mode_angles is not None else []):
        x = _f(ax.px(math.degrees(float(m) % (2 * math.pi))))
        out.append(f'<line class="mode" x1="{x}" y1="{MARGIN}" x2="{x}" y2="{HEIGHT - MARGIN}" '
                   f'stroke="#000000" stroke-dasharray="4,3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(text, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
