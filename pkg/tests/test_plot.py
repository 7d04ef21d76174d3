import xml.etree.ElementTree as ET

import numpy as np
import pytest

from measgeom.exceptions import InvalidArgumentError
from measgeom.plot import (FigureSpec, density_vs_angle, hue_color, ramp_color,
                           scatter_by_angle, scatter_by_density, write_svg)
from measgeom.scene import sample_angles

NS = {"s": "http://www.w3.org/2000/svg"}


def _parse(text):
    return ET.fromstring(text)


def test_scatter_by_angle_structure():
    a = sample_angles(30)
    z = np.column_stack([np.cos(a), np.sin(a)])
    root = _parse(scatter_by_angle(z, a, modes=[3, 17], title="t", config_hash="abcd"))
    assert root.get("data-kind") == "scatter-by-angle"
    assert root.find("s:metadata", NS).text == "config_hash=abcd"
    assert len(root.findall("s:g[@class='points']/s:circle", NS)) == 30
    assert len(root.findall("s:g[@class='modes']/s:circle", NS)) == 2


def test_scatter_by_density_colours_follow_density():
    z = np.random.default_rng(0).normal(size=(5, 2))
    root = _parse(scatter_by_density(z, [0, 1, 2, 3, 4]))
    fills = [c.get("fill") for c in root.findall("s:g[@class='points']/s:circle", NS)]
    assert fills[0] == ramp_color(0) and fills[-1] == ramp_color(1)
    assert root.find("s:g[@class='modes']", NS) is None


def test_density_vs_angle_structure():
    a = sample_angles(40)
    root = _parse(density_vs_angle(a, {"Y": 1 + np.cos(a), "Z": 2 + np.sin(a)},
                                   mode_angles=[0.0, np.pi]))
    curves = root.findall("s:polyline[@class='curve']", NS)
    assert [c.get("data-label") for c in curves] == ["Y", "Z"]
    assert len(curves[0].get("points").split()) == 40
    assert len(root.findall("s:line[@class='mode']", NS)) == 2


def test_figures_are_deterministic(tmp_path):
    a = sample_angles(25)
    z = np.column_stack([np.cos(a), np.sin(a)])
    p1, p2 = tmp_path / "1.svg", tmp_path / "2.svg"
    write_svg(scatter_by_angle(z, a, config_hash="x"), p1)
    write_svg(scatter_by_angle(z.copy(), a.copy(), config_hash="x"), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_colour_helpers():
    assert hue_color(0.0) == hue_color(2 * np.pi)
    assert hue_color(0.0) != hue_color(np.pi)
    assert ramp_color(-1) == ramp_color(0) and ramp_color(2) == ramp_color(1)


def test_plot_errors():
    with pytest.raises(InvalidArgumentError):
        FigureSpec("pie")
    with pytest.raises(InvalidArgumentError):
        scatter_by_angle(np.zeros((3, 1)), [0, 1, 2])
    with pytest.raises(InvalidArgumentError):
        density_vs_angle([0, 1], {"a": [1, 2, 3]})
    with pytest.raises(InvalidArgumentError):
        density_vs_angle([0, 1], {})
