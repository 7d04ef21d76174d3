import math

import pytest
from hypothesis import given, settings, strategies as st

from measgeom.config import (FULL_RESOLUTION, ExperimentConfig, load_config, parse_config,
                             save_config)
from measgeom.exceptions import InvalidArgumentError


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.resolution == (66, 60) and cfg.n == 1000
    assert set(cfg.cameras) == {"left", "right", "top"}
    top = cfg.camera("top")
    assert top.elevation == pytest.approx(math.pi / 2)
    assert cfg.camera("right").azimuth == pytest.approx(math.pi / 3)
    assert cfg.full_res().resolution == FULL_RESOLUTION


def test_text_round_trip(tmp_path):
    cfg = ExperimentConfig(n=64, resolution=(22, 20), r_Y=0.3, seed=7)
    path = tmp_path / "c.cfg"
    save_config(cfg, path)
    back = load_config(path)
    assert back == cfg and back.cameras == cfg.cameras
    assert back.config_hash() == cfg.config_hash()


def test_hash_ignores_output_dir_only():
    a = ExperimentConfig()
    assert a.config_hash() == ExperimentConfig(output_dir="/elsewhere").config_hash()
    assert a.config_hash() != ExperimentConfig(n=999).config_hash()
    assert len(a.config_hash()) == 16
    assert a.config_hash() == parse_config(a.to_text()).config_hash()


def test_partial_text_keeps_defaults():
    cfg = parse_config("# comment\n\nn = 200\nr_Y=auto\n")
    assert cfg.n == 200 and cfg.sigma_multiplier == ExperimentConfig().sigma_multiplier
    assert set(cfg.cameras) == {"left", "right", "top"}


def test_camera_keys_replace_camera_set():
    cfg = parse_config("camera.a.azimuth=0.5\ncamera.a.supersample=2\n"
                       "side_camera=a\nsecond_camera=a\ntop_camera=a\n")
    assert list(cfg.cameras) == ["a"]
    assert cfg.camera("a").supersample == 2 and cfg.camera("a").azimuth == 0.5


@pytest.mark.parametrize("text,field", [
    ("n=2", "'n'"),
    ("n=ten", "'n'"),
    ("s=0", "'s'"),
    ("smoothing_window=4", "'smoothing_window'"),
    ("angle_mode=random", "'angle_mode'"),
    ("resolution=66", "'resolution'"),
    ("sigma_multiplier=-1", "'sigma_multiplier'"),
    ("r_Y=-2", "'r_Y'"),
    ("side_camera=front", "'side_camera'"),
    ("camera.left.azimuth=west", "camera.left.azimuth"),
    ("camera.left.zoom=2", "camera.left.zoom"),
    ("bogus=1", "'bogus'"),
    ("no equals sign", "key=value"),
])
def test_field_level_errors(text, field):
    with pytest.raises(InvalidArgumentError, match=field.replace(".", r"\.")):
        parse_config(text)


def test_s_bounded_by_n():
    with pytest.raises(InvalidArgumentError, match="n-1"):
        ExperimentConfig(n=8, s=8)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidArgumentError, match="does not exist"):
        load_config(tmp_path / "none.cfg")


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 5000), st.floats(1e-4, 10), st.integers(0, 2 ** 31),
       st.sampled_from(["equispaced", "uniform"]))
def test_round_trip_property(n, mult, seed, mode):
    cfg = ExperimentConfig(n=n, sigma_multiplier=mult, seed=seed, angle_mode=mode)
    back = parse_config(cfg.to_text())
    assert back == cfg and back.config_hash() == cfg.config_hash()
