"""The five reproduction experiments and the pass/fail criteria on them.

E1  side camera: topology, spurious modes, mode orientation
E2  angles fed to diffusion maps directly: uniform density
E3  density on the images vs. on the embedding
E4  second side camera: rigid alignment and mode positions
E5  top camera: no modes

:func:`reproduce` runs them all, writes CSVs, SVGs and reports into one
directory and returns a :class:`ReproduceResult`.
"""

import functools
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import formats, plot
from .analysis import (broadside_angles, check_topology, compare_density_Y_vs_Z, detect_modes,
                       procrustes_align, uniformity_report)
from .config import save_config
from .density import density_ratio, local_density
from .diffusion import angles_to_points, diffusion_map, pairwise_distances
from .exceptions import InvalidArgumentError, MeasGeomError
from .render import render_dataset
from .scene import builtin_mesh, load_mesh, sample_angles, torus_distance

# thresholds checked by the reproduction run
UNIFORM_RATIO_MAX = 1.15
MODE_RATIO_MIN = 2.0
ORIENTATION_TOL_DEG = 15.0
SPEARMAN_MIN = 0.7
MODE_OFFSET_MAX_DEG = 15.0
MAX_DENSITY_RTOL = 0.05
RESIDUAL_FACTOR_MIN = 3.0
MODE_SHIFT_MIN_DEG = 20.0
TOP_RATIO_FACTOR_MAX = 0.6


class StageFailure(MeasGeomError):
    """An experiment stage raised; ``__cause__`` holds the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage


@dataclass(frozen=True)
class Criterion:
    id: int
    name: str
    value: str
    threshold: str
    passed: bool


@dataclass(eq=False)
class CameraRun:
    name: str
    dataset: object
    distances: np.ndarray
    embedding: object
    topology: object
    profile: object
    modes: object = None

    @property
    def ratio(self):
        return density_ratio(self.profile)


@dataclass(eq=False)
class ReproduceResult:
    config_hash: str
    criteria: list
    runs: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)  # wall seconds per stage; not written to disk

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def criterion(self, cid):
        return next(c for c in self.criteria if c.id == cid)


def make_mesh(cfg):
    if cfg.mesh == "builtin":
        return builtin_mesh()
    if not os.path.isfile(cfg.mesh):
        raise InvalidArgumentError(f"config field 'mesh': file {cfg.mesh!r} does not exist")
    return load_mesh(cfg.mesh)


def make_angles(cfg):
    return sample_angles(cfg.n, cfg.angle_mode, seed=cfg.seed)


def run_camera(cfg, mesh, camera_name, angles, with_modes=True):
    cam = cfg.camera(camera_name)
    ds = render_dataset(mesh, angles, cam)
    d = pairwise_distances(ds)
    e = diffusion_map(d, s=cfg.s, sigma_multiplier=cfg.sigma_multiplier, angles=ds.angles)
    topo = check_topology(e)
    p = local_density(e.coords, cfg.r_Z, "embedding-euclidean")
    modes = None
    if with_modes and topo.cyclic_order_ok:
        modes = detect_modes(p, e, smoothing_window=cfg.smoothing_window,
                             prominence_frac=cfg.prominence_frac)
    return CameraRun(camera_name, ds, d, e, topo, p, modes)


def run_angles_direct(cfg, angles):
    d = pairwise_distances(angles_to_points(angles))
    e = diffusion_map(d, s=cfg.s, sigma_multiplier=cfg.sigma_multiplier, angles=angles)
    p = local_density(e.coords, cfg.r_Z, "embedding-euclidean")
    return e, p, uniformity_report(p, n_boot=cfg.n_boot, seed=cfg.seed)


# -- report helpers ----------------------------------------------------------

def _deg(x):
    return math.degrees(float(x))


def mode_report_items(modes, topo, p, e, config_hash):
    items = {"config_hash": config_hash, "sigma": float(e.sigma),
             "sigma_multiplier": float(e.sigma_multiplier), "radius": float(p.radius),
             "metric_id": p.metric_id, "density_ratio": density_ratio(p),
             "cyclic_order_ok": topo.cyclic_order_ok, "winding_number": topo.winding_number}
    blocks = {}
    if modes is not None:
        items.update({"n_modes": modes.n_modes, "antipodal_flag": modes.antipodal_flag,
                      "threshold": float(modes.threshold),
                      "smoothing_window": modes.smoothing_window,
                      "prominence_frac": float(modes.prominence_frac)})
        blocks["modes"] = (["index", "angle_radians", "angle_degrees", "density", "prominence"],
                           [[int(i), float(a), _deg(a), float(d), float(pr)]
                            for i, a, d, pr in zip(modes.mode_indices, modes.mode_angles,
                                                   modes.mode_density, modes.prominence)])
    else:
        items["n_modes"] = "undefined"
    return items, blocks


def alignment_report_items(rep, config_hash, sigma_a, sigma_b):
    items = {"config_hash": config_hash, "sigma_a": float(sigma_a), "sigma_b": float(sigma_b),
             "residual": float(rep.residual), "baseline_residual": float(rep.baseline_residual),
             "residual_ratio": float(rep.residual_ratio), "scale": float(rep.scale),
             "translation": [float(x) for x in rep.translation]}
    blocks = {"rotation": ([f"c{k}" for k in range(rep.rotation.shape[1])],
                           [[float(x) for x in row] for row in rep.rotation])}
    return items, blocks


def agreement_report_items(agr, config_hash, sigma):
    items = {"config_hash": config_hash, "sigma": float(sigma), "spearman": agr.spearman,
             "mode_offset_degrees": _deg(agr.mode_offset), "radius_Y": agr.radius_Y,
             "radius_Z": agr.radius_Z, "max_density_Y": agr.max_density_Y,
             "max_density_Z": agr.max_density_Z,
             "max_density_rel_diff": agr.max_density_rel_diff,
             "n_modes_Y": agr.modes_Y.n_modes, "n_modes_Z": agr.modes_Z.n_modes}
    blocks = {"modes_Y": (["index", "angle_degrees"],
                          [[int(i), _deg(a)] for i, a in zip(agr.modes_Y.mode_indices,
                                                             agr.modes_Y.mode_angles)]),
              "modes_Z": (["index", "angle_degrees"],
                          [[int(i), _deg(a)] for i, a in zip(agr.modes_Z.mode_indices,
                                                             agr.modes_Z.mode_angles)])}
    return items, blocks


# -- criteria ----------------------------------------------------------------

def _fmt(x, digits=4):
    return f"{x:.{digits}g}" if isinstance(x, float) else str(x)


def orientation_errors(mode_angles, expected):
    """Wrap-around error (degrees) from each expected angle to its nearest mode."""
    if len(mode_angles) == 0:
        return [float("inf")] * len(expected)
    return [min(_deg(torus_distance(m, x)) for m in mode_angles) for x in expected]


def evaluate(cfg, e1, uni2, agr, e4, align, e5):
    crit = []
    crit.append(Criterion(3, "angles-direct density ratio", _fmt(uni2.density_ratio),
                          f"<= {UNIFORM_RATIO_MAX}", uni2.density_ratio <= UNIFORM_RATIO_MAX))
    m1 = e1.modes
    ok4 = (e1.topology.cyclic_order_ok and m1 is not None and m1.n_modes == 2
           and m1.antipodal_flag and e1.ratio >= MODE_RATIO_MIN)
    crit.append(Criterion(
        4, "side view: topology, 2 antipodal modes, density ratio",
        f"winding={e1.topology.winding_number} modes={m1.n_modes if m1 else 'undefined'} "
        f"antipodal={bool(m1 and m1.antipodal_flag)} ratio={_fmt(e1.ratio)}",
        f"winding +-1, 2 modes, antipodal, ratio >= {MODE_RATIO_MIN}", bool(ok4)))
    expected = broadside_angles(cfg.camera(cfg.side_camera).azimuth)
    errs = orientation_errors(m1.mode_angles if m1 is not None else [], expected)
    ok5 = m1 is not None and m1.n_modes >= 2 and max(errs) <= ORIENTATION_TOL_DEG
    crit.append(Criterion(5, "mode angles vs broadside orientations",
                          "errors_deg=" + ",".join(_fmt(x) for x in errs),
                          f"<= {ORIENTATION_TOL_DEG} deg", bool(ok5)))
    ok6 = (agr is not None and agr.spearman >= SPEARMAN_MIN
           and _deg(agr.mode_offset) <= MODE_OFFSET_MAX_DEG
           and agr.max_density_rel_diff <= MAX_DENSITY_RTOL)
    crit.append(Criterion(
        6, "density on images vs embedding",
        (f"spearman={_fmt(agr.spearman)} offset_deg={_fmt(_deg(agr.mode_offset))} "
         f"max_rel_diff={_fmt(agr.max_density_rel_diff)}") if agr else "undefined",
        f"spearman >= {SPEARMAN_MIN}, offset <= {MODE_OFFSET_MAX_DEG} deg, "
        f"max density within {MAX_DENSITY_RTOL:.0%}", bool(ok6)))
    m4 = e4.modes
    shift = (_deg(torus_distance(m1.mode_angles[0], m4.mode_angles[0]))
             if m1 is not None and m4 is not None and m1.n_modes and m4.n_modes else float("nan"))
    ok7 = align.residual >= RESIDUAL_FACTOR_MIN * align.baseline_residual and shift >= MODE_SHIFT_MIN_DEG
    crit.append(Criterion(
        7, "two cameras: rigid alignment and strongest-mode shift",
        f"residual={_fmt(align.residual)} baseline={_fmt(align.baseline_residual)} "
        f"shift_deg={_fmt(shift)}",
        f"residual >= {RESIDUAL_FACTOR_MIN} x baseline, shift >= {MODE_SHIFT_MIN_DEG} deg", bool(ok7)))
    m5 = e5.modes
    ok8 = e5.ratio <= TOP_RATIO_FACTOR_MAX * e1.ratio and m5 is not None and m5.n_modes == 0
    crit.append(Criterion(
        8, "top view: density ratio and modes",
        f"top_ratio={_fmt(e5.ratio)} side_ratio={_fmt(e1.ratio)} "
        f"modes={m5.n_modes if m5 else 'undefined'}",
        f"top <= {TOP_RATIO_FACTOR_MAX} x side, 0 modes", bool(ok8)))
    return crit


# -- driver ------------------------------------------------------------------

def _stage(timings, name, fn, *args, **kw):
    t0 = time.perf_counter()
    try:
        return fn(*args, **kw)
    except MeasGeomError as exc:
        raise StageFailure(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def _write_camera_outputs(run, directory, h, title):
    os.makedirs(directory, exist_ok=True)
    e, p, m = run.embedding, run.profile, run.modes
    formats.save_embedding(e, os.path.join(directory, "embedding.csv"), h,
                           {"camera": run.name, "mesh_id": run.dataset.mesh_id})
    formats.save_density(p, os.path.join(directory, "density.csv"), h)
    items, blocks = mode_report_items(m, run.topology, p, e, h)
    formats.write_report(os.path.join(directory, "modes.txt"), items, blocks)
    modes_idx = m.mode_indices if m is not None else None
    plot.write_svg(plot.scatter_by_angle(e.coords, e.angles, modes_idx, f"{title}: angle", h),
                   os.path.join(directory, "scatter_angle.svg"))
    plot.write_svg(plot.scatter_by_density(e.coords, p.values, modes_idx,
                                           f"{title}: density", h),
                   os.path.join(directory, "scatter_density.svg"))
    plot.write_svg(plot.density_vs_angle(e.angles, {"embedding": p.values},
                                         m.mode_angles if m is not None else None,
                                         f"{title}: density vs angle", h),
                   os.path.join(directory, "density_curve.svg"))


def reproduce(cfg, out_dir, log=None, save_datasets=False):
    """Run E1-E5 with ``cfg`` and write every artifact below ``out_dir``."""
    log = log or (lambda msg: None)
    h = cfg.config_hash()
    timings = {}
    stage = functools.partial(_stage, timings)
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.cfg"))
    mesh = stage("setup", make_mesh, cfg)
    angles = stage("setup", make_angles, cfg)

    log(f"E1 side camera {cfg.side_camera!r}")
    e1 = stage("E1", run_camera, cfg, mesh, cfg.side_camera, angles)
    _write_camera_outputs(e1, os.path.join(out_dir, "e1_side"), h, "E1 side view")

    log("E2 angles direct")
    e2_emb, e2_p, uni2 = stage("E2", run_angles_direct, cfg, angles)
    d2 = os.path.join(out_dir, "e2_angles")
    os.makedirs(d2, exist_ok=True)
    formats.save_embedding(e2_emb, os.path.join(d2, "embedding.csv"), h)
    formats.save_density(e2_p, os.path.join(d2, "density.csv"), h)
    formats.write_report(os.path.join(d2, "uniformity.txt"),
                         {"config_hash": h, "sigma": float(e2_emb.sigma), "radius": cfg.r_Z,
                          "density_ratio": uni2.density_ratio, "cv": uni2.cv,
                          "p_value": uni2.p_value, "n_boot": uni2.n_boot})
    plot.write_svg(plot.scatter_by_angle(e2_emb.coords, angles, None, "E2 angles: angle", h),
                   os.path.join(d2, "scatter_angle.svg"))
    plot.write_svg(plot.scatter_by_density(e2_emb.coords, e2_p.values, None,
                                           "E2 angles: density", h),
                   os.path.join(d2, "scatter_density.svg"))

    log("E3 density on images")
    agr = None
    if e1.topology.cyclic_order_ok:
        agr = stage("E3", compare_density_Y_vs_Z, e1.dataset, e1.embedding, rY=cfg.r_Y,
                     rZ=cfg.r_Z, distances_Y=e1.distances, smoothing_window=cfg.smoothing_window,
                     prominence_frac=cfg.prominence_frac, rtol=MAX_DENSITY_RTOL)
        d3 = os.path.join(out_dir, "e3_density_Y")
        os.makedirs(d3, exist_ok=True)
        formats.save_density(agr.profile_Y, os.path.join(d3, "density_Y.csv"), h)
        items, blocks = agreement_report_items(agr, h, e1.embedding.sigma)
        formats.write_report(os.path.join(d3, "agreement.txt"), items, blocks)
        plot.write_svg(plot.density_vs_angle(
            angles, {"images (Y)": agr.profile_Y.values, "embedding (Z)": agr.profile_Z.values},
            agr.modes_Z.mode_angles, "E3 density on Y vs Z", h),
            os.path.join(d3, "density_curves.svg"))

    log(f"E4 second camera {cfg.second_camera!r}")
    e4 = stage("E4", run_camera, cfg, mesh, cfg.second_camera, angles)
    d4 = os.path.join(out_dir, "e4_two_cameras")
    _write_camera_outputs(e4, d4, h, "E4 second camera")
    align = stage("E4", procrustes_align, e1.embedding, e4.embedding,
                   baseline_distances=e1.distances, sigma_multiplier=cfg.sigma_multiplier)
    items, blocks = alignment_report_items(align, h, e1.embedding.sigma, e4.embedding.sigma)
    formats.write_report(os.path.join(d4, "alignment.txt"), items, blocks)

    log(f"E5 top camera {cfg.top_camera!r}")
    e5 = stage("E5", run_camera, cfg, mesh, cfg.top_camera, angles)
    _write_camera_outputs(e5, os.path.join(out_dir, "e5_top"), h, "E5 top view")

    if save_datasets:
        for run in (e1, e4, e5):
            formats.save_dataset(run.dataset, os.path.join(out_dir, "datasets", run.name), h)

    criteria = evaluate(cfg, e1, uni2, agr, e4, align, e5)
    items = {"config_hash": h, "n": cfg.n,
             "resolution": f"{cfg.resolution[0]}x{cfg.resolution[1]}",
             "sigma_multiplier": float(cfg.sigma_multiplier),
             "sigma_E1": float(e1.embedding.sigma), "sigma_E2": float(e2_emb.sigma),
             "sigma_E4": float(e4.embedding.sigma), "sigma_E5": float(e5.embedding.sigma),
             "density_ratio_E1": e1.ratio, "density_ratio_E2": uni2.density_ratio,
             "density_ratio_E4": e4.ratio, "density_ratio_E5": e5.ratio,
             "passed": all(c.passed for c in criteria)}
    blocks = {"criteria": (["id", "name", "value", "threshold", "result"],
                           [[c.id, c.name.replace(",", ";"), c.value.replace(",", ";"), c.threshold.replace(",", ";"),
                             "pass" if c.passed else "FAIL"]
                            for c in criteria])}
    formats.write_report(os.path.join(out_dir, "summary.txt"), items, blocks)
    for c in criteria:
        log(f"criterion {c.id} {'pass' if c.passed else 'FAIL'}: {c.name}: {c.value}")
    runs = {"E1": e1, "E4": e4, "E5": e5}
    reports = {"uniformity_E2": uni2, "embedding_E2": e2_emb, "profile_E2": e2_p,
               "agreement_E3": agr, "alignment_E4": align}
    return ReproduceResult(h, criteria, runs, reports, timings)
