"""Acceptance criteria 1-9.

Each test prints one ``ACCEPTANCE <id> PASS|FAIL`` line (also collected in
the terminal summary).  Criteria 3-8 share a single default ``reproduce``
run; every number is recomputed here from the run's in-memory results
rather than read back from the summary.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy.stats import rankdata

import oracles
from measgeom.analysis import check_topology, detect_modes, procrustes_align, uniformity_report
from measgeom.config import ExperimentConfig
from measgeom.density import ball_counts, local_density
from measgeom.diffusion import (angles_to_points, build_kernel, diffusion_map, pairwise_distances,
                                select_sigma, spectral_embed)
from measgeom.experiments import reproduce
from measgeom.scene import sample_angles, torus_distance

RESULTS = []


def report(cid, passed, detail):
    line = f"ACCEPTANCE {cid} {'PASS' if passed else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert passed, line


def _sign_align(ours, ref):
    flip = np.sign(np.sum(ours * ref, axis=0))
    flip[flip == 0] = 1
    return ours * flip


# -- 1, 2: pipeline oracles ---------------------------------------------------------

def test_criterion_1_literal_transcription():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in range(3, 9):
        for _ in range(3):
            X = rng.normal(size=(n, int(rng.integers(1, 6))))
            s = int(rng.integers(1, n))
            d = pairwise_distances(X)
            sigma = select_sigma(d)
            e = diffusion_map(d, s=s, sigma=sigma)
            lam, z, _ = oracles.diffusion_map_loop(X.tolist(), sigma, s)
            z = np.array(z)
            worst = max(worst, np.max(np.abs(e.eigenvalues - lam)),
                        np.max(np.abs(_sign_align(e.coords, z) - z)))
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-10 and dt < 1.0, f"max entry error {worst:.2e} (<= 1e-10), {dt:.2f}s (< 1s)")


def test_criterion_2_circulant():
    t0 = time.perf_counter()
    n = 64
    d = pairwise_distances(angles_to_points(sample_angles(n)))
    e = spectral_embed(build_kernel(d, select_sigma(d)), s=2)
    radii = np.linalg.norm(e.coords, axis=1)
    theta = np.unwrap(np.arctan2(e.coords[:, 1], e.coords[:, 0]))
    gaps = np.abs(np.diff(np.append(theta, theta[0] + math.copysign(2 * math.pi,
                                                                       theta[-1] - theta[0]))))
    j = np.arange(n)
    F = np.column_stack([np.cos(2 * np.pi * j / n), np.sin(2 * np.pi * j / n)])
    F /= np.linalg.norm(F, axis=0)
    U = e.eigenvectors[:, 1:3]
    span_err = float(np.linalg.norm(U - F @ (F.T @ U)))
    dt = time.perf_counter() - t0
    ok = np.ptp(radii) <= 1e-6 and np.ptp(gaps) <= 1e-6 and span_err <= 1e-6 and dt < 1.0
    report(2, ok, f"radius spread {np.ptp(radii):.1e}, gap spread {np.ptp(gaps):.1e}, "
                  f"DFT span error {span_err:.1e} (all <= 1e-6), {dt:.2f}s (< 1s)")


# -- 3-8: one default reproduction run ------------------------------------------------

@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("reproduce")
    return reproduce(ExperimentConfig(), str(out)), ExperimentConfig()


def _ratio(p):
    v = np.asarray(p.values if hasattr(p, "values") else p)
    return float(v.max() / v.min())


def test_criterion_3_angles_direct_uniform(run):
    res, _ = run
    ratio = _ratio(res.reports["profile_E2"])
    dt = res.timings["E2"]
    report(3, ratio <= 1.15 and dt < 30, f"density ratio {ratio:.4f} (<= 1.15), {dt:.1f}s (< 30s)")


def test_criterion_4_side_view_modes(run):
    res, cfg = run
    e1 = res.runs["E1"]
    topo = check_topology(e1.embedding)
    modes = detect_modes(e1.profile, e1.embedding, smoothing_window=cfg.smoothing_window,
                         prominence_frac=0.2)
    ratio = _ratio(e1.profile)
    dt = res.timings["E1"]
    ok = (topo.cyclic_order_ok and abs(topo.winding_number) == 1 and modes.n_modes == 2
          and modes.antipodal_flag and ratio >= 2.0 and dt <= 300)
    report(4, ok, f"winding {topo.winding_number}, {modes.n_modes} modes, antipodal "
                  f"{modes.antipodal_flag}, density ratio {ratio:.3f} (>= 2), {dt:.1f}s (<= 300s)")


def test_criterion_5_mode_orientation(run):
    res, cfg = run
    modes = res.runs["E1"].modes
    az = cfg.camera(cfg.side_camera).azimuth
    # the long axis (body x) at turntable angle a points along a; the view is
    # broadside when that direction is perpendicular to the camera azimuth
    errs = []
    for m in modes.mode_angles[:2]:
        off = math.degrees(float(torus_distance(m, az)))
        errs.append(abs(off - 90.0))
    ok = len(errs) == 2 and max(errs) <= 15
    report(5, ok, "mode orientation errors " + ", ".join(f"{x:.2f}" for x in errs) + " deg (<= 15)")


def test_criterion_6_Y_vs_Z(run):
    res, _ = run
    agr = res.reports["agreement_E3"]
    rho = float(np.corrcoef(rankdata(agr.profile_Y.values), rankdata(agr.profile_Z.values))[0, 1])
    offset = math.degrees(float(torus_distance(agr.modes_Y.mode_angles[0],
                                               agr.modes_Z.mode_angles[0])))
    rel = abs(agr.profile_Y.values.max() / agr.profile_Z.values.max() - 1)
    ok = rho >= 0.7 and offset <= 15 and rel <= 0.05
    report(6, ok, f"spearman {rho:.4f} (>= 0.7), strongest-mode offset {offset:.2f} deg (<= 15), "
                  f"max density mismatch {rel:.4f} (<= 0.05)")


def _kabsch_rms(a, b):
    a0, b0 = a - a.mean(0), b - b.mean(0)
    u, _, vt = np.linalg.svd(a0.T @ b0)
    return float(np.sqrt(np.mean(np.sum((a0 @ (u @ vt) - b0) ** 2, axis=1))))


def test_criterion_7_two_cameras(run):
    res, _ = run
    e1, e4 = res.runs["E1"], res.runs["E4"]
    align = res.reports["alignment_E4"]
    resid = _kabsch_rms(e1.embedding.coords, e4.embedding.coords)
    assert resid == pytest.approx(align.residual, rel=1e-9)
    shift = math.degrees(float(torus_distance(e1.modes.mode_angles[0], e4.modes.mode_angles[0])))
    base = align.baseline_residual
    ok = resid >= 3 * base and shift >= 20
    report(7, ok, f"rigid residual {resid:.4g} vs 3 x baseline {3 * base:.4g}, "
                  f"strongest-mode shift {shift:.2f} deg (>= 20)")


def test_criterion_8_top_view(run):
    res, cfg = run
    top, side = res.runs["E5"], res.runs["E1"]
    modes = detect_modes(top.profile, top.embedding, smoothing_window=cfg.smoothing_window,
                         prominence_frac=0.2)
    rt, rs = _ratio(top.profile), _ratio(side.profile)
    ok = rt <= 0.6 * rs and modes.n_modes == 0
    report(8, ok, f"top ratio {rt:.3f} vs 0.6 x side {0.6 * rs:.3f}, {modes.n_modes} modes (0)")


def test_reproduce_summary_agrees(run):
    res, _ = run
    assert [c.id for c in res.criteria] == [3, 4, 5, 6, 7, 8]
    assert res.passed == all(c.passed for c in res.criteria)


# -- 9: property suites ---------------------------------------------------------------

def _properties(tmp_path):
    rng = np.random.default_rng(9)
    checks = {}

    X = rng.normal(size=(40, 5))
    d = pairwise_distances(X)
    e = diffusion_map(d, s=3)
    perm = rng.permutation(40)
    ep = diffusion_map(d[np.ix_(perm, perm)], s=3)
    checks["permutation equivariance"] = (
        np.allclose(ep.eigenvalues, e.eigenvalues, atol=1e-10)
        and np.allclose(np.abs(ep.coords), np.abs(e.coords[perm]), atol=1e-8))
    checks["lambda_0 = 1"] = abs(e.eigenvalues[0] - 1) <= 1e-8
    u0 = e.eigenvectors[:, 0]
    checks["single-signed u_0"] = bool(np.all(u0 > 0) or np.all(u0 < 0))
    es = diffusion_map(3.7 * d, s=3, sigma=3.7 ** 2 * e.sigma)
    checks["distance/sigma scale consistency"] = np.allclose(
        np.abs(es.coords), np.abs(e.coords), atol=1e-9)

    pts = rng.normal(size=(30, 2))
    loop = oracles.ball_counts_loop(pts.tolist(), 0.8, math.dist)
    checks["density oracle equality"] = (
        list(ball_counts(pairwise_distances(pts), 0.8)) == loop
        and np.array_equal(local_density(pts, 0.8).values, np.array(loop) / sum(loop)))

    a = sample_angles(360)
    z = np.column_stack([np.cos(a + 0.35 * np.sin(2 * a)), np.sin(a + 0.35 * np.sin(2 * a))])
    ok = True
    for phi, reflect in ((0.9, False), (2.3, True)):
        R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        w = z @ (R @ np.diag([1.0, -1.0]) if reflect else R).T
        pz, pw = local_density(z, 0.05), local_density(w, 0.05)
        mz, mw = detect_modes(pz, z, a), detect_modes(pw, w, a)
        tz, tw = check_topology(z, a), check_topology(w, a)
        ok &= (np.allclose(pz.values, pw.values, atol=1e-12)
               and np.array_equal(mz.mode_indices, mw.mode_indices)
               and abs(tz.winding_number) == abs(tw.winding_number)
               and abs(uniformity_report(pz, 10).cv - uniformity_report(pw, 10).cv) <= 1e-9
               and abs(procrustes_align(z, z[::-1]).residual
                       - procrustes_align(w, z[::-1]).residual) <= 1e-9)
    checks["rotation/reflection invariance"] = bool(ok)

    cams = {"left": {"elevation": 0.35}, "right": {"azimuth": math.pi / 3, "elevation": 0.35},
            "top": {"elevation": math.pi / 2}}
    cfg = ExperimentConfig(n=48, resolution=(20, 18), n_boot=10, smoothing_window=5,
                           cameras=cams)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        try:
            reproduce(cfg, str(out))
        except Exception as exc:  # a small config may legitimately fail a stage
            outs.append(repr(exc))
            continue
        files = {}
        for root, _, names in os.walk(out):
            for nm in names:
                p = os.path.join(root, nm)
                with open(p, "rb") as fh:
                    files[os.path.relpath(p, out)] = fh.read()
        outs.append(files)
    checks["byte determinism of reproduce"] = outs[0] == outs[1] and isinstance(outs[0], dict)
    return checks


def test_criterion_9_property_suites(tmp_path):
    checks = _properties(tmp_path)
    failed = [k for k, v in checks.items() if not v]
    report(9, not failed, f"{len(checks) - len(failed)}/{len(checks)} property checks green"
                          + (f"; failing: {', '.join(failed)}" if failed else ""))
