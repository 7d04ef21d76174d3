"""``measgeom`` command line.

Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 failed
acceptance criteria (``reproduce`` only).
"""

import argparse
import os
import sys

import numpy as np

from . import formats, plot
from .analysis import (check_topology, compare_density_Y_vs_Z, detect_modes, procrustes_align,
                       uniformity_report)
from .config import ExperimentConfig, load_config
from .density import density_ratio, distance_matrix_for, local_density
from .diffusion import angles_to_points, diffusion_map, pairwise_distances
from .exceptions import (InvalidArgumentError, MeasGeomError, NumericalDegeneracyError,
                         ProvenanceError)
from .experiments import (StageFailure, agreement_report_items, alignment_report_items,
                          make_angles, make_mesh, mode_report_items, reproduce)
from .render import render_dataset

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    if args.full_res:
        cfg = cfg.full_res()
    return cfg


def _out_dir(args, cfg):
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _hash_of(args, cfg, *metas):
    """Provenance hash for outputs: the inputs' hash if they carry one."""
    for meta in metas:
        if meta.get("config_hash"):
            return meta["config_hash"]
    return cfg.config_hash()


def _check_provenance(metas, force, labels):
    hashes = {lab: m.get("config_hash", "") for lab, m in zip(labels, metas)}
    distinct = {h for h in hashes.values() if h}
    if len(distinct) > 1 and not force:
        detail = ", ".join(f"{k}={v or 'none'}" for k, v in hashes.items())
        raise ProvenanceError(f"inputs come from different configurations ({detail}); "
                              f"pass --force to analyze them together")


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args, cfg):
    n = args.n or cfg.n
    if args.resolution:
        w, h = (int(x) for x in args.resolution.lower().split("x"))
        cfg = cfg.with_overrides(resolution=(w, h))
    cfg = cfg.with_overrides(n=n)
    cam = cfg.camera(args.camera or cfg.side_camera)
    mesh = make_mesh(cfg)
    ds = render_dataset(mesh, make_angles(cfg), cam)
    out = _out_dir(args, cfg)
    formats.save_dataset(ds, out, cfg.config_hash())
    print(f"n={ds.n} D={ds.n_features}")
    print(cam.summary())
    print(f"dataset written to {out}")
    return EXIT_OK


def _manifest_dir(path):
    if os.path.isdir(path):
        return path
    if os.path.basename(path) == formats.MANIFEST:
        return os.path.dirname(path) or "."
    raise InvalidArgumentError(f"--angles expects a {formats.MANIFEST} file or its directory")


def cmd_embed(args, cfg):
    mult = args.sigma_multiplier if args.sigma_multiplier is not None else cfg.sigma_multiplier
    s = args.s if args.s is not None else cfg.s
    if args.angles:
        where = _manifest_dir(args.angles)
        angles, _ = formats.read_manifest(where)
        d = pairwise_distances(angles_to_points(angles))
        prov = formats.read_provenance(where)
        source = "angles"
    elif args.dataset:
        ds = formats.load_dataset(args.dataset)
        angles = ds.angles
        d = pairwise_distances(ds)
        prov = formats.read_provenance(args.dataset)
        source = "images"
    else:
        raise InvalidArgumentError("embed needs a dataset directory or --angles")
    try:
        e = diffusion_map(d, s=s, sigma_multiplier=mult, angles=angles)
    except NumericalDegeneracyError as exc:
        raise NumericalDegeneracyError(
            f"{exc} (hint: raise --sigma-multiplier, currently {mult:g})") from None
    out = _out_dir(args, cfg)
    path = os.path.join(out, args.name or "embedding.csv")
    formats.save_embedding(e, path, _hash_of(args, cfg, prov), {"source": source})
    print(f"n={e.n} s={e.s} sigma={e.sigma:.6g} eigenvalues="
          + ",".join(f"{v:.6g}" for v in e.eigenvalues))
    print(f"embedding written to {path}")
    return EXIT_OK


def cmd_density(args, cfg):
    metric = {"embedding": "embedding-euclidean", "measurement": "measurement-euclidean",
              "torus": "torus-wraparound"}[args.metric]
    meta = {}
    if metric == "measurement-euclidean":
        if not args.dataset:
            raise InvalidArgumentError("--metric measurement needs --dataset")
        ds = formats.load_dataset(args.dataset)
        d = pairwise_distances(ds)
        meta = formats.read_provenance(args.dataset)
        r = args.radius if args.radius is not None else (
            cfg.r_Y if cfg.r_Y != "auto" else 9.0)
    else:
        if not args.embedding:
            raise InvalidArgumentError("density needs an embedding CSV")
        e, meta = formats.load_embedding(args.embedding)
        if metric == "torus-wraparound":
            if e.angles is None:
                raise InvalidArgumentError("embedding has no angles for the torus metric")
            d = distance_matrix_for(e.angles, metric)
        else:
            d = distance_matrix_for(e.coords, metric)
        r = args.radius if args.radius is not None else cfg.r_Z
    p = local_density(None, r, metric, distances=d)
    h = _hash_of(args, cfg, meta)
    out = _out_dir(args, cfg)
    path = os.path.join(out, args.name or "density.csv")
    formats.save_density(p, path, h)
    u = uniformity_report(p, n_boot=args.n_boot, seed=cfg.seed)
    formats.write_report(os.path.splitext(path)[0] + "_uniformity.txt",
                         {"config_hash": h, "sigma": meta.get("sigma", "nan"),
                          "radius": float(r), "metric_id": metric,
                          "density_ratio": u.density_ratio, "cv": u.cv,
                          "p_value": u.p_value, "n_boot": u.n_boot})
    print(f"radius={r:.6g} metric={metric} density_ratio={u.density_ratio:.6g} cv={u.cv:.6g} "
          f"p_value={u.p_value:.4g}")
    print(f"density written to {path}")
    return EXIT_OK


def cmd_analyze(args, cfg):
    e, emeta = formats.load_embedding(args.embedding)
    p, pmeta = formats.load_density(args.density)
    _check_provenance([emeta, pmeta], args.force, ["embedding", "density"])
    if p.n != e.n:
        raise InvalidArgumentError(f"density has {p.n} values, embedding has {e.n} points")
    topo = check_topology(e)
    modes = detect_modes(p, e, smoothing_window=args.smoothing_window or cfg.smoothing_window,
                         prominence_frac=args.prominence_frac or cfg.prominence_frac)
    h = _hash_of(args, cfg, emeta, pmeta)
    items, blocks = mode_report_items(modes, topo, p, e, h)
    out = _out_dir(args, cfg)
    path = os.path.join(out, args.name or "modes.txt")
    formats.write_report(path, items, blocks)
    print(f"cyclic_order_ok={topo.cyclic_order_ok} winding={topo.winding_number} "
          f"density_ratio={density_ratio(p):.4g}")
    print(f"modes={modes.n_modes} antipodal={modes.antipodal_flag} angles_deg="
          + ",".join(f"{np.degrees(a):.1f}" for a in modes.mode_angles))
    print(f"report written to {path}")
    return EXIT_OK


def cmd_compare(args, cfg):
    out = _out_dir(args, cfg)
    if len(args.embeddings) == 2:
        (a, ameta), (b, bmeta) = (formats.load_embedding(x) for x in args.embeddings)
        _check_provenance([ameta, bmeta], args.force, ["a", "b"])
        base_d = None
        if args.baseline_dataset:
            base_d = pairwise_distances(formats.load_dataset(args.baseline_dataset))
        rep = procrustes_align(a, b, with_scale=args.with_scale, baseline_distances=base_d,
                               sigma_multiplier=args.sigma_multiplier or a.sigma_multiplier)
        h = _hash_of(args, cfg, ameta, bmeta)
        items, blocks = alignment_report_items(rep, h, a.sigma, b.sigma)
        path = os.path.join(out, args.name or "alignment.txt")
        formats.write_report(path, items, blocks)
        print(f"residual={rep.residual:.6g} baseline={rep.baseline_residual:.6g} "
              f"ratio={rep.residual_ratio:.4g}")
    elif len(args.embeddings) == 1 and args.dataset:
        e, emeta = formats.load_embedding(args.embeddings[0])
        ds = formats.load_dataset(args.dataset)
        _check_provenance([emeta, formats.read_provenance(args.dataset)], args.force,
                          ["embedding", "dataset"])
        rY = args.radius_y if args.radius_y is not None else cfg.r_Y
        agr = compare_density_Y_vs_Z(ds, e, rY=rY, rZ=cfg.r_Z,
                                     smoothing_window=cfg.smoothing_window,
                                     prominence_frac=cfg.prominence_frac)
        h = _hash_of(args, cfg, emeta)
        items, blocks = agreement_report_items(agr, h, e.sigma)
        path = os.path.join(out, args.name or "agreement.txt")
        formats.write_report(path, items, blocks)
        print(f"spearman={agr.spearman:.4g} mode_offset_deg={np.degrees(agr.mode_offset):.3g} "
              f"radius_Y={agr.radius_Y:.6g}")
    else:
        raise InvalidArgumentError(
            "compare needs two embeddings, or one embedding and --dataset")
    print(f"report written to {path}")
    return EXIT_OK


def cmd_plot(args, cfg):
    e, emeta = formats.load_embedding(args.embedding)
    h = _hash_of(args, cfg, emeta)
    modes_idx, mode_angles = None, None
    if args.modes:
        items, blocks = formats.read_report(args.modes)
        rows = blocks.get("modes", [])[1:]
        modes_idx = [int(r[0]) for r in rows]
        mode_angles = [float(r[1]) for r in rows]
    out = _out_dir(args, cfg)
    written = []
    if e.angles is not None:
        written.append(plot.write_svg(plot.scatter_by_angle(e.coords, e.angles, modes_idx,
                                                            "embedding by angle", h),
                                      os.path.join(out, "scatter_angle.svg")))
    if args.density:
        p, _ = formats.load_density(args.density)
        written.append(plot.write_svg(plot.scatter_by_density(e.coords, p.values, modes_idx,
                                                              "embedding by density", h),
                                      os.path.join(out, "scatter_density.svg")))
        if e.angles is not None:
            written.append(plot.write_svg(
                plot.density_vs_angle(e.angles, {"density": p.values}, mode_angles,
                                      "density vs angle", h),
                os.path.join(out, "density_curve.svg")))
    if not written:
        raise InvalidArgumentError("nothing to plot: embedding has no angles and no --density")
    for w in written:
        print(f"wrote {w}")
    return EXIT_OK


def cmd_reproduce(args, cfg):
    out = _out_dir(args, cfg)
    res = reproduce(cfg, out, log=print, save_datasets=args.save_datasets)
    print(f"summary written to {os.path.join(out, 'summary.txt')}")
    return EXIT_OK if res.passed else EXIT_ACCEPTANCE


# -- entry point ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key=value config file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--full-res", action="store_true", default=argparse.SUPPRESS,
                        help="render at 200x180 instead of the configured resolution")

    parser = _Parser(prog="measgeom", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--full-res", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="render a dataset directory")
    p.add_argument("--camera", help="camera name from the config (default: side camera)")
    p.add_argument("--n", type=int)
    p.add_argument("--resolution", help="WIDTHxHEIGHT")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", parents=[common], help="diffusion-map embedding")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--angles", help="embed the angles of this manifest directly")
    p.add_argument("--sigma-multiplier", type=float)
    p.add_argument("-s", type=int)
    p.add_argument("--name", help="output file name (default embedding.csv)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("density", parents=[common], help="local density profile")
    p.add_argument("embedding", nargs="?")
    p.add_argument("--metric", choices=("embedding", "measurement", "torus"),
                   default="embedding")
    p.add_argument("--dataset")
    p.add_argument("--radius", type=float)
    p.add_argument("--n-boot", type=int, default=200)
    p.add_argument("--name", help="output file name (default density.csv)")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("analyze", parents=[common], help="topology and density modes")
    p.add_argument("embedding")
    p.add_argument("density")
    p.add_argument("--smoothing-window", type=int)
    p.add_argument("--prominence-frac", type=float)
    p.add_argument("--force", action="store_true", help="accept inputs from different configs")
    p.add_argument("--name", help="output file name (default modes.txt)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[common],
                       help="align two embeddings, or compare image and embedding densities")
    p.add_argument("embeddings", nargs="+")
    p.add_argument("--dataset", help="dataset behind the embedding (density comparison)")
    p.add_argument("--baseline-dataset", help="dataset behind the first embedding")
    p.add_argument("--sigma-multiplier", type=float)
    p.add_argument("--radius-y", type=float)
    p.add_argument("--with-scale", action="store_true")
    p.add_argument("--force", action="store_true")
    p.add_argument("--name", help="output file name")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", parents=[common], help="SVG figures")
    p.add_argument("embedding")
    p.add_argument("--density")
    p.add_argument("--modes", help="report written by analyze")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("reproduce", parents=[common], help="run all five experiments")
    p.add_argument("--save-datasets", action="store_true")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.__cause__
        return EXIT_INVALID if isinstance(cause, (InvalidArgumentError, OSError)) else EXIT_NUMERICAL
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MeasGeomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
