"""meshmend command line: repair / audit / inject."""

import argparse
import json
import os
import sys

from .mesh import MeshError, load_mesh, save_mesh
from .pipeline import (
    InjectionSpec,
    PipelineConfig,
    audit_deficiencies,
    inject_deficiencies,
    run_pipeline,
    slice_export,
)
from .visibility import RaySamplingPlan

EXIT_OK = 0
EXIT_HARD = 1
EXIT_PARTIAL = 2

_SKIP_FLAGS = {
    "dedup": "dedup",
    "degenerate": "remove_degenerate",
    "isolated": "remove_isolated",
    "normalize": "normalize",
    "remesh": "remesh",
    "dedup2": "dedup_after_remesh",
    "simplify": "simplify",
    "orient": "correct_orientation",
    "inner": "remove_inner",
}

_MESH_EXTENSIONS = (".off", ".obj")


def _add_common(parser):
    parser.add_argument("--rays-total", type=int, default=200_000,
                        help="total ray budget shared by area (default 200000)")
    parser.add_argument("--rays-min", type=int, default=100,
                        help="minimum rays per face (default 100)")
    parser.add_argument("--inner-threshold", type=float, default=0.05,
                        help="escape fraction below which a face is inner (default 0.05)")
    parser.add_argument("--dedup-tolerance", type=float, default=0.0,
                        help="duplicate-vertex snapping distance (default 0 = exact)")
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads for ray casting (result is identical)")


def _config_from(args, skip=()):
    plan = RaySamplingPlan(
        n_max=args.rays_total,
        n_min=args.rays_min,
        inner_threshold=args.inner_threshold,
        seed=args.seed,
    )
    return PipelineConfig(
        target_vertices=getattr(args, "target_vertices", 10_000),
        dedup_tolerance=args.dedup_tolerance,
        plan=plan,
        samples_per_segment=getattr(args, "samples_per_segment", 2),
        workers=args.workers,
        skip_stages=tuple(skip),
    )


def _parse_slice(spec):
    vals = [float(x) for x in spec.split(",")]
    if len(vals) != 6:
        raise ValueError("--slice wants 'px,py,pz,nx,ny,nz'")
    return vals[:3], vals[3:]


def _mesh_files(root):
    for dirpath, _, names in sorted(os.walk(root)):
        for name in sorted(names):
            if os.path.splitext(name)[1].lower() in _MESH_EXTENSIONS:
                yield os.path.join(dirpath, name)


def _repair_one(in_path, out_path, config, args):
    mesh = load_mesh(in_path)
    fixed, report = run_pipeline(mesh, config)
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    save_mesh(fixed, out_path)
    if args.slice:
        point, normal = _parse_slice(args.slice[0])
        slice_export(fixed, point, normal, args.slice[1])
    for s in report.stages:
        print(
            f"{in_path}: {s.stage}: v {s.vertices_before}->{s.vertices_after} "
            f"f {s.faces_before}->{s.faces_after} removed/flipped {s.removed_or_flipped} "
            f"({s.ms:.1f} ms)"
        )
    if report.partial_failure:
        print(f"{in_path}: PARTIAL FAILURE at {report.failed_stage}: {report.error}",
              file=sys.stderr)
    return report


def cmd_repair(args):
    skip = [_SKIP_FLAGS[k] for k in _SKIP_FLAGS if getattr(args, f"skip_{k}")]
    config = _config_from(args, skip)

    reports = {}
    partial = False
    if os.path.isdir(args.input):
        for path in _mesh_files(args.input):
            rel = os.path.relpath(path, args.input)
            out_path = os.path.join(args.output, rel)
            report = _repair_one(path, out_path, config, args)
            reports[rel] = report
            partial = partial or report.partial_failure
    else:
        report = _repair_one(args.input, args.output, config, args)
        reports = report
        partial = report.partial_failure

    if args.report:
        if isinstance(reports, dict):
            payload = {rel: r.to_dicts() for rel, r in reports.items()}
        else:
            payload = reports.to_dicts()
        with open(args.report, "w") as fh:
            json.dump(payload, fh, indent=2)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_audit(args):
    mesh = load_mesh(args.input)
    config = _config_from(args)
    report = audit_deficiencies(mesh, config, include_inner=not args.no_inner)
    payload = report.to_dict()
    text = json.dumps(payload, indent=2)
    if args.report and args.report != "-":
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_inject(args):
    mesh = load_mesh(args.input)
    with open(args.spec) as fh:
        spec = InjectionSpec.from_dict(json.load(fh))
    out, truth = inject_deficiencies(mesh, spec, seed=args.seed)
    save_mesh(out, args.output)
    if args.truth:
        with open(args.truth, "w") as fh:
            json.dump(truth, fh, indent=2)
    print(f"{args.output}: {out.n_vertices} vertices, {out.n_faces} faces")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="meshmend",
        description="Repair triangle meshes: duplicates, degenerate faces, "
                    "isolated vertices, self-intersections, inner faces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("repair", help="run the full repair pipeline")
    rep.add_argument("input", help="mesh file or directory (OFF/OBJ)")
    rep.add_argument("-o", "--output", required=True,
                     help="output file, or directory in batch mode")
    rep.add_argument("--target-vertices", type=int, default=10_000,
                     help="simplification target; 0 skips simplification")
    rep.add_argument("--samples-per-segment", type=int, default=2,
                     help="points per intersection segment when remeshing")
    _add_common(rep)
    for flag, stage in _SKIP_FLAGS.items():
        rep.add_argument(f"--skip-{flag}", action="store_true",
                         help=f"skip the {stage} stage")
    rep.add_argument("--report", metavar="PATH", help="write the stage report as JSON")
    rep.add_argument("--slice", nargs=2, metavar=("PLANE", "PATH"),
                     help="also export a cross-section: 'px,py,pz,nx,ny,nz' out.off")
    rep.set_defaults(func=cmd_repair)

    aud = sub.add_parser("audit", help="count remaining deficiencies")
    aud.add_argument("input", help="mesh file (OFF/OBJ)")
    aud.add_argument("--report", metavar="PATH",
                     help="also write the JSON audit to a file ('-' = stdout only)")
    aud.add_argument("--no-inner", action="store_true",
                     help="skip the (ray-cast) inner-face count")
    _add_common(aud)
    aud.set_defaults(func=cmd_audit)

    inj = sub.add_parser("inject", help="graft synthetic deficiencies onto a clean mesh")
    inj.add_argument("input", help="clean mesh file (OFF/OBJ)")
    inj.add_argument("--spec", required=True,
                     help="JSON file of per-class counts (InjectionSpec fields)")
    inj.add_argument("-o", "--output", required=True, help="output mesh path")
    inj.add_argument("--truth", metavar="PATH", help="write the ground truth as JSON")
    inj.add_argument("--seed", type=int, default=0)
    inj.set_defaults(func=cmd_inject)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MeshError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"meshmend: error: {exc}", file=sys.stderr)
        return EXIT_HARD


if __name__ == "__main__":
    sys.exit(main())
