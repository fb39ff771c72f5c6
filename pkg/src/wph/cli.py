"""Command-line front end: filtrations, barcodes, theorem audits, digit study.

Exit codes: 0 success, 1 user/validation error, 2 audit violation.  Every
report is printed to stdout and, when ``--out`` is given, written to a file as
well.  Seeded commands are byte-deterministic across runs and thread counts.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import io as wio
from .filtration import (
    CechSolverError,
    FiltrationSizeError,
    build_weighted_cech,
    build_weighted_rips,
    verify_vr_lemma,
)
from .geometry import PointCloud, Region, linear_radii
from .metrics import (
    Relation,
    bottleneck_distance,
    entry_sup_distance,
    stability_bound,
    verify_diagram_stability,
)
from .mnist import MnistConfig, evaluate, load_digits_csv
from .persistence import boundary_matrix, diagram, reduce

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_AUDIT_FAILURE = 2


class _ParserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # no usage dump + SystemExit(2); uniform exit 1
        raise _ParserError(message)


def _emit(text: str, out_path=None):
    print(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _positive(kind, name, value):
    if value is None or value <= 0:
        raise ValueError(f"{name} must be a positive {kind}, got {value}")
    return value


def _build_parser() -> _Parser:
    p = _Parser(prog="wph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="command")

    def common_build(sp):
        sp.add_argument("cloud", help="point-cloud CSV (x1,...,xd,weight)")
        sp.add_argument("--max-dim", type=int, default=2, help="largest simplex dimension")
        sp.add_argument("--t-max", type=float, default=math.inf, help="largest entry scale kept")
        sp.add_argument("--cap", type=int, default=10_000_000, help="simplex-count guard")
        sp.add_argument("--header", action="store_true", help="force-skip a CSV header row")
        sp.add_argument("--out", help="write the filtration TSV here as well")

    sp = sub.add_parser("rips", help="build a weighted Vietoris-Rips filtration")
    common_build(sp)
    sp.set_defaults(func=_cmd_rips)

    sp = sub.add_parser("cech", help="build a weighted Cech filtration (linear growth)")
    common_build(sp)
    sp.set_defaults(func=_cmd_cech)

    sp = sub.add_parser("barcode", help="persistence diagram of a filtration or cloud")
    sp.add_argument("input", help="filtration TSV (*.tsv) or point-cloud CSV")
    sp.add_argument("--max-dim", type=int, default=2, help="simplex dimension when building from a cloud")
    sp.add_argument("--t-max", type=float, default=math.inf)
    sp.add_argument("--cap", type=int, default=10_000_000)
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--out", help="write the diagram TSV here as well")
    sp.add_argument("--svg", help="write an SVG barcode here")
    sp.add_argument("--plot", help="write a PNG barcode figure here")
    sp.set_defaults(func=_cmd_barcode)

    sp = sub.add_parser("bottleneck", help="bottleneck distance between two diagram TSVs")
    sp.add_argument("diagram_a")
    sp.add_argument("diagram_b")
    sp.add_argument("--dim", type=int, required=True, help="homology dimension to compare")
    sp.set_defaults(func=_cmd_bottleneck)

    sp = sub.add_parser("verify-vr", help="audit the weighted Vietoris-Rips sandwich")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dim", type=int, choices=(2, 3), help="fix the ambient dimension (default: alternate 2 and 3)")
    sp.add_argument("--max-dim", type=int, default=3)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_verify_vr)

    sp = sub.add_parser("verify-stability", help="audit the entry-function and diagram bounds")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--grid", type=int, default=64, help="grid resolution per axis")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_verify_stability)

    sp = sub.add_parser("mnist", help="eights-vs-rest study on a digits CSV")
    sp.add_argument("digits", help="label + 784 intensity columns CSV")
    sp.add_argument("--mode", choices=("weighted", "unweighted"), required=True)
    sp.add_argument("--limit", type=int, help="use only the first N rows")
    sp.add_argument("--t-max", type=float, default=10.0)
    sp.add_argument("--max-dim", type=int, default=2)
    sp.add_argument("--cap", type=int, default=10_000_000)
    sp.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    sp.add_argument("--out", help="write the report TSV here as well")
    sp.add_argument("--log", help="write the per-image prediction TSV here")
    sp.add_argument("--figures", help="write report figures (PNG) into this directory")
    sp.set_defaults(func=_cmd_mnist)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ParserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_USER_ERROR
    try:
        return args.func(args)
    except (ValueError, OSError, FiltrationSizeError, CechSolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR


def _load_cloud(args) -> PointCloud:
    header = True if args.header else None
    return wio.read_point_cloud(args.cloud, header=header)


def _filtration_text(filt) -> str:
    lines = []
    for simplex, scale in filt:
        lines.append(
            f"{len(simplex) - 1}\t{wio.fmt(scale)}\t" + ",".join(str(v) for v in simplex)
        )
    return "\n".join(lines)


def _cmd_rips(args) -> int:
    _positive("integer", "--cap", args.cap)
    if args.max_dim < 0:
        raise ValueError("--max-dim must be nonnegative")
    cloud = _load_cloud(args)
    filt = build_weighted_rips(cloud, max_dim=args.max_dim, t_max=args.t_max, cap=args.cap)
    _emit(_filtration_text(filt), args.out)
    return EXIT_OK


def _cmd_cech(args) -> int:
    _positive("integer", "--cap", args.cap)
    if args.max_dim < 0:
        raise ValueError("--max-dim must be nonnegative")
    cloud = _load_cloud(args)
    filt = build_weighted_cech(cloud, max_dim=args.max_dim, t_max=args.t_max, cap=args.cap)
    _emit(_filtration_text(filt), args.out)
    return EXIT_OK


def _cmd_barcode(args) -> int:
    if args.input.endswith(".tsv"):
        filt = wio.read_filtration(args.input)
    else:
        header = True if args.header else None
        cloud = wio.read_point_cloud(args.input, header=header)
        filt = build_weighted_rips(
            cloud, max_dim=args.max_dim, t_max=args.t_max, cap=args.cap
        )
    dgm = diagram(filt, reduce(boundary_matrix(filt)))
    lines = [
        f"{int(d)}\t{wio.fmt(b)}\t{wio.fmt(dt)}"
        for d, b, dt in zip(dgm.dims, dgm.births, dgm.deaths)
    ]
    _emit("\n".join(lines), args.out)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(wio.render_barcode_svg(dgm))
    if args.plot:
        from . import plots

        plots.save_barcode_figure(dgm, args.plot)
    return EXIT_OK


def _cmd_bottleneck(args) -> int:
    if args.dim < 0:
        raise ValueError("--dim must be nonnegative")
    a = wio.read_diagram(args.diagram_a)
    b = wio.read_diagram(args.diagram_b)
    print(wio.fmt(bottleneck_distance(a, b, args.dim)))
    return EXIT_OK


def _cmd_verify_vr(args) -> int:
    _positive("integer", "--trials", args.trials)
    if args.max_dim < 1:
        raise ValueError("--max-dim must be at least 1")
    lines = ["trial\tn\td\tt\tt_prime\tholds\tchecked\tnear_boundary"]
    failures = []
    for trial in range(args.trials):
        rng = np.random.default_rng([args.seed, trial])
        d = args.dim if args.dim else int(rng.choice([2, 3]))
        n = int(rng.integers(2, 9))
        cloud = PointCloud(rng.uniform(0.0, 1.0, (n, d)), rng.uniform(0.2, 5.0, n))
        t = float(rng.uniform(0.1, 3.0))
        report = verify_vr_lemma(cloud, t, max_dim=args.max_dim, tol=args.tol)
        lines.append(
            f"{trial}\t{n}\t{d}\t{wio.fmt(t)}\t{wio.fmt(report.t_prime)}\t"
            f"{int(report.holds)}\t{report.n_checked}\t{len(report.near_boundary)}"
        )
        if not report.holds:
            failures.append((trial, report))
    text = "\n".join(lines)
    if failures:
        witness_lines = []
        for trial, report in failures:
            for v in report.violations:
                witness_lines.append(
                    f"trial {trial}: simplex {v.simplex} breaks {v.containment}: "
                    f"rips scale {wio.fmt(v.rips_scale)}, ball-intersection scale "
                    f"{wio.fmt(v.cech_scale)}, threshold {wio.fmt(v.threshold)}"
                )
        text += "\nVIOLATIONS:\n" + "\n".join(witness_lines)
        _emit(text, args.out)
        return EXIT_AUDIT_FAILURE
    text += f"\nall {args.trials} trials hold"
    _emit(text, args.out)
    return EXIT_OK


def _jittered_pair(rng, n):
    """Base cloud on [0,1]^2 and a copy with <=0.1 point and <=10% weight jitter."""
    pts = rng.uniform(0.0, 1.0, (n, 2))
    w = rng.uniform(0.5, 2.0, n)
    direction = rng.normal(size=(n, 2))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-12)
    radius = 0.1 * np.sqrt(rng.uniform(0.0, 1.0, n))
    pts_y = pts + direction * radius[:, None]
    w_y = w * (1.0 + rng.uniform(-0.1, 0.1, n))
    return PointCloud(pts, w), PointCloud(pts_y, w_y)


def _cmd_verify_stability(args) -> int:
    _positive("integer", "--trials", args.trials)
    if args.grid < 2:
        raise ValueError("--grid must be at least 2")
    region = Region([-0.2, -0.2], [1.2, 1.2], args.grid)
    lines = ["kind\ttrial\tdim\tvalue\tbound\tholds"]
    failures = []
    for trial in range(args.trials):
        rng = np.random.default_rng([args.seed, trial, 1])
        x, y = _jittered_pair(rng, int(rng.integers(3, 11)))
        r, s = linear_radii(x), linear_radii(y)
        eta = Relation.identity(len(x))
        bound = stability_bound(x, r, y, s, eta, region)
        sup = entry_sup_distance(x, r, y, s, region)
        ok = sup <= bound.total + 1e-9
        lines.append(
            f"entry\t{trial}\t-\t{wio.fmt(sup)}\t{wio.fmt(bound.total)}\t{int(ok)}"
        )
        if not ok:
            failures.append(f"entry trial {trial}: sup {wio.fmt(sup)} > bound {wio.fmt(bound.total)}")
    for trial in range(args.trials):
        rng = np.random.default_rng([args.seed, trial, 2])
        x, y = _jittered_pair(rng, int(rng.integers(3, 9)))
        r, s = linear_radii(x), linear_radii(y)
        report = verify_diagram_stability(x, r, y, s, max_dim=1)
        for dim, dist, ok in report.distances:
            lines.append(
                f"diagram\t{trial}\t{dim}\t{wio.fmt(dist)}\t"
                f"{wio.fmt(report.bound.total)}\t{int(ok)}"
            )
            if not ok:
                failures.append(
                    f"diagram trial {trial} dim {dim}: d_B {wio.fmt(dist)} > "
                    f"bound {wio.fmt(report.bound.total)}"
                )
    text = "\n".join(lines)
    if failures:
        text += "\nVIOLATIONS:\n" + "\n".join(failures)
        _emit(text, args.out)
        return EXIT_AUDIT_FAILURE
    text += f"\nall {args.trials} entry-bound and {args.trials} diagram-bound trials hold"
    _emit(text, args.out)
    return EXIT_OK


def _cmd_mnist(args) -> int:
    if args.limit is not None:
        _positive("integer", "--limit", args.limit)
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    cfg = MnistConfig(
        max_dim=args.max_dim, t_max=args.t_max, simplex_cap=args.cap, threads=threads
    )
    images = load_digits_csv(args.digits, limit=args.limit)
    if not images:
        raise ValueError(f"{args.digits}: no data rows")
    result = evaluate(images, args.mode, cfg)
    print(result.report_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(result.report_tsv() + "\n")
    if args.log:
        with open(args.log, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(result.predictions_tsv() + "\n")
    if args.figures:
        from . import plots

        os.makedirs(args.figures, exist_ok=True)
        plots.save_confusion_figure(
            result.confusion, args.mode, os.path.join(args.figures, f"confusion_{args.mode}.png")
        )
        plots.save_metrics_figure(
            result.confusion, args.mode, os.path.join(args.figures, f"metrics_{args.mode}.png")
        )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
