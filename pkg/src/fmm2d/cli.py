"""Command-line harness: dataset generation, evaluation, experiment drivers.

Exit codes: 0 success, 2 bad arguments, 3 degenerate input, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from . import bench, fileio
from .connectivity import build_connectivity, write_lists_csv
from .datasets import KINDS, DistributionSpec, sample_points
from .engine import direct_evaluate, fmm_evaluate, max_rel_error
from .tree import DegenerateInputError, TreeConfig, build_tree

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


def _bool_flag(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _sweep(text: str) -> list[int]:
    """lo:hi or lo:hi:step; two-field form doubles from lo to hi."""
    parts = [int(tok) for tok in text.split(":")]
    if len(parts) == 2:
        lo, hi = parts
        out = []
        while lo <= hi:
            out.append(lo)
            lo *= 2
        return out
    if len(parts) == 3:
        lo, hi, step = parts
        return list(range(lo, hi + 1, step))
    raise argparse.ArgumentTypeError(f"bad sweep spec {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _add_common(sub):
    sub.add_argument("--n", type=int, default=10_000,
                     help="number of generated source points")
    sub.add_argument("--dist", choices=KINDS, default="uniform")
    sub.add_argument("--sigma2", type=float, default=0.01,
                     help="variance of the normal/layer distributions")
    sub.add_argument("--p", type=int, default=17, help="expansion terms")
    sub.add_argument("--nd", type=int, default=35,
                     help="desired sources per finest box")
    sub.add_argument("--theta", type=float, default=0.5,
                     help="separation parameter in (0,1)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--parallel", type=_bool_flag, default=False,
                     metavar="BOOL")
    sub.add_argument("--repeats", type=int, default=bench.DEFAULT_REPEATS,
                     help="timing repetitions after one discarded warm-up")
    sub.add_argument("--out", default="-",
                     help="output CSV path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmm2d",
        description="Adaptive 2-d fast multipole benchmark harness",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    ev = subs.add_parser("evaluate", help="evaluate one potential field")
    _add_common(ev)
    ev.add_argument("--mode", choices=("fmm", "direct", "both"),
                    default="fmm")
    ev.add_argument("--in", dest="infile", default=None,
                    help="point file: 'x y gamma' per line, '#' comments")
    ev.add_argument("--dump-connectivity", default=None,
                    help="write level,target_box,kind,source_box CSV")
    ev.add_argument("--dump-boxes", default=None,
                    help="write level,box,x0,y0,x1,y1 CSV")

    acc = subs.add_parser("accuracy", help="tolerance against direct summation")
    _add_common(acc)

    cal = subs.add_parser("calibrate", help="sweep sources per box")
    _add_common(cal)
    cal.add_argument("--nd-sweep", type=_sweep, default=_sweep("10:100:5"),
                     metavar="LO:HI:STEP")
    cal.add_argument("--p-list", type=_int_list, default=[17],
                     metavar="P1,P2,...")

    brk = subs.add_parser("breakeven", help="FMM vs direct crossover")
    _add_common(brk)
    brk.add_argument("--n-sweep", type=_sweep, default=_sweep("256:131072"),
                     metavar="LO:HI[:STEP]")

    ada = subs.add_parser("adaptivity", help="non-uniform distribution sweep")
    _add_common(ada)
    ada.add_argument("--dists", default="uniform,normal,layer",
                     help="comma-separated distribution kinds")
    ada.add_argument("--skip-tol", action="store_true",
                     help="skip the direct oracle (timing only)")
    return parser


def _emit_benchmark(rows, out):
    fileio.write_benchmark(rows, sys.stdout if out == "-" else out)


def _cmd_evaluate(args) -> int:
    if args.infile is not None:
        points = fileio.read_points(args.infile)
    else:
        points = sample_points(
            DistributionSpec(args.dist, args.sigma2, args.seed), args.n)
    cfg = TreeConfig(n_desired_per_box=args.nd, theta=args.theta,
                     p_terms=args.p)

    if args.dump_connectivity or args.dump_boxes:
        tree = build_tree(points, cfg)
        if args.dump_boxes:
            fileio.write_boxes_csv(tree, args.dump_boxes)
        if args.dump_connectivity:
            write_lists_csv(build_connectivity(tree, cfg.theta),
                            args.dump_connectivity)

    if args.mode == "direct":
        values = direct_evaluate(points,
                                 symmetric=points.evals_alias_sources)
    else:
        values, report = fmm_evaluate(points, cfg, parallel=args.parallel)
        if args.mode == "both":
            exact = direct_evaluate(points,
                                    symmetric=points.evals_alias_sources)
            tol = max_rel_error(values, exact)
            print(f"tol = {tol:.3e}", file=sys.stderr)

    fileio.write_result(values, sys.stdout if args.out == "-" else args.out)
    return EXIT_OK


def _cmd_accuracy(args) -> int:
    rows = bench.run_accuracy(n=args.n, kind=args.dist, sigma2=args.sigma2,
                              p=args.p, nd=args.nd, theta=args.theta,
                              seed=args.seed, repeats=args.repeats,
                              parallel=args.parallel)
    _emit_benchmark(rows, args.out)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    rows = bench.run_calibration(args.nd_sweep, n=args.n, kind=args.dist,
                                 sigma2=args.sigma2, p_values=args.p_list,
                                 theta=args.theta, seed=args.seed,
                                 repeats=args.repeats, parallel=args.parallel)
    _emit_benchmark(rows, args.out)
    return EXIT_OK


def _cmd_breakeven(args) -> int:
    rows = bench.run_breakeven(args.n_sweep, kind=args.dist,
                               sigma2=args.sigma2, p=args.p, nd=args.nd,
                               theta=args.theta, seed=args.seed,
                               repeats=args.repeats, parallel=args.parallel)
    _emit_benchmark(rows, args.out)
    return EXIT_OK


def _cmd_adaptivity(args) -> int:
    kinds = tuple(tok for tok in args.dists.split(",") if tok)
    for kind in kinds:
        if kind not in KINDS:
            raise ValueError(f"unknown distribution kind {kind!r}")
    rows = bench.run_adaptivity(n=args.n, kinds=kinds, sigma2=args.sigma2,
                                p=args.p, nd=args.nd, theta=args.theta,
                                seed=args.seed, repeats=args.repeats,
                                parallel=args.parallel,
                                compute_tol=not args.skip_tol)
    _emit_benchmark(rows, args.out)
    return EXIT_OK


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "accuracy": _cmd_accuracy,
    "calibrate": _cmd_calibrate,
    "breakeven": _cmd_breakeven,
    "adaptivity": _cmd_adaptivity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DegenerateInputError as exc:
        print(f"fmm2d: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"fmm2d: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except OSError as exc:
        print(f"fmm2d: i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
