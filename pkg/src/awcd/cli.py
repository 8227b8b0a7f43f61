"""Command-line interface: ``awcd {denoise,curvature,hist,bench}``.

Exit codes: 0 ok, 1 benchmark cell failed, 2 parse/IO error,
3 bad parameter, 4 degenerate histogram without ``--rho0``.
"""

import argparse
import csv
import io
import sys
from pathlib import Path

from . import bench
from .cloud import build_index, local_statistics
from .denoise import DEFAULT_K, awcd, curvature_field, ror, sor
from .errors import DegenerateHistogramError, EmptyInputError, ParameterError, ParseError
from .histogram import build_histogram, mark_curvature
from .io import _atomic_write, load_cloud, load_labels, save_classified, save_cloud

EXIT_OK = 0
EXIT_CELL_FAILED = 1
EXIT_IO = 2
EXIT_PARAM = 3
EXIT_DEGENERATE = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_neighborhood(p):
    p.add_argument("-k", type=_positive_int, default=DEFAULT_K, help="neighbors per point (default 30)")


def build_parser():
    parser = argparse.ArgumentParser(prog="awcd", description="Point-cloud denoising with Wasserstein curvature.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="remove outliers and write the cleaned cloud")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--method", choices=("awcd", "ror", "sor"), default="awcd")
    _add_neighborhood(p)
    p.add_argument("--radius", type=float, help="ROR neighborhood radius d")
    p.add_argument("--min-count", type=int, help="ROR minimum neighbor count (self included)")
    p.add_argument("--rho0", type=float, help="manual mark curvature for AWCD")
    p.add_argument("--regular-term", action="store_true", help="AWCD: also require the one-sigma test")
    p.add_argument("--bins", type=_positive_int)
    p.add_argument("--truth", help="ground-truth labels, one 'real'/'noise' per line")
    p.add_argument("--classified", help="write a colored PLY of the classification")

    p = sub.add_parser("curvature", help="per-point scalar curvature as CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_neighborhood(p)

    p = sub.add_parser("hist", help="curvature histogram CSV and mark-curvature JSON")
    p.add_argument("input")
    p.add_argument("--csv", required=True, dest="csv_out")
    p.add_argument("--json", required=True, dest="json_out")
    _add_neighborhood(p)
    p.add_argument("--bins", type=_positive_int)

    p = sub.add_parser("bench", help="run the TPR/FPR/SNRG benchmark")
    p.add_argument("datasets", nargs="*", help="clean clouds (.xyz/.ply)")
    p.add_argument("--sphere", type=_positive_int, metavar="N",
                   help="add a synthetic sphere-surface dataset with N points")
    p.add_argument("--method", action="append", dest="methods", metavar="SPEC",
                   help="method[:key=value,...], e.g. ror:radius=0.1,min_count=5 (repeatable)")
    p.add_argument("--snr", action="append", type=float, dest="snrs")
    p.add_argument("--seed", action="append", type=int, dest="seeds")
    p.add_argument("--size", action="append", type=_positive_int, dest="sizes")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--no-timing", action="store_true", help="omit wall_ms for byte-reproducible reports")
    p.add_argument("--workers", type=_positive_int, help=f"threads (default ${bench.THREADS_ENV} or 1)")
    return parser


def parse_method(spec):
    """``"ror:radius=0.1,min_count=5"`` -> ``Method("ror", radius=0.1, min_count=5)``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"bad method parameter {item!r}")
        key = key.strip().replace("-", "_")
        if key in ("k", "min_count", "bins"):
            params[key] = int(value)
        elif key in ("radius", "rho0"):
            params[key] = float(value)
        elif key == "regular_term":
            params[key] = value.strip().lower() in ("1", "true", "yes")
        else:
            raise ParameterError(f"unknown parameter {key!r} for {name}")
    if name == "ror" and not {"radius", "min_count"} <= params.keys():
        raise ParameterError("ror needs radius=... and min_count=...")
    return bench.Method(name.strip(), **params)


def _validate_denoise(args):
    if args.method == "ror":
        if args.radius is None or args.min_count is None:
            raise ParameterError("--method ror needs --radius and --min-count")
        if not args.radius > 0:
            raise ParameterError("--radius must be > 0")
        if args.min_count < 1:
            raise ParameterError("--min-count must be >= 1")


def _load(path):
    if not Path(path).exists():
        raise CliError(f"input not found: {path}", EXIT_IO)
    return load_cloud(path)


def _check_k(k, cloud):
    if k > len(cloud) - 1:
        raise ParameterError(f"-k {k} needs at least {k + 1} points, cloud has {len(cloud)}")


def _workers():
    return bench.default_workers()


def cmd_denoise(args, out):
    _validate_denoise(args)
    cloud = _load(args.input)
    truth = load_labels(args.truth) if args.truth else cloud.labels
    if truth is not None and len(truth) != len(cloud):
        raise ParameterError(f"{len(truth)} labels for {len(cloud)} points")
    index = build_index(cloud)
    if args.method == "ror":
        result = ror(cloud, index, args.radius, args.min_count)
    else:
        _check_k(args.k, cloud)
        stats = local_statistics(cloud, index, args.k, workers=_workers())
        if args.method == "sor":
            result = sor(cloud, index, args.k, stats=stats)
        else:
            result = awcd(cloud, index, args.k, rho0=args.rho0, regular_term=args.regular_term,
                          bins=args.bins, stats=stats)
    save_cloud(cloud.subset(result.kept), args.output)
    if args.classified:
        save_classified(cloud, result.kept, args.classified, truth=truth)
    line = f"kept {result.n_kept} removed {len(cloud) - result.n_kept} method {args.method}"
    if args.method == "awcd":
        how = result.mark.method if result.mark is not None else "manual"
        line += f" rho0 {result.params['rho0']:.17g} selection {how}"
    print(line, file=out)
    return EXIT_OK


def cmd_curvature(args, out):
    cloud = _load(args.input)
    _check_k(args.k, cloud)
    index = build_index(cloud)
    fld = curvature_field(cloud, index, args.k,
                          stats=local_statistics(cloud, index, args.k, workers=_workers()))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "rho", "degenerate_flag"])
    for i, (v, f) in enumerate(zip(fld.values, fld.degenerate)):
        writer.writerow([i, f"{v:.17g}", int(f)])
    _atomic_write(args.output, buf.getvalue().encode())
    print(f"{len(cloud)} curvatures, {int(fld.degenerate.sum())} degenerate", file=out)
    return EXIT_OK


def cmd_hist(args, out):
    cloud = _load(args.input)
    _check_k(args.k, cloud)
    index = build_index(cloud)
    fld = curvature_field(cloud, index, args.k,
                          stats=local_statistics(cloud, index, args.k, workers=_workers()))
    hist = build_histogram(fld.values, bins=args.bins)
    mark = mark_curvature(hist)
    _atomic_write(args.csv_out, hist.to_csv().encode())
    _atomic_write(args.json_out, (mark.to_json() + "\n").encode())
    print(f"rho0 {mark.value:.17g} selection {mark.method} bins {len(hist.counts)}", file=out)
    return EXIT_OK


def cmd_bench(args, out):
    methods = [parse_method(m) for m in (args.methods or ["awcd", "sor"])]
    if not args.datasets and not args.sphere:
        raise ParameterError("give dataset files or --sphere N")
    datasets = {}
    for path in args.datasets:
        datasets[Path(path).stem] = _load(path)
    if args.sphere:
        datasets[f"sphere{args.sphere}"] = bench.sphere_cloud(args.sphere, seed=0)
    report = bench.run_benchmark(
        datasets, methods, args.snrs or [1.0], args.seeds or [0], sizes=args.sizes,
        workers=args.workers or _workers(), timing=not args.no_timing,
    )
    text = report.to_csv() if args.format == "csv" else report.to_json() + "\n"
    _atomic_write(args.output, text.encode())
    bad = sum(1 for r in report.rows if r.error)
    print(f"{len(report.rows)} cells, {bad} failed", file=out)
    return EXIT_CELL_FAILED if bad else EXIT_OK


COMMANDS = {"denoise": cmd_denoise, "curvature": cmd_curvature, "hist": cmd_hist, "bench": cmd_bench}


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(f"awcd: {exc}", file=err)
        return exc.code
    except (ParseError, EmptyInputError, OSError) as exc:
        print(f"awcd: {exc}", file=err)
        return EXIT_IO
    except DegenerateHistogramError as exc:
        print(f"awcd: {exc}", file=err)
        return EXIT_DEGENERATE
    except ParameterError as exc:
        print(f"awcd: {exc}", file=err)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
