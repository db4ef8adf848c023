"""Command-line front end.

    anglecone angle   --space euclid2.json --p 1,0 --x 0,0 --q 0,1
    anglecone scan    --space sphere.json --p 1,0,0 --q 0,0.6,0.8 --n 1000 --out scan.csv
    anglecone verify  --space linf2.json

Exit codes: 0 success, 1 operational error, 2 degenerate input.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .angle import DEGENERATE_TOL, TAU, angle_cone, homothety_check
from .calculus import EpsSchedule, SlopeOptions, distance_field, pairing, slope
from .errors import AngleConeError, DegenerateInputError
from .geodesics import compare_cone_vs_honda, honda_angle, honda_ladder
from .mmscan import scan_equivalence, scan_single_valuedness, scan_symmetry, symmetry_passes
from .spaces import load_space
from .verify import run_suite

EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are operational errors (exit 1); 2 is reserved for degenerate input
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_point(text: str | None, space, name: str):
    if text is None:
        raise AngleConeError(f"--{name} is required")
    text = text.strip()
    try:
        if space.is_graph:
            return space.check_point(int(text))
        return space.check_point(np.array([float(v) for v in text.split(",")]))
    except ValueError as exc:
        raise AngleConeError(f"cannot parse --{name} {text!r}: {exc}") from None


def parse_triple(args, space):
    """p and x first, so a degenerate pair is reported even without q."""
    p, x = parse_point(args.p, space, "p"), parse_point(args.x, space, "x")
    if space.distance(x, p) <= DEGENERATE_TOL:
        raise DegenerateInputError("x coincides with p")
    q = parse_point(args.q, space, "q")
    if space.distance(x, q) <= DEGENERATE_TOL:
        raise DegenerateInputError("x coincides with q")
    return p, x, q


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _positive(kind=float):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return conv


def _factor(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"factor must lie in (0, 1), got {s}")
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _configs(args):
    sched = EpsSchedule(args.eps_max, args.eps_min, args.eps_factor)
    opts = SlopeOptions(dirs=args.dirs, t_max=args.t_max, t_min=args.t_min, scale_r=args.scale_r,
                        seed=args.seed)
    return sched, opts


def _header(args, space, sched, opts) -> dict:
    return {
        "tool": "anglecone",
        "version": __version__,
        "command": args.command,
        "space": space.to_config(),
        "settings": {**opts.settings(), "eps_max": sched.eps_max, "eps_min": sched.eps_min,
                     "eps_factor": sched.factor, "eps_ladder": sched.ladder(), "t_ladder": opts.t_ladder(),
                     "honda_t_ladder": honda_ladder(), "tau": args.tau},
    }


def _point_out(a):
    return int(a) if isinstance(a, (int, np.integer)) else [float(v) for v in a]


def _kv_csv(d: dict) -> str:
    flat = {}

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else str(k), v[k])
        elif isinstance(v, (list, tuple)):
            flat[prefix] = " ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        else:
            flat[prefix] = repr(v) if isinstance(v, float) else str(v)

    walk("", _jsonable(d))
    lines = ["key,value"] + [f"{k},{v}" for k, v in flat.items()]
    return "\n".join(lines) + "\n"


def _emit(args, report: dict) -> None:
    text = _kv_csv(report) if args.format == "csv" else dumps(report)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_angle(args, space, sched, opts):
    p, x, q = parse_triple(args, space)
    cone = angle_cone(space, p, x, q, sched, opts)
    out = {**_header(args, space, sched, opts), "p": _point_out(p), "x": _point_out(x), "q": _point_out(q),
           "cone": cone.to_dict()}
    if cone.pairing is not None:
        out["pairing"] = cone.pairing.to_dict()
    _emit(args, out)
    return EXIT_OK


def cmd_pairing(args, space, sched, opts):
    p, x, q = parse_triple(args, space)
    pe = pairing(space, distance_field(p), distance_field(q), x, sched, opts)
    _emit(args, {**_header(args, space, sched, opts), "p": _point_out(p), "x": _point_out(x),
                 "q": _point_out(q), "pairing": pe.to_dict()})
    return EXIT_OK


def cmd_slope(args, space, sched, opts):
    p, x = parse_point(args.p, space, "p"), parse_point(args.x, space, "x")
    est = slope(space, distance_field(p), x, opts)
    _emit(args, {**_header(args, space, sched, opts), "p": _point_out(p), "x": _point_out(x),
                 "slope": est.to_dict()})
    return EXIT_OK


def cmd_honda(args, space, sched, opts):
    p, x, q = parse_triple(args, space)
    est = honda_angle(space, p, x, q, branches="all")
    _emit(args, {**_header(args, space, sched, opts), "p": _point_out(p), "x": _point_out(x),
                 "q": _point_out(q), "honda": est.to_dict()})
    return EXIT_OK


def cmd_compare(args, space, sched, opts):
    p, x, q = parse_triple(args, space)
    cmp = compare_cone_vs_honda(space, p, x, q, sched, None, opts, tol=args.tol)
    if args.format == "csv":
        text = ",".join(cmp.CSV_HEADER) + "\n" + ",".join(cmp.csv_row()) + "\n"
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
    else:
        _emit(args, {**_header(args, space, sched, opts), "comparison": cmp.to_dict(), "tolerance": args.tol})
    return EXIT_OK


def _region(args, space):
    if not args.box:
        return None
    lo, hi = (float(v) for v in args.box.split(","))
    d = space.dimension
    return np.full(d, lo), np.full(d, hi)


def cmd_scan(args, space, sched, opts):
    if args.n is None or args.n < 1:
        raise AngleConeError("scan needs --n >= 1")
    p, q = parse_point(args.p, space, "p"), parse_point(args.q, space, "q")
    kw = dict(sched=sched, opts=opts, seed=args.seed, tau=args.tau, region=_region(args, space))
    if args.mode == "single":
        rep = scan_single_valuedness(space, p, q, args.n, **kw)
    elif args.mode == "symmetry":
        rep = scan_symmetry(space, p, q, args.n, **kw)
    else:
        rep = scan_equivalence(space, p, q, args.n, tol=args.tol, **kw)
    summary = {**_header(args, space, sched, opts), "mode": args.mode, "p": _point_out(p),
               "q": _point_out(q), "summary": rep.summary()}
    if rep.hilbertian and args.mode == "symmetry":
        summary["symmetry_passes"] = symmetry_passes(rep, args.tol)
    if args.out:
        base = Path(args.out)
        write_atomic(base.with_suffix(".csv"), rep.csv_text())
        write_atomic(base.with_suffix(".json"), dumps(summary))
    else:
        sys.stdout.write(rep.csv_text() if args.format == "csv" else dumps(summary))
    return EXIT_OK


def cmd_verify(args, space, sched, opts):
    results = run_suite(space, sched, opts, tau=args.tau, seed=args.seed)
    for r in results:
        print(f"{r.status.upper():7s} {r.name}: {r.detail}")
    if args.out:
        write_atomic(args.out, dumps({**_header(args, space, sched, opts),
                                      "results": [r.to_dict() for r in results]}))
    failed = [r for r in results if r.status == "fail"]
    print(f"{len(results) - len(failed)}/{len(results)} passed or skipped; {len(failed)} failed")
    return EXIT_ERROR if failed else EXIT_OK


def cmd_rescale_check(args, space, sched, opts):
    p, x, q = parse_triple(args, space)
    res = homothety_check(space, args.lam, p, x, q, sched, opts)
    _emit(args, {**_header(args, space, sched, opts), "p": _point_out(p), "x": _point_out(x),
                 "q": _point_out(q), "homothety": res})
    return EXIT_OK if res["passed"] else EXIT_ERROR


COMMANDS = {
    "angle": cmd_angle,
    "pairing": cmd_pairing,
    "slope": cmd_slope,
    "honda": cmd_honda,
    "compare": cmd_compare,
    "scan": cmd_scan,
    "verify": cmd_verify,
    "rescale-check": cmd_rescale_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", required=True, help="space config (.json) or edge list (.csv)")
    for name in ("p", "x", "q"):
        common.add_argument(f"--{name}", help="comma-separated coordinates or a node id")
    common.add_argument("--eps-max", type=_positive(), default=EpsSchedule.eps_max)
    common.add_argument("--eps-min", type=_positive(), default=EpsSchedule.eps_min)
    common.add_argument("--eps-factor", type=_factor, default=EpsSchedule.factor)
    common.add_argument("--t-max", type=_positive(), default=SlopeOptions.t_max)
    common.add_argument("--t-min", type=_positive(), default=SlopeOptions.t_min)
    common.add_argument("--dirs", type=_positive(int), default=SlopeOptions.dirs)
    common.add_argument("--scale-r", type=_positive(), default=None, help="neighbourhood radius (graphs)")
    common.add_argument("--tau", type=_positive(), default=TAU, help="single-valuedness threshold")
    common.add_argument("--n", type=int, default=None, help="number of samples (scan)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--lambda", dest="lam", type=_positive(), default=2.0, help="rescaling factor")
    common.add_argument("--tol", type=_positive(), default=1e-3, help="comparison tolerance")
    common.add_argument("--mode", choices=("single", "symmetry", "equivalence"), default="single")
    common.add_argument("--box", default=None, help="scan box lo,hi for normed spaces (default 0,1)")
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="json")

    parser = _Parser(prog="anglecone", description="Angle cones on metric spaces.")
    parser.add_argument("--version", action="version", version=f"anglecone {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scan" and (args.n is None or args.n < 1):
        parser.print_usage(sys.stderr)
        print("anglecone scan: error: --n must be a positive integer", file=sys.stderr)
        return EXIT_ERROR
    try:
        space = load_space(args.space)
        sched, opts = _configs(args)
        return COMMANDS[args.command](args, space, sched, opts)
    except DegenerateInputError as exc:
        print(f"degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (AngleConeError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
