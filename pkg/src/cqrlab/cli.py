"""Command-line front end.

Exit codes: 0 all checks pass, 1 some check fails, 2 input error,
3 numerical failure (singular metric, domain error).
"""

from __future__ import annotations

import argparse
import sys

from . import catalog, metricio, report
from .errors import CQRLabError, NumericalError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--metric", help="metric json file")
    src.add_argument("--builtin", help='catalog name, optionally with arguments: "schwarzschild(M=2)"')


def _add_config(p):
    p.add_argument("--point", action="append", help='explicit point "u=0.3,v=0,..." (repeatable)')
    p.add_argument("--grid", type=int, default=5, help="number of quasi-random points in the sample box")
    p.add_argument("--order", type=int, choices=(3, 4), default=3, help="metric jet order")
    p.add_argument("--tol", type=float, default=report.AnalysisConfig.tol)
    p.add_argument("--checks", help="comma-separated subset of checks")
    p.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
    p.add_argument("--seed", type=int, default=0, help="grid offset and random_poly seed")
    p.add_argument("--fd", action="store_true", help="finite-difference fallback for order-4 checks")
    p.add_argument("--sigma", help="conformal factor expression for the conformal_gradient check")


def build_parser():
    parser = argparse.ArgumentParser(prog="cqrlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full battery")
    _add_source(p)
    _add_config(p)

    p = sub.add_parser("identity", help="run one named identity")
    p.add_argument("name", help=", ".join([*report.IDENTITIES, *report.ALIASES]))
    _add_source(p)
    _add_config(p)

    sub.add_parser("list", help="list catalog metrics")

    p = sub.add_parser("export", help="write a catalog metric as a json file")
    p.add_argument("name")
    p.add_argument("path")
    return parser


def _load_entry(args):
    if args.metric is not None:
        return catalog.entry_for_spec(metricio.load(args.metric))
    name = args.builtin
    if name.strip() == "random_poly" and args.seed:
        name = f"random_poly({args.seed})"
    return catalog.builtin(name)


def _config(args, spec):
    points = None
    if args.point:
        points = tuple(report.parse_point(text, spec) for text in args.point)
    checks = None
    if args.checks:
        checks = frozenset(c.strip() for c in args.checks.split(",") if c.strip())
    return report.AnalysisConfig(
        tol=args.tol,
        order=args.order,
        points=points,
        grid=args.grid,
        checks=checks,
        fmt=args.fmt,
        seed=args.seed,
        fd=args.fd,
        sigma=args.sigma,
    )


def _emit(doc, fmt, out):
    out.write(report.to_json(doc) if fmt == "json" else report.to_text(doc))
    return EXIT_OK if doc["worst"]["pass"] else EXIT_FAIL


def run(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "list":
            for name in catalog.names():
                entry = catalog.builtin(name)
                out.write(f"{name:<20} n={entry.spec.dimension}  {entry.note.split('.')[0]}\n")
            return EXIT_OK
        if args.command == "export":
            metricio.save(catalog.builtin(args.name).spec, args.path)
            return EXIT_OK
        entry = _load_entry(args)
        config = _config(args, entry.spec)
        if args.command == "analyze":
            return _emit(report.analyze(entry, config), config.fmt, out)
        return _emit(report.identity_report(args.name, entry, config), config.fmt, out)
    except NumericalError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    except CQRLabError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT


def main():
    sys.exit(run())
