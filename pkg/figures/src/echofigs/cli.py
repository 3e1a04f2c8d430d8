"""Command-line figure rendering: one entry point per kind plus a generic one."""

from __future__ import annotations

import argparse
import sys

from .reading import SchemaError
from .render import KINDS, PlotSpec, render


def build_parser(fixed_kind: str | None) -> argparse.ArgumentParser:
    prog = "echofig" if fixed_kind is None else f"echofig-{fixed_kind}"
    parser = argparse.ArgumentParser(prog=prog, description="Render a simulation figure")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="FILE", help="input CSV (repeatable)")
    parser.add_argument("--out", required=True, help="output image path (.png)")
    if fixed_kind is None:
        parser.add_argument("--kind", required=True, choices=KINDS)
    else:
        parser.add_argument("--kind", default=fixed_kind, choices=KINDS)
    parser.add_argument("--xlim", nargs=2, type=float, default=None)
    parser.add_argument("--ylim", nargs=2, type=float, default=None)
    parser.add_argument("--title", default=None)
    parser.add_argument("--column", default=None,
                        help="snapshot kind: which profile column to draw")
    return parser


def main(argv: list[str] | None = None, fixed_kind: str | None = None) -> int:
    parser = build_parser(fixed_kind)
    args = parser.parse_args(argv)
    options = {}
    if args.column:
        options["column"] = args.column
    spec = PlotSpec(inputs=args.inputs, kind=args.kind, output=args.out,
                    xlim=tuple(args.xlim) if args.xlim else None,
                    ylim=tuple(args.ylim) if args.ylim else None,
                    title=args.title, options=options)
    try:
        path = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def main_trace(argv=None):
    return main(argv, fixed_kind="trace")


def main_snapshot(argv=None):
    return main(argv, fixed_kind="snapshot")


def main_dicke(argv=None):
    return main(argv, fixed_kind="dicke-space")


def main_sweep(argv=None):
    return main(argv, fixed_kind="sweep")


def main_spectrum(argv=None):
    return main(argv, fixed_kind="spectrum")


if __name__ == "__main__":
    sys.exit(main())
