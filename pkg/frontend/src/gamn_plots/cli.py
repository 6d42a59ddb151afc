"""gamn-plot: render an experiment CSV as a vector figure."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, PlotDataError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamn-plot", description="Render gamn experiment CSVs as figures")
    parser.add_argument("--kind", required=True, choices=sorted(KINDS))
    parser.add_argument("--in", dest="csv_path", required=True, help="input CSV")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output figure (.svg or .pdf)")
    parser.add_argument("--variants", default=None,
                        help="comma list; default plots every variant present")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    variants = None
    if args.variants:
        variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    spec = FigureSpec(csv_path=args.csv_path, kind=args.kind,
                      out_path=args.out_path, variants=variants)
    try:
        out = render(spec)
    except (PlotDataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
