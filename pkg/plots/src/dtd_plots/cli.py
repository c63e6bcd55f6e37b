"""Command line: dtd-plot <kind> --in <file> [--in2 <file>] --out <image>."""
import argparse
import sys

from .figures import FIGURE_KINDS, PlotSpec, render
from .schema import SchemaError


def _parse_window(text):
    if text.lower() in ("none", "off"):
        return None
    try:
        a, b = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected 'start,end' day pair, got {text!r}") from None
    return (a, b)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="dtd-plot",
        description="Render figures from misinfo-dtd output files.")
    ap.add_argument("kind", choices=sorted(FIGURE_KINDS))
    ap.add_argument("--in", dest="infile", required=True,
                    help="daily.csv or sweep.csv depending on kind")
    ap.add_argument("--in2", dest="infile2", default=None,
                    help="second daily.csv to overlay (timeseries kind)")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--window", type=_parse_window, default=(51, 100),
                    metavar="A,B",
                    help="attack-day shading, 'none' to disable (default 51,100)")
    ap.add_argument("--raw", action="store_true",
                    help="plot raw TSTT instead of the smoothed series")
    ap.add_argument("--dpi", type=int, default=150)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(kind=args.kind, infile=args.infile, infile2=args.infile2,
                    outfile=args.out, window=args.window,
                    smoothed=not args.raw, dpi=args.dpi)
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
