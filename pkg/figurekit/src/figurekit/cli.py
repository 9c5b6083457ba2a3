"""gpf-fig: render paper-style figures from a completed run directory.

    gpf-fig --run <dir> --figure <fig1..fig8> --out <path> [--format png|pdf]
"""

import argparse
import sys

from .figures import FigureSpec, render, RENDERERS
from .formats import FormatError


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gpf-fig",
                                     description=__doc__.strip().splitlines()[0])
    parser.add_argument("--run", required=True, help="run directory")
    parser.add_argument("--figure", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", default="png", choices=("png", "pdf"))
    args = parser.parse_args(argv)

    spec = FigureSpec(figure=args.figure, run_dir=args.run, out_path=args.out,
                      image_format=args.format)
    try:
        report = render(spec)
    except FormatError as exc:
        print(f"unreadable input: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4

    for path in report.written:
        print(f"wrote {path}")
    for panel, why in report.skipped:
        print(f"skipped panel {panel}: {why}")
    if not report.ok():
        print("no panels could be rendered", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
