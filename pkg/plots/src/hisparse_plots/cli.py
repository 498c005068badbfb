"""plot-detection: sweep CSV in, detection figure out."""

import argparse
import os
import sys

import matplotlib.pyplot as plt

from .figure import render_detection_figure
from .sweep_data import SweepDataError, read_sweep_csv


def build_parser():
    p = argparse.ArgumentParser(
        prog="plot-detection",
        description="Render a hisparse detection sweep CSV as a figure.",
    )
    p.add_argument("--input", required=True, help="sweep CSV path")
    p.add_argument("--output", required=True, help="image path (PNG at 150 dpi)")
    p.add_argument("--svg", action="store_true",
                   help="also write an SVG next to the output")
    p.add_argument("--dpi", type=int, default=150)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rows = read_sweep_csv(args.input)
        fig, _ = render_detection_figure(rows, args.output, dpi=args.dpi)
        if args.svg:
            fig.savefig(os.path.splitext(args.output)[0] + ".svg")
        plt.close(fig)
    except FileNotFoundError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 1
    except SweepDataError as exc:
        print(f"data-error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
