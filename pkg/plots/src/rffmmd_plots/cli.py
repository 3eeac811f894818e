"""Console entry points: plot-power <csv> <outdir>, plot-timing <csv> <outdir>."""

from __future__ import annotations

import argparse

from .power import plot_power
from .timing import plot_timing


def main_power(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-power", description="Render power curves from a result CSV"
    )
    parser.add_argument("csv")
    parser.add_argument("outdir")
    args = parser.parse_args(argv)
    for path in plot_power(args.csv, args.outdir):
        print(f"wrote {path}")
    return 0


def main_timing(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-timing", description="Render the timing figure and table from a result CSV"
    )
    parser.add_argument("csv")
    parser.add_argument("outdir")
    args = parser.parse_args(argv)
    for path in plot_timing(args.csv, args.outdir):
        print(f"wrote {path}")
    return 0
