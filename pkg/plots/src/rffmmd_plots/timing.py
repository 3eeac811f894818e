"""Timing figures and tables: wall-clock per statistic evaluation vs size."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .frame import ResultFrame, SchemaError


def fit_loglog_slope(sizes, times) -> float:
    """Least-squares slope of log(time) against log(size)."""
    xs = np.log(np.asarray(sizes, dtype=float))
    ys = np.log(np.asarray(times, dtype=float))
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def timing_series(frame: ResultFrame) -> dict:
    """estimator -> (sizes, times), sorted by size; rows without times dropped."""
    series = {}
    for est in frame.estimators():
        rows = [r for r in frame.rows if r["estimator"] == est and r["mean_time_s"] is not None]
        rows.sort(key=lambda r: r["param_value"])
        if rows:
            series[est] = ([r["param_value"] for r in rows], [r["mean_time_s"] for r in rows])
    return series


def build_timing_figure(series: dict):
    """Log-log figure with the fitted slope annotated in each legend entry."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    slopes = {}
    for est, (sizes, times) in series.items():
        label = est
        if len(sizes) >= 2:
            slopes[est] = fit_loglog_slope(sizes, times)
            label = f"{est} (slope {slopes[est]:.3f})"
        ax.loglog(sizes, times, marker="o", markersize=4, linewidth=1.4, label=label)
    ax.set_xlabel("sample size n")
    ax.set_ylabel("seconds per statistic evaluation")
    ax.set_title("computational cost scaling")
    ax.grid(alpha=0.25, which="both")
    ax.legend(fontsize=8)
    return fig, ax, slopes


def plot_timing(csv_path, out_dir) -> tuple[Path, Path]:
    """Log-log time-vs-size figure plus a sizes x estimators text table.

    The fitted log-log slope of each estimator is annotated in the legend
    and echoed as comment lines at the top of the table file. Returns
    (figure path, table path).
    """
    frame = ResultFrame.read_csv(csv_path)
    series = timing_series(frame)
    if not series:
        raise SchemaError(f"{csv_path}: no rows with mean_time_s")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, _, slopes = build_timing_figure(series)
    fig_path = out_dir / "timing.png"
    fig.savefig(fig_path, dpi=130)
    plt.close(fig)

    table_path = out_dir / "timing_table.txt"
    table_path.write_text(render_timing_table(series, slopes))
    return fig_path, table_path


def render_timing_table(series: dict, slopes: dict | None = None) -> str:
    """Fixed-width table, one row per size and one column per estimator."""
    all_sizes = sorted({s for sizes, _ in series.values() for s in sizes})
    names = list(series)
    widths = [max(11, len(n) + 2) for n in names]
    lines = []
    for est, slope in (slopes or {}).items():
        lines.append(f"# loglog-slope {est}: {slope:.6f}")
    header = "size".rjust(8) + "".join(n.rjust(w) for n, w in zip(names, widths))
    lines += [header, "-" * len(header)]
    lookup = {
        est: {s: t for s, t in zip(sizes, times)} for est, (sizes, times) in series.items()
    }
    for size in all_sizes:
        cells = []
        for est, w in zip(names, widths):
            t = lookup[est].get(size)
            cells.append(("-" if t is None else f"{t:.4f}").rjust(w))
        size_text = f"{size:g}" if not math.isnan(size) else "-"
        lines.append(size_text.rjust(8) + "".join(cells))
    return "\n".join(lines) + "\n"
