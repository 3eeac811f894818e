"""Power-curve figures: rejection rate vs the sweep parameter."""

from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .frame import ResultFrame


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", text)


def build_power_figure(frame: ResultFrame, scenario: str, param: str):
    """Assemble one power figure; the caller owns (and closes) the figure."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    alpha_level = None
    for est in frame.estimators():
        rows = [r for r in frame.select(scenario, param, est) if r["reject_rate"] is not None]
        if not rows:
            continue
        rows.sort(key=lambda r: r["param_value"])
        xs = [r["param_value"] for r in rows]
        ys = [r["reject_rate"] for r in rows]
        ses = [r["se"] or 0.0 for r in rows]
        ax.plot(xs, ys, marker="o", markersize=3.5, linewidth=1.4, label=est)
        lo = [max(0.0, y - 2 * s) for y, s in zip(ys, ses)]
        hi = [min(1.0, y + 2 * s) for y, s in zip(ys, ses)]
        ax.fill_between(xs, lo, hi, alpha=0.15)
        if alpha_level is None and rows[0]["alpha"] is not None:
            alpha_level = rows[0]["alpha"]
    if alpha_level is not None:
        ax.axhline(alpha_level, color="gray", linestyle="--", linewidth=1.0,
                   label=f"level {alpha_level:g}")
    ax.set_xlabel(param)
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{scenario}: power vs {param}")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.25)
    return fig, ax


def plot_power(csv_path, out_dir) -> list[Path]:
    """One figure per (scenario, sweep parameter): one line per estimator.

    Each curve carries a +/- 2 s.e. band and the nominal level is drawn as
    a dashed reference line. Returns the written image paths.
    """
    frame = ResultFrame.read_csv(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for scenario, param in frame.groups():
        fig, _ = build_power_figure(frame, scenario, param)
        path = out_dir / f"power_{_slug(scenario)}_{_slug(param)}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    return written
