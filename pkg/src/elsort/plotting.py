"""Figure rendering for run reports and benchmark sweeps.

Figures are written next to the CSV/JSON output; nothing here is needed to
sort. The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .instrument import RunReport  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}

ALGO_COLORS = {"elsar": "#1f77b4", "mergesort": "#d62728"}


def _save(fig, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_phase_breakdown(report: RunReport, path: str | os.PathLike) -> Path:
    """Share of worker time spent in each phase, one horizontal stacked bar."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 1.8))
        total = sum(report.phase_seconds.values()) or 1.0
        left = 0.0
        cmap = plt.get_cmap("tab10")
        for k, (phase, secs) in enumerate(report.phase_seconds.items()):
            share = secs / total
            ax.barh(0, share, left=left, color=cmap(k), label=f"{phase} {share:.1%}")
            left += share
        ax.set_xlim(0, 1)
        ax.set_yticks([])
        ax.set_xlabel("share of worker time")
        ax.set_title(f"{report.algorithm}: {report.records} records")
        ax.legend(ncol=3, loc="upper center", bbox_to_anchor=(0.5, -0.45), frameon=False)
        return _save(fig, path)


def plot_io_load(reports: Sequence[RunReport], path: str | os.PathLike) -> Path:
    """Bytes read plus written, as a multiple of the input size, per run."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 3))
        labels = [f"{r.algorithm}\n{r.records}" for r in reports]
        reads = [r.total_read / max(r.input_bytes, 1) for r in reports]
        writes = [r.total_written / max(r.input_bytes, 1) for r in reports]
        ax.bar(labels, reads, color="#7f7f7f", label="read")
        ax.bar(labels, writes, bottom=reads, color="#bcbd22", label="written")
        ax.axhline(4.0, ls="--", lw=0.8, color="k")
        ax.set_ylabel("I/O load / input size")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_sweep(rows: Sequence[dict], path: str | os.PathLike) -> Path:
    """Sorting rate against input size, one line per algorithm and skew."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        series: dict[tuple[str, int], list[tuple[int, float]]] = {}
        for row in rows:
            secs = float(row["seconds"])
            rate = int(row["records"]) * 100 / secs / 1e6 if secs > 0 else 0.0
            series.setdefault((row["algorithm"], int(row["skew"])), []).append((int(row["records"]), rate))
        for (algo, skew), pts in sorted(series.items()):
            pts.sort()
            ax.plot(
                [p[0] for p in pts],
                [p[1] for p in pts],
                marker="o",
                ls="--" if skew else "-",
                color=ALGO_COLORS.get(algo),
                label=f"{algo} ({'skewed' if skew else 'uniform'})",
            )
        ax.set_xscale("log")
        ax.set_xlabel("records")
        ax.set_ylabel("sorting rate (MB/s)")
        ax.legend(frameon=False)
        return _save(fig, path)
