"""Figure rendering for the analyze pipeline.

Each function writes one PNG next to the CSVs the pipeline emits: the two
group learning curves, the accumulated difference with its per-index
p-values on a twin axis, and the 2x2 talent-versus-performance scatter.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import (
    GROUP_INTERACTIVE,
    GROUP_STATIC,
    SERIES_LENGTH,
    GroupStats,
    SubjectSeries,
    talent_scatter,
)

GROUP_COLORS = {GROUP_INTERACTIVE: "tab:blue", GROUP_STATIC: "tab:red"}


def save_learning_curves(stats: GroupStats, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    indices = range(1, SERIES_LENGTH + 1)
    for group in (GROUP_INTERACTIVE, GROUP_STATIC):
        ax.plot(indices, stats.curves[group], color=GROUP_COLORS[group], label=group)
    ax.set_xlabel("exam index")
    ax.set_ylabel("mean exam score")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.set_title("Average exam score per group")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_accumulated_difference(stats: GroupStats, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    indices = range(1, SERIES_LENGTH + 1)
    ax.plot(indices, stats.accumulated, color="tab:green", label="accumulated difference")
    ax.set_xlabel("exam index")
    ax.set_ylabel("accumulated score difference", color="tab:green")
    twin = ax.twinx()
    twin.plot(indices, stats.p_values, color="tab:orange", label="p-value")
    twin.set_ylabel("t-test p-value", color="tab:orange")
    twin.set_ylim(0, 1.05)
    ax.set_title("Accumulated score difference with p-value")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_talent_scatter(series: Sequence[SubjectSeries], path: str | Path) -> Path:
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), sharey="row")
    panels = [
        ("first", "full", "1st exam vs full curriculum"),
        ("first-two", "full", "1st+2nd exams vs full curriculum"),
        ("first", "first-half", "1st exam vs first half"),
        ("first-two", "first-half", "1st+2nd exams vs first half"),
    ]
    for ax, (talent, span, title) in zip(axes.flat, panels):
        points = talent_scatter(series, talent, span)
        for group in (GROUP_INTERACTIVE, GROUP_STATIC):
            xs = [p.x for p in points if p.group == group]
            ys = [p.y for p in points if p.group == group]
            ax.scatter(xs, ys, color=GROUP_COLORS[group], label=group, alpha=0.8)
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("initial talent")
        ax.set_ylabel("accumulated score")
    axes.flat[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
