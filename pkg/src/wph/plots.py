"""Matplotlib figure output for barcodes and classification reports.

Figures are rendered with the Agg backend at fixed size/dpi so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mnist import ConfusionMatrix
from .persistence import PersistenceDiagram

__all__ = ["save_barcode_figure", "save_confusion_figure", "save_metrics_figure"]

_DIM_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]


def save_barcode_figure(dgm: PersistenceDiagram, path, title: str | None = None):
    """Stacked horizontal bars per dimension, essential bars as arrows."""
    bc = dgm.barcode()
    dims = sorted(set(int(d) for d in bc.dims))
    finite = [
        v
        for k in dims
        for bd in bc.in_dim(k)
        for v in bd
        if math.isfinite(v)
    ]
    x_hi = (max(finite) if finite else 1.0) * 1.05 or 1.0
    fig, ax = plt.subplots(figsize=(7, 4), dpi=120)
    y = 0
    ticks, tick_labels = [], []
    for k in dims:
        bars = sorted(bc.in_dim(k), key=lambda bd: (bd[0], bd[1] - bd[0]))
        color = _DIM_COLORS[k % len(_DIM_COLORS)]
        y_start = y
        for birth, death in bars:
            end = death if math.isfinite(death) else x_hi
            ax.hlines(y, birth, end, color=color, linewidth=2.5)
            if not math.isfinite(death):
                ax.plot([end], [y], marker=">", color=color, markersize=5)
            y += 1
        ticks.append((y_start + y - 1) / 2 if y > y_start else y_start)
        tick_labels.append(f"dim {k}")
        y += 1
    ax.set_yticks(ticks)
    ax.set_yticklabels(tick_labels)
    ax.set_xlim(0, x_hi)
    ax.set_ylim(-1, max(y, 1))
    ax.invert_yaxis()
    ax.set_xlabel("scale t")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_confusion_figure(cm: ConfusionMatrix, mode: str, path):
    """2x2 confusion matrix heat map with counts."""
    counts = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]], dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 3.6), dpi=120)
    ax.imshow(counts, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax.text(
                j,
                i,
                f"{int(counts[i, j])}",
                ha="center",
                va="center",
                color="black",
                fontsize=12,
            )
    ax.set_xticks([0, 1], ["pred not-8", "pred 8"])
    ax.set_yticks([0, 1], ["not-8", "is-8"])
    ax.set_title(f"{mode} persistence")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_metrics_figure(cm: ConfusionMatrix, mode: str, path):
    """Horizontal bar chart of the summary metrics."""
    rows = cm.metric_rows()
    names = [n for n, _ in rows]
    values = [0.0 if math.isnan(v) else v for _, v in rows]
    fig, ax = plt.subplots(figsize=(5.4, 3.6), dpi=120)
    ypos = np.arange(len(rows))
    ax.barh(ypos, values, color="#1f77b4")
    ax.set_yticks(ypos, names)
    ax.invert_yaxis()
    ax.set_xlim(0, 1.0)
    for y, v in zip(ypos, values):
        ax.text(min(v + 0.01, 0.92), y, f"{v:.4f}", va="center", fontsize=9)
    ax.set_title(f"{mode} persistence metrics")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
