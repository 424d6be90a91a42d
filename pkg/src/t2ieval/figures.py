"""Matplotlib figure rendering for reports.

All figures render through the Agg backend with fixed geometry and
stripped PNG metadata so that identical inputs produce byte-identical
files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_KWARGS = {"dpi": 110, "metadata": {"Software": None}}


def save_ranking_bar(methods, scores, path: str, title: str = "Ranking score") -> None:
    """Horizontal bar chart of the combined ranking score per method."""
    fig, ax = plt.subplots(figsize=(7, 0.45 * max(len(methods), 4) + 1.2))
    y = np.arange(len(methods))
    ax.barh(y, [scores[m] for m in methods], color="#4878cf")
    ax.set_yticks(y)
    ax.set_yticklabels(methods)
    ax.invert_yaxis()
    ax.set_xlabel("ranking score (higher is better)")
    ax.set_title(title)
    for i, m in enumerate(methods):
        ax.text(scores[m], i, f" {scores[m]:.1f}", va="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)


def save_rank_heatmap(methods, metrics, ranks, path: str) -> None:
    """Heatmap of per-metric ranks (best = number of methods)."""
    grid = np.array([[ranks[m][metric] for metric in metrics] for m in methods])
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * len(metrics), 0.8 + 0.4 * len(methods)))
    im = ax.imshow(grid, cmap="viridis", aspect="auto",
                   vmin=1, vmax=len(methods))
    ax.set_xticks(np.arange(len(metrics)))
    ax.set_xticklabels(metrics, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(np.arange(len(methods)))
    ax.set_yticklabels(methods, fontsize=8)
    for i in range(len(methods)):
        for j in range(len(metrics)):
            ax.text(j, i, f"{grid[i, j]:g}", ha="center", va="center",
                    fontsize=7, color="white")
    fig.colorbar(im, ax=ax, label="rank")
    ax.set_title("Per-metric ranks")
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)


def save_reliability_diagram(report, path: str, title: str = "Reliability") -> None:
    """Confidence-vs-accuracy bars with the identity diagonal for reference."""
    edges = np.asarray(report.bin_edges)
    centers = (edges[:-1] + edges[1:]) / 2
    width = edges[1] - edges[0]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 4))
    ax0.bar(centers, report.accuracy, width=width * 0.9, color="#d65f5f",
            label="bin accuracy")
    ax0.plot([0, 1], [0, 1], linestyle="--", color="black", linewidth=1,
             label="identity")
    ax0.set_xlim(0, 1)
    ax0.set_ylim(0, 1)
    ax0.set_xlabel("confidence")
    ax0.set_ylabel("accuracy")
    ax0.set_title(f"{title} (ECE = {report.ece:.4f})")
    ax0.legend(loc="upper left", fontsize=8)
    ax1.bar(centers, report.counts, width=width * 0.9, color="#4878cf")
    ax1.set_xlim(0, 1)
    ax1.set_xlabel("confidence")
    ax1.set_ylabel("samples")
    ax1.set_title("Bin occupancy")
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)
