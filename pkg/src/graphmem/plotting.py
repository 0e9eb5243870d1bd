"""Figures written next to CLI reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .graph import GraphStats  # noqa: E402

_RC = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "graphmem",
}
_METADATA = {"Software": None}


def _save(fig, path: str | os.PathLike) -> None:
    fig.tight_layout()
    fig.savefig(path, metadata=_METADATA)
    plt.close(fig)


def plot_stats(stats: GraphStats, path: str | os.PathLike, title: str = "") -> None:
    """Node and relation counts as two bar groups."""
    with plt.rc_context(_RC):
        fig, (ax_n, ax_e) = plt.subplots(1, 2, figsize=(7, 3))
        nodes = {"object": stats.object_nodes, "thesis": stats.thesis_nodes, "episodic": stats.episodic_nodes}
        rels = {"simple": stats.simple_relations, "hyper": stats.hyper_relations, "episodic": stats.episodic_relations}
        for ax, data, label in ((ax_n, nodes, "nodes"), (ax_e, rels, "relations")):
            bars = ax.bar(list(data), list(data.values()), color="0.45")
            ax.bar_label(bars)
            ax.set_ylabel(label)
        if title:
            fig.suptitle(title)
        _save(fig, path)


def plot_eval_summary(rows: Sequence[tuple[str, dict]], path: str | os.PathLike) -> None:
    """Grouped bars of accuracy, EM and NoAnswer rate, one group per configuration."""
    metrics = ("accuracy", "em_rate", "no_answer_rate")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(rows) + 1.5), 3.2))
        width = 0.8 / len(metrics)
        for i, metric in enumerate(metrics):
            xs = [j + (i - 1) * width for j in range(len(rows))]
            ax.bar(xs, [agg[metric] for _, agg in rows], width, label=metric)
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels([label for label, _ in rows], rotation=20, ha="right")
        ax.set_ylim(0, 1)
        ax.legend(frameon=False, ncol=len(metrics), loc="upper center", bbox_to_anchor=(0.5, 1.15))
        _save(fig, path)
