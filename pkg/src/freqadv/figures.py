"""Matplotlib renderings of run metrics, written next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_loss_curves_png(path, labeled_metrics):
    """labeled_metrics: list of (label, RunMetrics)."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for label, m in labeled_metrics:
        iters = m.column("iter")
        ax.plot(iters, m.column("train_loss"), label=f"{label}:train")
        ax.plot(iters, m.column("tgt_test_loss"), linestyle="--",
                label=f"{label}:tgt_test")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
