"""Heatmap figures written alongside the numeric outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

rc = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 8,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def _extent(n):
    h = 1.0 / (n + 1)
    return (h / 2, 1 - h / 2, h / 2, 1 - h / 2)


def heatmap(ax, field, title=None, cmap="viridis"):
    v = np.asarray(field)
    # transpose so x runs left-right and y bottom-top
    im = ax.imshow(v.T, origin="lower", extent=_extent(v.shape[0]), cmap=cmap)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    plt.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    return im


def save_heatmap(path, field, title=None) -> Path:
    with plt.rc_context(rc):
        fig, ax = plt.subplots(figsize=(3.4, 3.0))
        heatmap(ax, field, title)
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def save_triptych(path, panels) -> Path:
    """Side-by-side heatmaps; ``panels`` is a sequence of ``(title, field)``."""
    with plt.rc_context(rc):
        fig, axes = plt.subplots(1, len(panels), figsize=(3.3 * len(panels), 3.0))
        for ax, (title, field) in zip(np.atleast_1d(axes), panels):
            heatmap(ax, field, title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
