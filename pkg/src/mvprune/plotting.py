"""Matplotlib figures written next to the CSV/JSON reports."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_rate_surface", "plot_heatmap", "plot_complexity"]

_PNG_META = {"Software": None}


def _extent(radius):
    return (-radius - 0.5, radius + 0.5, radius + 0.5, -radius - 0.5)


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)


def plot_rate_surface(surface, contours, path):
    """Rate surface image with iso-rate lines at each threshold in ``contours``."""
    surface = np.asarray(surface)
    r = surface.shape[0] // 2
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(surface, cmap="viridis", extent=_extent(r), interpolation="nearest")
    if contours and r > 0:
        grid = np.arange(-r, r + 1)
        # a level just above t outlines the cells admitted at t
        levels = sorted(t + 0.5 for t in contours)
        cs = ax.contour(grid, grid, surface, levels=levels, colors="k", linewidths=0.8)
        ax.clabel(cs, fmt=lambda v: f"{v - 0.5:g}", fontsize=7)
    ax.set_xlabel("MVD x (pel)")
    ax.set_ylabel("MVD y (pel)")
    fig.colorbar(im, ax=ax, label="bits")
    _save(fig, path)


def plot_heatmap(counts, path, title=None):
    counts = np.asarray(counts, dtype=float)
    r = counts.shape[0] // 2
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(np.log1p(counts), cmap="magma", extent=_extent(r),
                   interpolation="nearest")
    ax.set_xlabel("MV - MVP x (pel)")
    ax.set_ylabel("MV - MVP y (pel)")
    if title:
        ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, label="ln(1 + decisions)")
    _save(fig, path)


def plot_complexity(labels, reductions, path):
    """Bar chart of complexity reduction (%) per labelled run."""
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(labels) + 2), 3.5))
    ax.bar(range(len(labels)), reductions, color="tab:blue")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("complexity reduction (%)")
    ax.axhline(0, color="k", linewidth=0.6)
    _save(fig, path)
