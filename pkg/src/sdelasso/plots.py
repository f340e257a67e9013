"""Density panel rendering for Monte Carlo summaries.

The only module that imports matplotlib; everything else stays plot-free.
Each parameter gets one panel: the kernel density of the nonzero estimates
plus, when selection produced exact zeros, a stem at 0 whose height is the
zero fraction on a twin axis.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .montecarlo import McSummary

__all__ = ["render_density_panels"]


def render_density_panels(path, summary: McSummary, labels, truth=None):
    """Write a PNG with one density panel per parameter; returns the path."""
    d = len(labels)
    ncols = min(d, 3)
    nrows = (d + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.0 * ncols, 3.0 * nrows), squeeze=False
    )
    for j, label in enumerate(labels):
        ax = axes[j // ncols][j % ncols]
        pair = summary.kde_grids[j]
        if pair is not None:
            grid, dens = pair
            ax.plot(grid, dens, lw=1.5)
            ax.set_ylim(bottom=0.0)
        zf = float(summary.zero_fraction[j])
        if zf > 0.0 or pair is None:
            twin = ax.twinx()
            twin.vlines(0.0, 0.0, zf, colors="tab:red", lw=2.0)
            twin.plot([0.0], [zf], marker="o", color="tab:red", ms=4)
            twin.set_ylim(0.0, 1.0)
            twin.set_ylabel("zero fraction", fontsize=8, color="tab:red")
            twin.tick_params(axis="y", labelsize=7, colors="tab:red")
        if truth is not None:
            ax.axvline(float(truth[j]), color="gray", ls="--", lw=1.0)
        ax.set_title(label, fontsize=10)
        ax.tick_params(labelsize=8)
    for j in range(d, nrows * ncols):
        axes[j // ncols][j % ncols].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
