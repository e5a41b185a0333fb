"""Byte-stable SVG output through matplotlib."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def new_figure(w=6.0, h=4.0, nrows=1, ncols=1):
    plt.rcParams["svg.hashsalt"] = "rfibench"
    plt.rcParams["svg.fonttype"] = "none"
    return plt.subplots(nrows, ncols, figsize=(w, h), squeeze=False)


def save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
