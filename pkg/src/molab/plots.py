"""SVG emitters. matplotlib is imported lazily and pinned to reproducible
output (fixed hash salt, no date metadata)."""

from __future__ import annotations

import os

__all__ = ["scatter_svg", "curve_svg"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "molab"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})


def scatter_svg(path, groups, xlabel, ylabel, title, logy=False):
    """groups: iterable of (label, xs, ys)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, xs, ys in groups:
        ax.scatter(xs, ys, s=18, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if any(label for label, _, _ in groups):
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def curve_svg(path, xs, ys, xlabel, ylabel, title, logx=False, logy=True):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, marker=".", lw=1)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
