"""SVG figures for the CLI reports.

Figures are drawn with the object-oriented matplotlib API on the Agg
canvas and saved as SVG with a fixed hash salt, paths instead of font
glyph references and no date stamp, so the files are reproducible.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib
from matplotlib.figure import Figure

_RC = {"svg.hashsalt": "tpcurve", "svg.fonttype": "path", "path.simplify": False}


def _save(fig: Figure, path: str):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def loglog_plot(path: str, x: Sequence[float], y: Sequence[float], title: str, xlabel: str, ylabel: str,
                slope: Optional[float] = None):
    """Log-log scatter with an optional fitted power-law line."""
    fig = Figure(figsize=(5, 3.6))
    ax = fig.add_subplot()
    pts = [(a, b) for a, b in zip(x, y) if a > 0 and b > 0]
    if pts:
        xs, ys = zip(*pts)
        ax.loglog(xs, ys, "o-", color="k", lw=1, ms=4)
        if slope is not None:
            x0, y0 = xs[-1], ys[-1]
            ax.loglog([min(xs), max(xs)], [y0 * (min(xs) / x0) ** slope, y0 * (max(xs) / x0) ** slope],
                      "--", color="0.5", lw=1, label=f"slope {slope:.3f}")
            ax.legend(frameon=False)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    _save(fig, path)


def series_plot(path: str, x: Sequence[float], y: Sequence[float], title: str, xlabel: str, ylabel: str,
                logy: bool = False):
    fig = Figure(figsize=(5, 3.6))
    ax = fig.add_subplot()
    ax.plot(x, y, "-", color="k", lw=1)
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    _save(fig, path)


def curve_plot(path: str, points, closed: bool, title: str = ""):
    """Planar view (x, y) of a curve."""
    fig = Figure(figsize=(4, 4))
    ax = fig.add_subplot()
    xs = list(points[:, 0])
    ys = list(points[:, 1])
    if closed:
        xs.append(xs[0])
        ys.append(ys[0])
    ax.plot(xs, ys, "-", color="k", lw=1)
    ax.set_aspect("equal")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
