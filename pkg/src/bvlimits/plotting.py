"""Figures written next to CSV reports.  Non-interactive backend, no timestamps."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .limitlaw import CDF, DiscreteCDF, EntranceCDF  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.2),
    "figure.dpi": 100,
    "font.size": 9,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8,
    "svg.hashsalt": "bvlimits",
}

# PNG text chunks would otherwise carry the matplotlib version
_META = {"Software": None}


def _grid(curves, tmax, points=400):
    xs = set(np.linspace(0.0, tmax, points).tolist())
    for _, F in curves:
        if not isinstance(F, EntranceCDF):
            xs.update(x for x in F.breaks() if 0 <= x <= tmax)
    return sorted(xs)


def plot_cdfs(path, curves: list[tuple[str, CDF]], tmax: float | None = None, title: str = "") -> Path:
    """Overlay distribution functions; step laws are drawn as right-continuous staircases."""
    if tmax is None:
        tops = [max(F.breaks(), default=1.0) for _, F in curves]
        tmax = 1.1 * max(tops + [1.0])
    xs = _grid(curves, tmax)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, F in curves:
            ys = [F(x) for x in xs]
            step = isinstance(F, (DiscreteCDF, EntranceCDF))
            ax.plot(xs, ys, label=label, drawstyle="steps-post" if step else "default")
        ax.set_xlim(0, tmax)
        ax.set_ylim(-0.02, 1.05)
        ax.set_xlabel("scaled time t")
        ax.set_ylabel("F(t)")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right")
        fig.tight_layout()
        fig.savefig(path, metadata=_META)
        plt.close(fig)
    return Path(path)


def plot_convergence(path, ns, distances, expected_slope: float | None = None, title: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(ns, distances, "o-", label="sup distance")
        if expected_slope is not None and distances and distances[0] > 0:
            ref = [distances[0] * math.exp(expected_slope * (n - ns[0])) for n in ns]
            ax.semilogy(ns, ref, "--", label="reference rate")
        ax.set_xlabel("level n")
        ax.set_ylabel("sup |F_n - F|")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, metadata=_META)
        plt.close(fig)
    return Path(path)
