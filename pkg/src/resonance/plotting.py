"""Matplotlib figures written next to the CSV reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["line_figure", "multiplier_figure", "curve_figure"]

_STYLE = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.bbox": "tight",
    "svg.hashsalt": "resonance",
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def line_figure(path, x, series: dict[str, Sequence[float]], xlabel: str, ylabel: str,
                title: str = "", marker: str = "o") -> Path:
    """One or more series against a shared x axis."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, y in series.items():
            ax.plot(x, y, marker=marker, markersize=3, linewidth=1.2, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        return _save(fig, path)


def multiplier_figure(path, multipliers: np.ndarray, title: str = "Floquet multipliers") -> Path:
    """Multipliers in the complex plane against the unit circle."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 4.8))
        theta = np.linspace(0, 2 * np.pi, 400)
        ax.plot(np.cos(theta), np.sin(theta), color="0.6", linewidth=1)
        ax.plot(np.real(multipliers), np.imag(multipliers), "x", color="C3", markersize=9, mew=2)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
        ax.set_title(title)
        return _save(fig, path)


def curve_figure(path, nu, xi, title: str = "periodic solutions: average versus forcing level") -> Path:
    """Average ``ξ`` plotted against ``ν = μ(ξ)``."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(nu, xi, color="C0", linewidth=1.5)
        lo, hi = float(np.min(nu)), float(np.max(nu))
        ax.axvline(lo, color="0.7", linestyle=":", linewidth=1)
        ax.axvline(hi, color="0.7", linestyle=":", linewidth=1)
        ax.set_xlabel(r"$\nu$")
        ax.set_ylabel(r"$\xi$")
        ax.set_title(title)
        return _save(fig, path)
