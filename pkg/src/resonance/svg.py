"""Minimal deterministic SVG line plots.

One polyline in a fixed 800x600 viewport with labelled axes.  Output
depends only on the data, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["WIDTH", "HEIGHT", "nice_ticks", "polyline_svg", "write_svg"]

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 40, 60


def nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    """Round tick positions covering ``[lo, hi]`` (steps of 1, 2 or 5 times a power of ten)."""
    if not hi - lo > 1e-9 * max(1.0, abs(lo), abs(hi)):
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(k * step, 12) for k in range(start, stop + 1)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.6g}" if v != 0 else "0"


def polyline_svg(x: Sequence[float], y: Sequence[float], xlabel: str = "", ylabel: str = "",
                 title: str = "") -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and y must be non-empty 1-D arrays of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("cannot plot non-finite values")
    xt = nice_ticks(float(x.min()), float(x.max()))
    yt = nice_ticks(float(y.min()), float(y.max()))
    x0, x1 = min(xt[0], x.min()), max(xt[-1], x.max())
    y0, y1 = min(yt[0], y.min()), max(yt[-1], y.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g stroke="black" stroke-width="1">',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/>',
    ]
    for v in xt:
        out.append(f'<line x1="{_fmt(px(v))}" y1="{TOP + ph}" x2="{_fmt(px(v))}" y2="{TOP + ph + 6}"/>')
    for v in yt:
        out.append(f'<line x1="{LEFT - 6}" y1="{_fmt(py(v))}" x2="{LEFT}" y2="{_fmt(py(v))}"/>')
    out.append("</g>")
    out.append('<g font-family="sans-serif" font-size="12" fill="black">')
    for v in xt:
        out.append(f'<text x="{_fmt(px(v))}" y="{TOP + ph + 20}" text-anchor="middle">{_label(v)}</text>')
    for v in yt:
        out.append(f'<text x="{LEFT - 10}" y="{_fmt(py(v) + 4)}" text-anchor="end">{_label(v)}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="20" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 20 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="25" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append("</g>")
    pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
    out.append(f'<polyline fill="none" stroke="#1f4e99" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str | Path, x, y, xlabel: str = "", ylabel: str = "", title: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(polyline_svg(x, y, xlabel, ylabel, title))
    return path
