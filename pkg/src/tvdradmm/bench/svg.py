"""Minimal SVG line charts with a log10 y-axis."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(v):
    return f"{v:.2f}"


def line_chart(x, series, xlabel="k", ylabel="log10 error", title="",
               width=640, height=400):
    """
    Render ``{name: values}`` against `x` as an SVG document string.

    Values are plotted as ``log10``; non-positive or non-finite points are
    dropped and split the polyline.
    """
    left, right, top, bottom = 70, 150, 30, 50
    pw, ph = width - left - right, height - top - bottom
    x = np.asarray(x, dtype=float)

    logs = {}
    for name, ys in series.items():
        ys = np.asarray(ys, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ly = np.where((ys > 0) & np.isfinite(ys), np.log10(ys), np.nan)
        logs[name] = ly
    finite = np.concatenate([v[np.isfinite(v)] for v in logs.values()]
                            + [np.array([])])
    if finite.size:
        lo, hi = math.floor(finite.min()), math.ceil(finite.max())
    else:
        lo, hi = -1, 0
    if hi == lo:
        hi = lo + 1
    x0, x1 = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (hi - v) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="18" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    # grid and y ticks, one per decade
    step = max(1, (hi - lo) // 10)
    for d in range(lo, hi + 1, step):
        y = py(d)
        out.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + pw}" '
                   f'y2="{_fmt(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
                   f'font-size="11">{d}</text>')
    for v in np.linspace(x0, x1, 6):
        out.append(f'<text x="{_fmt(px(v))}" y="{top + ph + 16}" '
                   f'text-anchor="middle" font-size="11">{v:g}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" '
               f'text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'font-size="12" transform="rotate(-90 16 {top + ph / 2:.2f})">'
               f'{escape(ylabel)}</text>')

    for idx, (name, ly) in enumerate(logs.items()):
        color = COLORS[idx % len(COLORS)]
        run = []
        for xv, yv in zip(x, ly):
            if np.isfinite(yv):
                run.append(f"{_fmt(px(xv))},{_fmt(py(yv))}")
            elif run:
                out.append(f'<polyline fill="none" stroke="{color}" '
                           f'stroke-width="1.2" points="{" ".join(run)}"/>')
                run = []
        if run:
            out.append(f'<polyline fill="none" stroke="{color}" '
                       f'stroke-width="1.2" points="{" ".join(run)}"/>')
        ly_ = top + 14 + 18 * idx
        out.append(f'<line x1="{left + pw + 10}" y1="{ly_}" '
                   f'x2="{left + pw + 30}" y2="{ly_}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly_ + 4}" '
                   f'font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
