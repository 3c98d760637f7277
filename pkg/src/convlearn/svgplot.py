"""Minimal self-contained SVG line charts (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}" if abs(v - round(v)) < 1e-9 else f"{10 ** v:.3g}"
    return f"{v:.3g}"


def line_chart(
    series,
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 420,
) -> str:
    """Render ``series`` as SVG.

    Each series is a dict with ``x``, ``y``, ``label`` and optional
    ``dashed`` (bool) and ``markers`` (bool).
    """
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    pts = []
    for s in series:
        pts.append([(tx(x), ty(y)) for x, y in zip(s["x"], s["y"])
                    if (not logx or x > 0) and (not logy or y > 0)])
    xs = [p[0] for ps in pts for p in ps]
    ys = [p[1] for ps in pts for p in ps]
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad_y = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad_y, y1 + pad_y

    left, right, top, bottom = 70, 160, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
        f'<text x="{width / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{left + pw / 2:.0f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{top + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.0f})">{escape(ylabel)}</text>',
    ]
    for k in range(5):
        vx = x0 + k * (x1 - x0) / 4
        vy = y0 + k * (y1 - y0) / 4
        out.append(f'<text x="{_fmt(px(vx))}" y="{top + ph + 16}" text-anchor="middle">'
                   f'{_tick_label(vx, logx)}</text>')
        out.append(f'<text x="{left - 6}" y="{_fmt(py(vy) + 4)}" text-anchor="end">'
                   f'{_tick_label(vy, logy)}</text>')
    for i, (s, ps) in enumerate(zip(series, pts)):
        if not ps:
            continue
        color = s.get("color", PALETTE[i % len(PALETTE)])
        dash = ' stroke-dasharray="5,4"' if s.get("dashed") else ""
        path = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in ps)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{path}"/>')
        if s.get("markers"):
            for a, b in ps:
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="2.5" fill="{color}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.6"{dash}/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly}">{escape(s.get("label", ""))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
