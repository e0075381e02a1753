"""Minimal log-scale line plot written as plain SVG text (no timestamps)."""

from __future__ import annotations

import math
from typing import Sequence

WIDTH, HEIGHT = 720, 420
MARGIN = 60
FLOOR = 1e-16
MAX_POINTS = 1500
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _sample(n: int) -> list[int]:
    if n <= MAX_POINTS:
        return list(range(n))
    step = (n - 1) / (MAX_POINTS - 1)
    idx = sorted({round(k * step) for k in range(MAX_POINTS)})
    return idx


def log_plot(series: dict[str, Sequence[float]], title: str = "") -> str:
    """Render each named series against its index on a log10 y axis."""
    n = max((len(v) for v in series.values()), default=0)
    logs = {k: [math.log10(max(float(x), FLOOR)) for x in v] for k, v in series.items()}
    flat = [y for v in logs.values() for y in v] or [0.0]
    y_lo, y_hi = math.floor(min(flat)), math.ceil(max(flat))
    if y_hi == y_lo:
        y_hi = y_lo + 1
    x_hi = max(n - 1, 1)
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(t: float) -> float:
        return MARGIN + pw * t / x_hi

    def py(y: float) -> float:
        return HEIGHT - MARGIN - ph * (y - y_lo) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{title}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    ticks = range(y_lo, y_hi + 1, max(1, (y_hi - y_lo + 7) // 8))
    for e in ticks:
        y = py(e)
        out.append(f'<line x1="{MARGIN}" y1="{y:.2f}" x2="{WIDTH - MARGIN}" y2="{y:.2f}" '
                   f'stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN - 6}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">1e{e}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        t = round(frac * x_hi)
        out.append(f'<text x="{px(t):.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{t}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">iteration t</text>')
    for k, (name, ys) in enumerate(logs.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(t):.2f},{py(ys[t]):.2f}" for t in _sample(len(ys)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 6}" y="{MARGIN + 16 + 16 * k}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
