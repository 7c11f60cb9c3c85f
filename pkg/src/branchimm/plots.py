"""Minimal SVG histogram and normal QQ plot, written without a plotting library."""
from __future__ import annotations

import math

import numpy as np
from scipy import stats

W, H, PAD = 480, 320, 40


def _frame(title, body):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">\n'
        f'<rect width="{W}" height="{H}" fill="white"/>\n'
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{title}</text>\n'
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>\n'
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>\n'
        + body
        + "</svg>\n"
    )


def histogram_svg(values, sigma, bins=30, title="normalized statistic"):
    """Density histogram of ``values`` with the N(0, sigma^2) density overlaid."""
    x = np.asarray(values, dtype=float)
    lo = min(x.min(), -4 * sigma)
    hi = max(x.max(), 4 * sigma)
    dens, edges = np.histogram(x, bins=bins, range=(lo, hi), density=True)
    grid = np.linspace(lo, hi, 200)
    pdf = stats.norm.pdf(grid, 0, sigma)
    top = max(dens.max(), pdf.max()) * 1.05

    def sx(v):
        return PAD + (v - lo) / (hi - lo) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - v / top * (H - 2 * PAD)

    parts = []
    for d, a, b in zip(dens, edges[:-1], edges[1:]):
        parts.append(
            f'<rect x="{sx(a):.2f}" y="{sy(d):.2f}" width="{sx(b) - sx(a):.2f}" '
            f'height="{sy(0) - sy(d):.2f}" fill="#9ecae1" stroke="#3182bd"/>\n'
        )
    pts = " ".join(f"{sx(g):.2f},{sy(p):.2f}" for g, p in zip(grid, pdf))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#de2d26" stroke-width="2"/>\n')
    return _frame(title, "".join(parts))


def qq_svg(values, sigma, title="QQ plot against N(0, sigma^2)"):
    x = np.sort(np.asarray(values, dtype=float))
    m = len(x)
    q = stats.norm.ppf((np.arange(1, m + 1) - 0.5) / m, 0, sigma)
    lo = min(x.min(), q.min())
    hi = max(x.max(), q.max())
    if math.isclose(lo, hi):
        hi = lo + 1.0

    def s(v, horizontal):
        frac = (v - lo) / (hi - lo)
        return PAD + frac * (W - 2 * PAD) if horizontal else H - PAD - frac * (H - 2 * PAD)

    parts = [
        f'<line x1="{s(lo, True):.2f}" y1="{s(lo, False):.2f}" x2="{s(hi, True):.2f}" '
        f'y2="{s(hi, False):.2f}" stroke="#de2d26"/>\n'
    ]
    for a, b in zip(q, x):
        parts.append(f'<circle cx="{s(a, True):.2f}" cy="{s(b, False):.2f}" r="1.5" fill="#3182bd"/>\n')
    return _frame(title, "".join(parts))
