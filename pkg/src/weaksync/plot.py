"""Bare-bones SVG line plots; no styling guarantees."""
from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _panel(t, series, x0, y0, w, h, title, log=False):
    vals = np.asarray(series, dtype=float)
    if log:
        vals = np.log10(np.maximum(vals, 1e-16))
    lo, hi = float(np.nanmin(vals)), float(np.nanmax(vals))
    if hi - lo < 1e-300:
        hi = lo + 1.0
    tx = x0 + (t - t[0]) / max(t[-1] - t[0], 1e-300) * w
    parts = [
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>',
        f'<text x="{x0}" y="{y0 - 6}" font-size="12">{title} [{lo:.3g}, {hi:.3g}]</text>',
    ]
    for j in range(vals.shape[1]):
        ty = y0 + h - (vals[:, j] - lo) / (hi - lo) * h
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(tx, ty))
        parts.append(f'<polyline fill="none" stroke-width="0.8" stroke="{_COLORS[j % len(_COLORS)]}" points="{pts}"/>')
    return parts


def result_svg(result) -> str:
    t = result.t
    w, h = 560, 200
    body = _panel(t, result.zeta_norm, 40, 30, w, h, "log10 |zeta_i|", log=True)
    body += _panel(t, result.rho, 40, 280, w, h, "rho_i")
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="640" height="510">\n' + "\n".join(body) + "\n</svg>\n"
    )
