"""Tiny deterministic SVG line-plot writer.

No plotting dependency: the byte content of the output depends only on the
data, so repeated runs of the same experiment produce identical files.
"""

from __future__ import annotations

import numpy as np

_WIDTH, _HEIGHT = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 55
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _transform(values: np.ndarray, log: bool) -> np.ndarray:
    if log:
        vals = np.asarray(values, dtype=float)
        if np.any(vals <= 0):
            raise ValueError("log-scale plots require positive data")
        return np.log10(vals)
    return np.asarray(values, dtype=float)


def _ticks(lo: float, hi: float, log: bool) -> list[tuple[float, str]]:
    if log:
        decades = range(int(np.floor(lo)), int(np.ceil(hi)) + 1)
        return [(float(k), f"1e{k}") for k in decades if lo <= k <= hi]
    ticks = np.linspace(lo, hi, 5)
    return [(float(v), f"{v:.3g}") for v in ticks]


def line_plot(
    path,
    series: list[tuple[np.ndarray, np.ndarray, str]],
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    logy: bool = False,
) -> None:
    """Write a line+marker plot; series is a list of (xs, ys, label)."""
    txs = [_transform(xs, logx) for xs, _, _ in series]
    tys = [_transform(ys, logy) for _, ys, _ in series]
    xlo = min(float(t.min()) for t in txs)
    xhi = max(float(t.max()) for t in txs)
    ylo = min(float(t.min()) for t in tys)
    yhi = max(float(t.max()) for t in tys)
    if xhi - xlo < 1e-12:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 0.5, yhi + 0.5

    pw = _WIDTH - _ML - _MR
    ph = _HEIGHT - _MT - _MB

    def px(x):
        return _ML + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return _HEIGHT - _MB - (y - ylo) / (yhi - ylo) * ph

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for xv, label in _ticks(xlo, xhi, logx):
        x = px(xv)
        lines.append(
            f'<line x1="{x:.2f}" y1="{_HEIGHT - _MB}" x2="{x:.2f}" '
            f'y2="{_HEIGHT - _MB + 5}" stroke="black"/>'
        )
        lines.append(
            f'<text x="{x:.2f}" y="{_HEIGHT - _MB + 18}" font-size="11" '
            f'text-anchor="middle">{label}</text>'
        )
    for yv, label in _ticks(ylo, yhi, logy):
        y = py(yv)
        lines.append(
            f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" '
            'stroke="black"/>'
        )
        lines.append(
            f'<text x="{_ML - 8}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end">{label}</text>'
        )
    for k, ((xs, ys, label), tx, ty) in enumerate(zip(series, txs, tys)):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx, ty))
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
        for a, b in zip(tx, ty):
            lines.append(
                f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" '
                f'fill="{color}"/>'
            )
        if label:
            lines.append(
                f'<text x="{_WIDTH - _MR - 5}" y="{_MT + 15 + 14 * k}" '
                f'font-size="11" text-anchor="end" fill="{color}">'
                f"{label}</text>"
            )
    if title:
        lines.append(
            f'<text x="{_WIDTH / 2:.2f}" y="20" font-size="14" '
            f'text-anchor="middle">{title}</text>'
        )
    if xlabel:
        lines.append(
            f'<text x="{_ML + pw / 2:.2f}" y="{_HEIGHT - 12}" font-size="12" '
            f'text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        lines.append(
            f'<text x="16" y="{_MT + ph / 2:.2f}" font-size="12" '
            f'text-anchor="middle" transform="rotate(-90 16 '
            f'{_MT + ph / 2:.2f})">{ylabel}</text>'
        )
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
