"""Minimal SVG writers for line plots and heatmaps."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, List, Sequence
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f")
_W, _H = 640, 420
_L, _R, _T, _B = 70, 160, 40, 55


def _ticks(lo: float, hi: float, k: int = 5) -> List[float]:
    if not hi > lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / k))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= k:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def line_plot(path, series: Sequence[Dict], title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = False, logy: bool = False) -> None:
    """Write series ``{"label", "x", "y", optional "yerr", optional "style"}`` as an SVG.

    ``style`` is ``"line"`` (default) or ``"points"``. Log axes show log10 of
    the data; non-positive values are dropped there.
    """
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    prepared = []
    for s in series:
        pts = []
        errs = s.get("yerr") or [0.0] * len(s["x"])
        for x, y, e in zip(s["x"], s["y"], errs):
            if x is None or y is None or not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            e = e if (e is not None and math.isfinite(e)) else 0.0
            lo = ty(y - e) if (not logy or y - e > 0) else ty(y)
            pts.append((tx(x), ty(y), lo, ty(y + e)))
        prepared.append((s, pts))
    xs = [p[0] for _, pts in prepared for p in pts] or [0.0, 1.0]
    ys = [v for _, pts in prepared for p in pts for v in p[1:]] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = _W - _L - _R, _H - _T - _B

    def X(v):
        return _L + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return _T + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{_W / 2 - _R / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{_L + pw / 2}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}{" (log10)" if logx else ""}</text>',
           f'<text transform="translate(16,{_T + ph / 2}) rotate(-90)" text-anchor="middle">'
           f'{escape(ylabel)}{" (log10)" if logy else ""}</text>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.1f}" y1="{_T + ph}" x2="{X(t):.1f}" y2="{_T + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X(t):.1f}" y="{_T + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{_L - 4}" y1="{Y(t):.1f}" x2="{_L}" y2="{Y(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{_L - 6}" y="{Y(t) + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    for i, (s, pts) in enumerate(prepared):
        color = _COLORS[i % len(_COLORS)]
        if s.get("style", "line") == "line" and len(pts) > 1:
            path_d = " ".join(f"{'M' if j == 0 else 'L'}{X(p[0]):.1f},{Y(p[1]):.1f}" for j, p in enumerate(pts))
            out.append(f'<path d="{path_d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for p in pts:
            out.append(f'<circle cx="{X(p[0]):.1f}" cy="{Y(p[1]):.1f}" r="2.5" fill="{color}"/>')
            if p[3] != p[2]:
                out.append(f'<line x1="{X(p[0]):.1f}" y1="{Y(p[2]):.1f}" x2="{X(p[0]):.1f}" '
                           f'y2="{Y(p[3]):.1f}" stroke="{color}"/>')
        ly = _T + 14 + 16 * i
        out.append(f'<rect x="{_W - _R + 12}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{_W - _R + 26}" y="{ly + 1}">{escape(str(s.get("label", "")))}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out))


def heatmap(path, img: np.ndarray, title: str = "", max_cells: int = 60) -> None:
    """Grey-scale heatmap with rows along x and columns along y (origin bottom-left).

    Large matrices are block-summed down to at most ``max_cells`` per side.
    """
    A = np.asarray(img, dtype=float)
    fx = max(1, math.ceil(A.shape[0] / max_cells))
    fy = max(1, math.ceil(A.shape[1] / max_cells))
    px, py = -A.shape[0] % fx, -A.shape[1] % fy
    A = np.pad(A, ((0, px), (0, py)))
    A = A.reshape(A.shape[0] // fx, fx, A.shape[1] // fy, fy).sum(axis=(1, 3))
    hi = float(A.max()) if A.size and A.max() > 0 else 1.0
    nx, ny = A.shape
    size = 420
    cw, ch = size / nx, size / ny
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 20}" height="{size + 40}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{size + 20}" height="{size + 40}" fill="white"/>',
           f'<text x="{size / 2 + 10}" y="18" text-anchor="middle">{escape(title)}</text>']
    for i in range(nx):
        for j in range(ny):
            v = A[i, j] / hi
            if v <= 0:
                continue
            g = int(round(255 * (1.0 - v)))
            out.append(f'<rect x="{10 + i * cw:.2f}" y="{30 + size - (j + 1) * ch:.2f}" width="{cw:.2f}" '
                       f'height="{ch:.2f}" fill="rgb({g},{g},{g})"/>')
    out.append(f'<rect x="10" y="30" width="{size}" height="{size}" fill="none" stroke="black"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out))
