"""Minimal SVG writers: line charts, heatmaps and a small-multiples grid."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.1e}"
    return f"{v:g}"


class _Panel:
    """Maps data coordinates into a rectangle of the drawing."""

    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim, self.ylim = xlim, ylim

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo or 1.0) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo or 1.0) * self.h

    def axes(self, xlabel="", ylabel="", title="") -> list[str]:
        out = [f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" fill="none" stroke="#333"/>']
        for t in _nice_ticks(*self.xlim):
            x = self.px(t)
            out.append(f'<line x1="{x:.2f}" y1="{self.y0 + self.h}" x2="{x:.2f}" y2="{self.y0 + self.h + 4}" stroke="#333"/>')
            out.append(f'<text x="{x:.2f}" y="{self.y0 + self.h + 16}" font-size="10" text-anchor="middle">{_fmt(t)}</text>')
        for t in _nice_ticks(*self.ylim):
            y = self.py(t)
            out.append(f'<line x1="{self.x0 - 4}" y1="{y:.2f}" x2="{self.x0}" y2="{y:.2f}" stroke="#333"/>')
            out.append(f'<text x="{self.x0 - 6}" y="{y + 3:.2f}" font-size="10" text-anchor="end">{_fmt(t)}</text>')
        if xlabel:
            out.append(f'<text x="{self.x0 + self.w / 2}" y="{self.y0 + self.h + 32}" font-size="11" '
                       f'text-anchor="middle">{escape(xlabel)}</text>')
        if ylabel:
            cx, cy = self.x0 - 46, self.y0 + self.h / 2
            out.append(f'<text x="{cx}" y="{cy}" font-size="11" text-anchor="middle" '
                       f'transform="rotate(-90 {cx} {cy})">{escape(ylabel)}</text>')
        if title:
            out.append(f'<text x="{self.x0 + self.w / 2}" y="{self.y0 - 8}" font-size="12" '
                       f'text-anchor="middle">{escape(title)}</text>')
        return out

    def polyline(self, x, y, color, dashed=False) -> str:
        pts = " ".join(f"{self.px(a):.2f},{self.py(b):.2f}" for a, b in zip(x, y) if math.isfinite(b))
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'


def _limits(values, pad=0.05):
    v = np.asarray([x for x in np.ravel(values) if math.isfinite(x)], dtype=float)
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _document(width, height, body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n")


def _save(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def line_plot(path, x, series: dict, xlabel="", ylabel="", title="", width=640, height=420) -> None:
    """One chart; ``series`` maps label -> y values (label ending in ' (pred)' is dashed)."""
    x = np.asarray(x, dtype=float)
    panel = _Panel(80, 40, width - 230, height - 100, _limits(x, 0.0), _limits(list(series.values())))
    body = panel.axes(xlabel, ylabel, title)
    for k, (label, y) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        body.append(panel.polyline(x, np.asarray(y, dtype=float), color, label.endswith("(pred)")))
        ly = 50 + 16 * k
        body.append(f'<line x1="{width - 140}" y1="{ly}" x2="{width - 120}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{width - 115}" y="{ly + 4}" font-size="10">{escape(label)}</text>')
    _save(path, _document(width, height, body))


def _color(t: float) -> str:
    """Blue-to-yellow ramp for t in [0, 1]."""
    t = min(1.0, max(0.0, t))
    stops = ((0.0, (68, 1, 84)), (0.25, (59, 82, 139)), (0.5, (33, 145, 140)), (0.75, (94, 201, 98)),
             (1.0, (253, 231, 37)))
    for (t0, c0), (t1, c1) in zip(stops[:-1], stops[1:]):
        if t <= t1:
            u = (t - t0) / (t1 - t0)
            r, g, b = (round(a + u * (b_ - a)) for a, b_ in zip(c0, c1))
            return f"#{r:02x}{g:02x}{b:02x}"
    return "#fde725"


def heatmap(path, x, y, z, xlabel="", ylabel="", title="", vmin=None, vmax=None, label="",
            width=640, height=460) -> None:
    """``z[i, j]`` at (x[j], y[i]); NaN cells are left grey."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    finite = z[np.isfinite(z)]
    vmin = float(finite.min()) if vmin is None and finite.size else (0.0 if vmin is None else vmin)
    vmax = float(finite.max()) if vmax is None and finite.size else (1.0 if vmax is None else vmax)
    dx = (x[-1] - x[0]) / max(len(x) - 1, 1) if len(x) > 1 else 1.0
    dy = (y[-1] - y[0]) / max(len(y) - 1, 1) if len(y) > 1 else 1.0
    panel = _Panel(80, 40, width - 200, height - 100, (x[0] - dx / 2, x[-1] + dx / 2), (y[0] - dy / 2, y[-1] + dy / 2))
    body = []
    cw = panel.w / len(x)
    ch = panel.h / len(y)
    for i in range(len(y)):
        for j in range(len(x)):
            v = z[i, j]
            fill = "#dddddd" if not math.isfinite(v) else _color((v - vmin) / (vmax - vmin or 1.0))
            body.append(f'<rect x="{panel.px(x[j] - dx / 2):.2f}" y="{panel.py(y[i] + dy / 2):.2f}" '
                        f'width="{cw + 0.3:.2f}" height="{ch + 0.3:.2f}" fill="{fill}"/>')
    body += panel.axes(xlabel, ylabel, title)
    bx, by, bh = width - 100, 40, panel.h
    for k in range(50):
        body.append(f'<rect x="{bx}" y="{by + bh * (1 - (k + 1) / 50):.2f}" width="16" height="{bh / 50 + 0.3:.2f}" '
                    f'fill="{_color(k / 49)}"/>')
    body.append(f'<text x="{bx + 20}" y="{by + 8}" font-size="10">{_fmt(vmax)}</text>')
    body.append(f'<text x="{bx + 20}" y="{by + bh}" font-size="10">{_fmt(vmin)}</text>')
    if label:
        body.append(f'<text x="{bx}" y="{by + bh + 24}" font-size="10">{escape(label)}</text>')
    _save(path, _document(width, height, body))


def small_multiples(path, fractions, panels: dict, xlabel="training fraction (%)", ylabel="MRE (%)",
                    ncols=4, cell=(230, 190)) -> None:
    """One panel per key of ``panels``; each value maps series label -> y per fraction."""
    x = np.asarray(fractions, dtype=float) * 100.0
    n = len(panels)
    nrows = math.ceil(n / ncols)
    cw, chh = cell
    width, height = ncols * cw + 40, nrows * chh + 60
    body = []
    labels = []
    for k, (name, series) in enumerate(panels.items()):
        r, c = divmod(k, ncols)
        panel = _Panel(60 + c * cw, 40 + r * chh, cw - 80, chh - 80, _limits(x, 0.02), _limits(list(series.values())))
        body += panel.axes(xlabel, ylabel if c == 0 else "", name)
        for s, (label, y) in enumerate(series.items()):
            color = PALETTE[s % len(PALETTE)]
            body.append(panel.polyline(x, np.asarray(y, dtype=float), color))
            for a, b in zip(x, y):
                if math.isfinite(b):
                    body.append(f'<circle cx="{panel.px(a):.2f}" cy="{panel.py(b):.2f}" r="2.5" fill="{color}"/>')
            if label not in labels:
                labels.append(label)
    for s, label in enumerate(labels):
        body.append(f'<rect x="{40 + 110 * s}" y="{height - 18}" width="12" height="8" fill="{PALETTE[s % len(PALETTE)]}"/>')
        body.append(f'<text x="{56 + 110 * s}" y="{height - 10}" font-size="11">{escape(label)}</text>')
    _save(path, _document(width, height, body))


def training_curve(path, history, title="training history") -> None:
    h = np.asarray(history, dtype=float).reshape(-1, 3)
    line_plot(path, h[:, 0], {"train loss": h[:, 1], "val loss": h[:, 2]}, "epoch", "loss", title)
