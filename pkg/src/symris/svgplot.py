"""Minimal SVG line/area plots. The CSV files remain the data of record."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = {
    "NPT": "#d62728",
    "PPT_BE": "#f2c300",
    "SEP": "#2ca02c",
    "UNK": "#7f7f7f",
    "refined": "#8c564b",
    "MI": "#1f77b4",
    "MII": "#7f7f7f",
}
BACKGROUND = {"NPT": "#f7d4d4", "PPT_BE": "#fbf0c0", "SEP": "#d5ecd5"}


@dataclass
class Panel:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    logx: bool = False
    logy: bool = False
    items: list = field(default_factory=list)
    marks: list = field(default_factory=list)
    bands: list = field(default_factory=list)

    def line(self, x, y, color="#000", label=None, dash=None, width=1.5, dots=False):
        self.items.append(("line", np.asarray(x, float), np.asarray(y, float), color, label, dash, width, dots))

    def band(self, x, lo, hi, color, opacity=0.3):
        self.items.append(("band", np.asarray(x, float), np.asarray(lo, float), np.asarray(hi, float), color, opacity))

    def vspan(self, x0, x1, color):
        self.bands.append((x0, x1, color))

    def marker(self, x, y, color="#d62728", size=5):
        self.marks.append((x, y, color, size))

    def _limits(self):
        xs, ys = [], []
        for it in self.items:
            if it[0] == "line":
                xs.append(it[1])
                ys.append(it[2])
            else:
                xs.append(it[1])
                ys.extend([it[2], it[3]])
        for x, y, *_ in self.marks:
            xs.append(np.array([x]))
            ys.append(np.array([y]))
        xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        if self.logx:
            xs = xs[xs > 0]
        if self.logy:
            ys = ys[ys > 0]
        xlim = self.xlim or (float(np.nanmin(xs)), float(np.nanmax(xs)))
        ylim = self.ylim or (float(np.nanmin(ys)), float(np.nanmax(ys)))
        if xlim[0] == xlim[1]:
            xlim = (xlim[0] - 0.5, xlim[1] + 0.5)
        if ylim[0] == ylim[1]:
            ylim = (ylim[0] - 0.5, ylim[1] + 0.5)
        return xlim, ylim


def _tx(v, lim, log):
    if log:
        v = np.log10(np.clip(v, 1e-300, None))
        lim = (np.log10(lim[0]), np.log10(lim[1]))
    return (np.asarray(v, float) - lim[0]) / (lim[1] - lim[0])


def _ticks(lim, log, count=5):
    if log:
        lo, hi = int(np.floor(np.log10(lim[0]))), int(np.ceil(np.log10(lim[1])))
        return [10.0**e for e in range(lo, hi + 1) if lim[0] <= 10.0**e <= lim[1]]
    return list(np.linspace(lim[0], lim[1], count))


def _num(v):
    if v != 0 and (abs(v) >= 1e4 or abs(v) < 1e-2):
        return f"{v:.0e}"
    return f"{v:.3g}"


def render(panels: list[Panel], cols: int = 1, width: int = 420, height: int = 300, title: str = "") -> str:
    rows = (len(panels) + cols - 1) // cols
    top = 30 if title else 0
    W, H = cols * width, rows * height + top
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i, p in enumerate(panels):
        ox = (i % cols) * width
        oy = top + (i // cols) * height
        out.extend(_panel(p, ox, oy, width, height))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _panel(p: Panel, ox, oy, w, h):
    ml, mr, mt, mb = 55, 12, 22, 40
    pw, ph = w - ml - mr, h - mt - mb
    x0, y0 = ox + ml, oy + mt
    xlim, ylim = p._limits()

    def X(v):
        return x0 + pw * _tx(v, xlim, p.logx)

    def Y(v):
        return y0 + ph * (1 - _tx(v, ylim, p.logy))

    out = [f'<g><clipPath id="c{ox}_{oy}"><rect x="{x0}" y="{y0}" width="{pw}" height="{ph}"/></clipPath>']
    clip = f'clip-path="url(#c{ox}_{oy})"'
    for a, b, color in p.bands:
        xa, xb = float(X(a)), float(X(b))
        out.append(f'<rect {clip} x="{xa:.2f}" y="{y0}" width="{max(xb - xa, 0):.2f}" height="{ph}" fill="{color}"/>')
    for it in p.items:
        if it[0] == "band":
            _, x, lo, hi, color, op = it
            pts = [f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x, hi)]
            pts += [f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x[::-1], lo[::-1])]
            out.append(f'<polygon {clip} points="{" ".join(pts)}" fill="{color}" fill-opacity="{op}" stroke="none"/>')
    legend = []
    for it in p.items:
        if it[0] != "line":
            continue
        _, x, y, color, label, dash, width, dots = it
        ok = np.isfinite(x) & np.isfinite(y)
        if p.logy:
            ok &= y > 0
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x[ok], y[ok]))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline {clip} points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{dash_attr}/>')
        if dots:
            for a, b in zip(x[ok], y[ok]):
                out.append(f'<circle {clip} cx="{X(a):.2f}" cy="{Y(b):.2f}" r="1.8" fill="{color}"/>')
        if label:
            legend.append((label, color, dash))
    for x, y, color, size in p.marks:
        cx, cy = float(X(x)), float(Y(y))
        out.append(
            f'<path d="M{cx - size},{cy - size}L{cx + size},{cy + size}M{cx - size},{cy + size}L{cx + size},{cy - size}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
    out.append(f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    for t in _ticks(xlim, p.logx):
        tx = float(X(t))
        out.append(f'<line x1="{tx:.2f}" y1="{y0 + ph}" x2="{tx:.2f}" y2="{y0 + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{tx:.2f}" y="{y0 + ph + 15}" text-anchor="middle">{_num(t)}</text>')
    for t in _ticks(ylim, p.logy):
        ty = float(Y(t))
        out.append(f'<line x1="{x0 - 4}" y1="{ty:.2f}" x2="{x0}" y2="{ty:.2f}" stroke="#333"/>')
        out.append(f'<text x="{x0 - 6}" y="{ty + 4:.2f}" text-anchor="end">{_num(t)}</text>')
    if p.title:
        out.append(f'<text x="{x0 + pw / 2}" y="{y0 - 7}" text-anchor="middle">{escape(p.title)}</text>')
    if p.xlabel:
        out.append(f'<text x="{x0 + pw / 2}" y="{y0 + ph + 32}" text-anchor="middle">{escape(p.xlabel)}</text>')
    if p.ylabel:
        out.append(
            f'<text transform="translate({ox + 12},{y0 + ph / 2}) rotate(-90)" text-anchor="middle">{escape(p.ylabel)}</text>'
        )
    for k, (label, color, dash) in enumerate(legend):
        ly = y0 + 12 + 13 * k
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{x0 + pw - 95}" y1="{ly - 4}" x2="{x0 + pw - 80}" y2="{ly - 4}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{x0 + pw - 76}" y="{ly}">{escape(label)}</text>')
    out.append("</g>")
    return out


def dominant_spans(x, probs: dict[str, np.ndarray]):
    """Contiguous x-ranges where each of NPT / PPT_BE / SEP has the largest probability."""
    x = np.asarray(x, float)
    keys = ["NPT", "PPT_BE", "SEP"]
    stack = np.stack([np.asarray(probs[k], float) for k in keys])
    winner = np.argmax(stack, axis=0)
    mids = np.concatenate([[x[0]], 0.5 * (x[1:] + x[:-1]), [x[-1]]])
    spans = []
    start = 0
    for i in range(1, len(x) + 1):
        if i == len(x) or winner[i] != winner[start]:
            spans.append((mids[start], mids[i], keys[winner[start]]))
            start = i
    return spans
