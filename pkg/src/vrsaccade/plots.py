"""CSV tables and static SVG figures.

Figures are written as plain SVG text so output is byte-stable across runs
and needs no display or plotting backend.
"""
from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import ShapeMismatch

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 55
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
POS_FILL, NEG_FILL = "#d62728", "#1f77b4"
PLOT_KINDS = ("line", "scatter", "contour", "matrix")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9g" % float(v)
    return str(v)


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ShapeMismatch(f"row {i} has {len(row)} fields, header has {width}")
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_table(rows, path, header: Sequence[str]) -> None:
    """Write comma-separated rows with a header; reals use 9 significant digits."""
    text = format_table(header, rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# svg helpers


def _attr(text: str) -> str:
    return escape(text, {'"': "&quot;"})


def _f(x: float) -> str:
    return "%.2f" % x


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + step * 1e-9:
        ticks.append(first + k * step)
        k += 1
    return ticks


class _Canvas:
    def __init__(self, xlim, ylim, title="", xlabel="", ylabel=""):
        self.x0, self.x1 = self._pad(*xlim)
        self.y0, self.y1 = self._pad(*ylim)
        self.parts: list[str] = []
        self.legend: list[tuple[str, str, str]] = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.pw = WIDTH - MARGIN_L - MARGIN_R
        self.ph = HEIGHT - MARGIN_T - MARGIN_B

    @staticmethod
    def _pad(lo, hi):
        lo, hi = float(lo), float(hi)
        if hi == lo:
            d = abs(lo) * 0.05 or 0.5
            return lo - d, hi + d
        return lo, hi

    def px(self, x):
        return MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN_T + (self.y1 - y) / (self.y1 - self.y0) * self.ph

    def add(self, s: str):
        self.parts.append(s)

    def render(self) -> str:
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        out.extend(self.parts)
        out.append(self._axes())
        if self.legend:
            out.append(self._legend())
        if self.title:
            out.append(f'<text class="title" x="{_f(MARGIN_L + self.pw / 2)}" y="22" '
                       f'text-anchor="middle" font-size="14">{escape(self.title)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def _axes(self) -> str:
        g = ['<g class="axes" stroke="black" fill="none">',
             f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{self.pw}" height="{self.ph}"/>']
        for t in _nice_ticks(self.x0, self.x1):
            x = self.px(t)
            g.append(f'<line x1="{_f(x)}" y1="{MARGIN_T + self.ph}" x2="{_f(x)}" '
                     f'y2="{MARGIN_T + self.ph + 5}"/>')
            g.append(f'<text x="{_f(x)}" y="{MARGIN_T + self.ph + 18}" text-anchor="middle" '
                     f'stroke="none" fill="black">{"%.4g" % t}</text>')
        for t in _nice_ticks(self.y0, self.y1):
            y = self.py(t)
            g.append(f'<line x1="{MARGIN_L - 5}" y1="{_f(y)}" x2="{MARGIN_L}" y2="{_f(y)}"/>')
            g.append(f'<text x="{MARGIN_L - 8}" y="{_f(y + 4)}" text-anchor="end" '
                     f'stroke="none" fill="black">{"%.4g" % t}</text>')
        g.append(f'<text class="xlabel" x="{_f(MARGIN_L + self.pw / 2)}" y="{HEIGHT - 12}" '
                 f'text-anchor="middle" stroke="none" fill="black">{escape(self.xlabel)}</text>')
        cy = MARGIN_T + self.ph / 2
        g.append(f'<text class="ylabel" x="16" y="{_f(cy)}" text-anchor="middle" stroke="none" '
                 f'fill="black" transform="rotate(-90 16 {_f(cy)})">{escape(self.ylabel)}</text>')
        g.append("</g>")
        return "\n".join(g)

    def _legend(self) -> str:
        x = WIDTH - MARGIN_R + 12
        g = ['<g class="legend">']
        for i, (name, color, shape) in enumerate(self.legend):
            y = MARGIN_T + 10 + 18 * i
            if shape == "line":
                g.append(f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" '
                         f'stroke-width="2"/>')
            else:
                g.append(f'<circle cx="{x + 9}" cy="{y}" r="4" fill="{color}"/>')
            g.append(f'<text x="{x + 24}" y="{y + 4}">{escape(name)}</text>')
        g.append("</g>")
        return "\n".join(g)


def _limits(arrays):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    if vals.size == 0:
        return 0.0, 1.0
    return float(vals.min()), float(vals.max())


def _series(data, key):
    series = data.get(key)
    if not series:
        raise ShapeMismatch(f"plot data needs a non-empty {key!r} list")
    out = []
    for name, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise ShapeMismatch(f"series {name!r}: x and y must be equal-length 1-D arrays")
        out.append((str(name), xs, ys))
    return out


def line_svg(data: dict) -> str:
    series = _series(data, "series")
    c = _Canvas(_limits([s[1] for s in series]), _limits([s[2] for s in series]),
                data.get("title", ""), data.get("xlabel", ""), data.get("ylabel", ""))
    for i, (name, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(c.px(x))},{_f(c.py(y))}" for x, y in zip(xs, ys))
        c.add(f'<polyline class="series" data-name="{_attr(name)}" fill="none" '
              f'stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        c.legend.append((name, color, "line"))
    return c.render()


def scatter_svg(data: dict) -> str:
    groups = _series(data, "groups")
    c = _Canvas(_limits([g[1] for g in groups]), _limits([g[2] for g in groups]),
                data.get("title", ""), data.get("xlabel", ""), data.get("ylabel", ""))
    for i, (name, xs, ys) in enumerate(groups):
        color = PALETTE[i % len(PALETTE)]
        c.add(f'<g class="group" data-name="{_attr(name)}" fill="{color}" fill-opacity="0.6">')
        for x, y in zip(xs, ys):
            c.add(f'<circle cx="{_f(c.px(x))}" cy="{_f(c.py(y))}" r="2"/>')
        c.add("</g>")
        c.legend.append((name, color, "dot"))
    return c.render()


def contour_svg(data: dict) -> str:
    xs = np.asarray(data["xs"], dtype=float)
    ys = np.asarray(data["ys"], dtype=float)
    values = np.asarray(data["values"], dtype=float)
    if xs.ndim != 1 or ys.ndim != 1 or values.size != xs.size * ys.size or xs.size < 2 or ys.size < 2:
        raise ShapeMismatch("contour data needs xs, ys (>= 2 each) and len(xs)*len(ys) values")
    grid = values.reshape(ys.size, xs.size)
    c = _Canvas((xs[0], xs[-1]), (ys[0], ys[-1]), data.get("title", ""),
                data.get("xlabel", ""), data.get("ylabel", ""))
    dx = (xs[-1] - xs[0]) / (xs.size - 1)
    dy = (ys[-1] - ys[0]) / (ys.size - 1)
    scale = float(np.abs(grid).max()) or 1.0
    c.add('<g class="cells" stroke="none">')
    for r in range(ys.size):
        for col in range(xs.size):
            v = grid[r, col]
            fill = POS_FILL if v > 0 else NEG_FILL
            opacity = 0.15 + 0.6 * min(abs(v) / scale, 1.0)
            x0 = max(c.px(xs[col] - dx / 2), MARGIN_L)
            x1 = min(c.px(xs[col] + dx / 2), MARGIN_L + c.pw)
            y0 = max(c.py(ys[r] + dy / 2), MARGIN_T)
            y1 = min(c.py(ys[r] - dy / 2), MARGIN_T + c.ph)
            c.add(f'<rect class="cell" data-sign="{"+" if v > 0 else "-"}" x="{_f(x0)}" '
                  f'y="{_f(y0)}" width="{_f(x1 - x0)}" height="{_f(y1 - y0)}" fill="{fill}" '
                  f'fill-opacity="{"%.3f" % opacity}"/>')
    c.add("</g>")
    c.legend.append(("saccade (f > 0)", POS_FILL, "dot"))
    c.legend.append(("not saccade", NEG_FILL, "dot"))

    for i, (name, px, py) in enumerate(_series(data, "points") if data.get("points") else []):
        color = ("#1f4e79", "#8b0000")[i % 2]
        c.add(f'<g class="points" data-name="{_attr(name)}" fill="{color}" fill-opacity="0.5">')
        for x, y in zip(px, py):
            if xs[0] <= x <= xs[-1] and ys[0] <= y <= ys[-1]:
                c.add(f'<circle cx="{_f(c.px(x))}" cy="{_f(c.py(y))}" r="1.5"/>')
        c.add("</g>")

    sv = np.asarray(data.get("support_vectors", np.empty((0, 2))), dtype=float).reshape(-1, 2)
    c.add('<g class="support-vectors" fill="none" stroke="black" stroke-width="0.8">')
    for x, y in sv:
        if xs[0] <= x <= xs[-1] and ys[0] <= y <= ys[-1]:
            c.add(f'<circle class="sv" cx="{_f(c.px(x))}" cy="{_f(c.py(y))}" r="3.5"/>')
    c.add("</g>")
    c.legend.append(("support vector", "black", "dot"))
    return c.render()


def matrix_svg(data: dict) -> str:
    m = np.asarray(data["matrix"])
    if m.shape != (2, 2):
        raise ShapeMismatch(f"confusion matrix must be 2x2, got {m.shape}")
    labels = data.get("labels", ("not saccade", "saccade"))
    size = 150
    x0, y0 = 170, 80
    total = m.sum() or 1
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text class="title" x="{x0 + size}" y="40" text-anchor="middle" font-size="15">'
        f'{escape(data.get("title", "Confusion matrix"))}</text>',
    ]
    for r in range(2):
        for col in range(2):
            v = int(m[r, col])
            shade = 0.1 + 0.8 * v / total
            x, y = x0 + col * size, y0 + r * size
            out.append(f'<rect class="cell" data-row="{r}" data-col="{col}" x="{x}" y="{y}" '
                       f'width="{size}" height="{size}" fill="#1f77b4" '
                       f'fill-opacity="{"%.3f" % shade}" stroke="black"/>')
            out.append(f'<text class="count" x="{x + size // 2}" y="{y + size // 2 + 6}" '
                       f'text-anchor="middle" font-size="20">{v}</text>')
    for i, name in enumerate(labels):
        out.append(f'<text class="pred-label" x="{x0 + i * size + size // 2}" y="{y0 + 2 * size + 22}" '
                   f'text-anchor="middle">{escape(name)}</text>')
        out.append(f'<text class="true-label" x="{x0 - 10}" y="{y0 + i * size + size // 2 + 5}" '
                   f'text-anchor="end">{escape(name)}</text>')
    out.append(f'<text x="{x0 + size}" y="{y0 + 2 * size + 45}" text-anchor="middle">Predicted</text>')
    out.append(f'<text x="30" y="{y0 + size}" text-anchor="middle" '
               f'transform="rotate(-90 30 {y0 + size})">True</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_RENDERERS = {"line": line_svg, "scatter": scatter_svg, "contour": contour_svg, "matrix": matrix_svg}


def render_plot(kind: str, data: dict) -> str:
    if kind not in _RENDERERS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    return _RENDERERS[kind](data)


def emit_plot(kind: str, data: dict, path) -> None:
    text = render_plot(kind, data)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
