"""Minimal self-contained SVG line plots (no external plotting dependency)."""

from __future__ import annotations

import math

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#17becf", "#7f7f7f"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 55


def _ticks_linear(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _ticks_log(lo: float, hi: float):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(lo_e, hi_e + 1)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


class LinePlot:
    """Collects named series and writes a single SVG file."""

    def __init__(self, xlabel: str, ylabel: str, logx: bool = False,
                 logy: bool = False, title: str = ""):
        self.xlabel, self.ylabel = xlabel, ylabel
        self.logx, self.logy = logx, logy
        self.title = title
        self.series = []  # (label, xs, ys)

    def add(self, label: str, xs, ys):
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if _finite(x) and _finite(y)
               and (not self.logx or x > 0) and (not self.logy or y > 0)]
        if pts:
            self.series.append((label, pts))

    def write(self, path):
        if not self.series:
            raise ValueError("nothing to plot")
        xs = [p[0] for _, pts in self.series for p in pts]
        ys = [p[1] for _, pts in self.series for p in pts]
        xlo, xhi = min(xs), max(xs)
        ylo, yhi = min(ys), max(ys)
        if self.logx:
            xt = _ticks_log(xlo, xhi)
            xlo, xhi = math.log10(xt[0]), math.log10(xt[-1])
        else:
            xt = _ticks_linear(xlo, xhi)
            xlo, xhi = min(xlo, xt[0]), max(xhi, xt[-1])
        if self.logy:
            yt = _ticks_log(ylo, yhi)
            ylo, yhi = math.log10(yt[0]), math.log10(yt[-1])
        else:
            yt = _ticks_linear(ylo, yhi)
            ylo, yhi = min(ylo, yt[0]), max(yhi, yt[-1])
        if xhi <= xlo:
            xhi = xlo + 1.0
        if yhi <= ylo:
            yhi = ylo + 1.0

        def px(x):
            v = math.log10(x) if self.logx else x
            return _ML + (v - xlo) / (xhi - xlo) * (_W - _ML - _MR)

        def py(y):
            v = math.log10(y) if self.logy else y
            return _H - _MB - (v - ylo) / (yhi - ylo) * (_H - _MT - _MB)

        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
                 f'font-family="sans-serif" font-size="12">',
                 f'<rect width="{_W}" height="{_H}" fill="white"/>']
        for t in xt:
            x = px(t)
            parts.append(f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" y2="{_H-_MB}" '
                         'stroke="#dddddd"/>')
            parts.append(f'<text x="{x:.1f}" y="{_H-_MB+16}" text-anchor="middle">{_fmt(t)}</text>')
        for t in yt:
            y = py(t)
            parts.append(f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W-_MR}" y2="{y:.1f}" '
                         'stroke="#dddddd"/>')
            parts.append(f'<text x="{_ML-6}" y="{y+4:.1f}" text-anchor="end">{_fmt(t)}</text>')
        parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" '
                     f'height="{_H-_MT-_MB}" fill="none" stroke="black"/>')
        for i, (label, pts) in enumerate(self.series):
            color = _COLORS[i % len(_COLORS)]
            path_d = " ".join(f"{'M' if j == 0 else 'L'}{px(x):.1f},{py(y):.1f}"
                              for j, (x, y) in enumerate(pts))
            parts.append(f'<path d="{path_d}" fill="none" stroke="{color}" stroke-width="1.6"/>')
            for x, y in pts:
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.4" fill="{color}"/>')
            ly = _MT + 16 + 16 * i
            parts.append(f'<line x1="{_W-_MR-150}" y1="{ly-4}" x2="{_W-_MR-125}" y2="{ly-4}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{_W-_MR-120}" y="{ly}">{_esc(label)}</text>')
        parts.append(f'<text x="{(_ML+_W-_MR)/2:.0f}" y="{_H-12}" '
                     f'text-anchor="middle">{_esc(self.xlabel)}</text>')
        parts.append(f'<text x="16" y="{(_MT+_H-_MB)/2:.0f}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {(_MT+_H-_MB)/2:.0f})">{_esc(self.ylabel)}</text>')
        if self.title:
            parts.append(f'<text x="{(_ML+_W-_MR)/2:.0f}" y="18" text-anchor="middle" '
                         f'font-size="13">{_esc(self.title)}</text>')
        parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts))


def _finite(v) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)


def _esc(s: str) -> str:
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
