"""Self-contained SVG line charts and scatter plots.

No plotting dependency: charts are assembled as plain strings with inline
attributes only (no external fonts, stylesheets or scripts), so identical
data yields byte-identical files that diff cleanly.
"""

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

# tab10-style palette, indexed by class 0..9
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

FONT = 'font-family="Helvetica,Arial,sans-serif"'


@dataclass
class Series:
    name: str
    xs: list
    ys: list
    color: str | None = None


def _fmt(value: float) -> str:
    text = f"{float(value):.6g}"
    return "0" if text in ("-0", "-0.0") else text


def _nice_step(span: float, target_ticks: int = 6) -> float:
    if span <= 0:
        return 1.0
    raw = span / target_ticks
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float) -> list:
    if hi <= lo:
        return [lo]
    step = _nice_step(hi - lo)
    first = np.ceil(lo / step) * step
    values = []
    v = first
    while v <= hi + step * 1e-9:
        values.append(0.0 if abs(v) < step * 1e-9 else float(v))
        v += step
    return values


class _Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n'
        ]

    def line(self, x1, y1, x2, y2, stroke="#333", width=1.0):
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"/>\n'
        )

    def text(self, x, y, content, size=12, anchor="start", color="#111", rotate=None):
        transform = f' transform="rotate(-90 {_fmt(x)} {_fmt(y)})"' if rotate else ""
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" {FONT} font-size="{size}" '
            f'text-anchor="{anchor}" fill="{color}"{transform}>{escape(str(content))}</text>\n'
        )

    def polyline(self, points, color, width=1.5):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width)}"/>\n'
        )

    def circle(self, x, y, r, color, opacity=1.0):
        extra = "" if opacity >= 1.0 else f' fill-opacity="{_fmt(opacity)}"'
        self.parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{color}"{extra}/>\n'
        )

    def render(self) -> str:
        return "".join(self.parts) + "</svg>\n"


def _data_bounds(values, pad_fraction=0.05):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    pad = (hi - lo) * pad_fraction
    return lo - pad, hi + pad


def line_chart(
    series: list,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 720,
    height: int = 440,
) -> str:
    """Render Series objects as one line chart with axes and a legend."""
    if not series:
        raise ValueError("need at least one series")
    margin_l, margin_r, margin_t, margin_b = 64, 16, 40, 48
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    all_x = np.concatenate([np.asarray(s.xs, dtype=float) for s in series])
    all_y = np.concatenate([np.asarray(s.ys, dtype=float) for s in series])
    x_lo, x_hi = _data_bounds(all_x, 0.02)
    y_lo, y_hi = _data_bounds(all_y, 0.05)

    def sx(v):
        return margin_l + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return margin_t + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    c = _Canvas(width, height)
    if title:
        c.text(width / 2, margin_t - 16, title, size=15, anchor="middle")

    for tick in _ticks(x_lo, x_hi):
        c.line(sx(tick), margin_t, sx(tick), margin_t + plot_h, stroke="#e0e0e0", width=0.7)
        c.line(sx(tick), margin_t + plot_h, sx(tick), margin_t + plot_h + 4)
        c.text(sx(tick), margin_t + plot_h + 18, _fmt(tick), size=11, anchor="middle")
    for tick in _ticks(y_lo, y_hi):
        c.line(margin_l, sy(tick), margin_l + plot_w, sy(tick), stroke="#e0e0e0", width=0.7)
        c.line(margin_l - 4, sy(tick), margin_l, sy(tick))
        c.text(margin_l - 8, sy(tick) + 4, _fmt(tick), size=11, anchor="end")
    c.line(margin_l, margin_t + plot_h, margin_l + plot_w, margin_t + plot_h)
    c.line(margin_l, margin_t, margin_l, margin_t + plot_h)
    if x_label:
        c.text(margin_l + plot_w / 2, height - 12, x_label, size=12, anchor="middle")
    if y_label:
        c.text(18, margin_t + plot_h / 2, y_label, size=12, anchor="middle", rotate=True)

    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        pts = [(sx(float(x)), sy(float(y))) for x, y in zip(s.xs, s.ys)]
        c.polyline(pts, color)

    legend_y = margin_t + 8
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        c.line(margin_l + plot_w - 130, legend_y + 16 * i, margin_l + plot_w - 110,
               legend_y + 16 * i, stroke=color, width=2.5)
        c.text(margin_l + plot_w - 104, legend_y + 16 * i + 4, s.name, size=11)
    return c.render()


def scatter_chart(
    points: np.ndarray,
    labels: np.ndarray,
    title: str = "",
    width: int = 640,
    height: int = 640,
    radius: float = 2.0,
) -> str:
    """Scatter a 2-D embedding with one palette color per class label."""
    pts = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be (n, 2), got {pts.shape}")
    margin, legend_w = 24, 56
    plot_w = width - 2 * margin - legend_w
    plot_h = height - 2 * margin - (28 if title else 0)
    top = margin + (28 if title else 0)
    x_lo, x_hi = _data_bounds(pts[:, 0])
    y_lo, y_hi = _data_bounds(pts[:, 1])

    c = _Canvas(width, height)
    if title:
        c.text(width / 2, margin, title, size=15, anchor="middle")
    for (x, y), label in zip(pts, labels):
        px = margin + (x - x_lo) / (x_hi - x_lo) * plot_w
        py = top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h
        c.circle(px, py, radius, PALETTE[int(label) % len(PALETTE)], opacity=0.8)
    for cls in sorted(set(int(v) for v in labels)):
        y = top + 14 + 18 * cls
        c.circle(width - legend_w + 10, y - 4, 4, PALETTE[cls % len(PALETTE)])
        c.text(width - legend_w + 20, y, str(cls), size=12)
    return c.render()
