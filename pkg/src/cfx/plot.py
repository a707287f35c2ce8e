"""Side-by-side SVG rendering of a series and its counterfactual.

No plotting dependency: the file is assembled as SVG 1.1 text, one panel
per channel, with changed segments shaded behind the curves.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .data import TimeSeries
from .distances import changed_segments
from .errors import ShapeError

_ORIG = "#4878a8"
_CF = "#c44e52"
_SHADE = "#e8b339"
_GRID = "#d8d8d8"
_TEXT = "#333333"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw_step = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw_step))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw_step:
            break
    first = np.ceil(lo / step) * step
    vals = []
    v = first
    while v <= hi + 1e-9 * step:
        vals.append(0.0 if abs(v) < 1e-12 else float(v))
        v += step
    return vals or [lo]


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def render_svg(
    original: TimeSeries,
    counterfactual: TimeSeries,
    tau: float = 1e-6,
    width: int = 900,
    panel_height: int = 200,
    title: str | None = None,
) -> str:
    if original.values.shape != counterfactual.values.shape:
        raise ShapeError("original and counterfactual must have the same shape")
    channels, length = original.values.shape
    mask = changed_segments(original, counterfactual, tau)

    left, right, top, bottom, gap = 56, 18, 34, 36, 18
    plot_w = width - left - right
    height = top + channels * panel_height + (channels - 1) * gap + bottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14" fill="{_TEXT}">'
            f"{escape(title)}</text>"
        )

    def x_px(t: float) -> float:
        if length == 1:
            return left + plot_w / 2
        return left + plot_w * t / (length - 1)

    for c in range(channels):
        py0 = top + c * (panel_height + gap)
        py1 = py0 + panel_height
        lo = float(min(original.values[c].min(), counterfactual.values[c].min()))
        hi = float(max(original.values[c].max(), counterfactual.values[c].max()))
        if hi - lo < 1e-12:
            lo, hi = lo - 1.0, hi + 1.0
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad

        def y_px(v: float) -> float:
            return py1 - (v - lo) / (hi - lo) * panel_height

        parts.append(
            f'<rect x="{left}" y="{py0}" width="{plot_w}" height="{panel_height}" '
            f'fill="none" stroke="{_GRID}"/>'
        )
        for ch, start, end in mask.segments:
            if ch != c:
                continue
            rx0, rx1 = x_px(max(start - 0.5, 0)), x_px(min(end + 0.5, length - 1))
            parts.append(
                f'<rect x="{rx0:.2f}" y="{py0}" width="{rx1 - rx0:.2f}" '
                f'height="{panel_height}" fill="{_SHADE}" fill-opacity="0.25"/>'
            )
        for tv in _ticks(lo, hi):
            ty = y_px(tv)
            parts.append(
                f'<line x1="{left}" y1="{ty:.2f}" x2="{width - right}" y2="{ty:.2f}" '
                f'stroke="{_GRID}" stroke-width="0.5"/>'
            )
            parts.append(
                f'<text x="{left - 6}" y="{ty + 4:.2f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10" fill="{_TEXT}">{_fmt(tv)}</text>'
            )
        for tv in _ticks(0, length - 1, 7):
            tick = int(round(tv))
            tx = x_px(tick)
            parts.append(
                f'<line x1="{tx:.2f}" y1="{py1}" x2="{tx:.2f}" y2="{py1 + 4}" '
                f'stroke="{_TEXT}" stroke-width="0.8"/>'
            )
            parts.append(
                f'<text x="{tx:.2f}" y="{py1 + 16}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10" fill="{_TEXT}">{tick}</text>'
            )
        for vals, color in ((original.values[c], _ORIG), (counterfactual.values[c], _CF)):
            pts = " ".join(
                f"{x_px(t):.2f},{y_px(float(v)):.2f}" for t, v in enumerate(vals)
            )
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="1.6"/>'
            )
        if channels > 1:
            parts.append(
                f'<text x="{left + 6}" y="{py0 + 14}" font-family="sans-serif" '
                f'font-size="11" fill="{_TEXT}">channel {c}</text>'
            )

    lx = width - right - 190
    ly = top - 12
    parts.append(
        f'<line x1="{lx}" y1="{ly}" x2="{lx + 26}" y2="{ly}" stroke="{_ORIG}" stroke-width="1.6"/>'
        f'<text x="{lx + 31}" y="{ly + 4}" font-family="sans-serif" font-size="11" '
        f'fill="{_TEXT}">original</text>'
        f'<line x1="{lx + 92}" y1="{ly}" x2="{lx + 118}" y2="{ly}" stroke="{_CF}" stroke-width="1.6"/>'
        f'<text x="{lx + 123}" y="{ly + 4}" font-family="sans-serif" font-size="11" '
        f'fill="{_TEXT}">counterfactual</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(path: str | Path, original: TimeSeries, counterfactual: TimeSeries, **kw) -> None:
    Path(path).write_text(render_svg(original, counterfactual, **kw))
