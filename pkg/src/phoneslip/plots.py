"""Dependency-free SVG rendering for traces and performance tables."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidArgument
from .evaluation import PerformanceTable, pair_name
from .ingest import SensorTrace
from .util import write_text_atomic

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
WIDTH = 800
PANEL_H = 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 130, 40, 45


def _num(x: float) -> str:
    return f"{x:.2f}"


def _nice_range(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _panel(y0: float, t: np.ndarray, series: np.ndarray, names, ylabel: str, title: str) -> list[str]:
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B
    lo, hi = _nice_range(float(series.min()), float(series.max()))
    t_max = float(t[-1]) if t[-1] > 0 else 1.0

    def px(tv):
        return MARGIN_L + plot_w * tv / t_max

    def py(v):
        return y0 + MARGIN_T + plot_h * (1.0 - (v - lo) / (hi - lo))

    top = y0 + MARGIN_T
    bottom = top + plot_h
    out = [
        f'<g class="panel">',
        f'<text x="{WIDTH / 2:.0f}" y="{y0 + 22:.0f}" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{_num(top)}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>',
    ]
    for v in np.linspace(lo, hi, 5):
        out.append(
            f'<text x="{MARGIN_L - 6}" y="{_num(py(v) + 4)}" text-anchor="end" font-size="10">{v:.1f}</text>'
        )
    for tv in np.linspace(0.0, t_max, 6):
        out.append(
            f'<text x="{_num(px(tv))}" y="{_num(bottom + 14)}" text-anchor="middle" font-size="10">{tv:.2f}</text>'
        )
    out.append(
        f'<text class="axis-label" x="{MARGIN_L + plot_w / 2:.0f}" y="{_num(bottom + 32)}" '
        f'text-anchor="middle" font-size="12">time (s)</text>'
    )
    out.append(
        f'<text class="axis-label" x="16" y="{_num((top + bottom) / 2)}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {_num((top + bottom) / 2)})">{escape(ylabel)}</text>'
    )
    for c, name in enumerate(names):
        pts = " ".join(f"{_num(px(tv))},{_num(py(v))}" for tv, v in zip(t, series[:, c]))
        color = COLORS[c % len(COLORS)]
        out.append(f'<polyline data-channel="{escape(name)}" fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 14 + 16 * c
        out.append(f'<line x1="{WIDTH - MARGIN_R + 12}" y1="{_num(ly)}" x2="{WIDTH - MARGIN_R + 32}" y2="{_num(ly)}" stroke="{color}"/>')
        out.append(f'<text x="{WIDTH - MARGIN_R + 36}" y="{_num(ly + 4)}" font-size="11">{escape(name)}</text>')
    out.append("</g>")
    return out


def trace_svg(trace: SensorTrace) -> str:
    """Two stacked panels: accelerometer axes and orientation angles vs time."""
    if len(trace) < 2:
        raise InvalidArgument("trace needs at least 2 samples to plot")
    t = trace.times() - trace.times()[0]
    label = f"{trace.case.name}_{trace.sample_id} ({trace.case.value})"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{2 * PANEL_H}" '
        f'viewBox="0 0 {WIDTH} {2 * PANEL_H}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{2 * PANEL_H}" fill="white"/>',
        *_panel(0, t, trace.accel, ("ax", "ay", "az"), "acceleration (m/s²)", f"{label}: accelerometer"),
        *_panel(PANEL_H, t, trace.orient, ("azimuth", "pitch", "roll"), "orientation (deg)", f"{label}: orientation"),
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def table_svg(table: PerformanceTable) -> str:
    """Grouped bars: one group per case pair, one bar per network kind."""
    if table.is_empty:
        raise InvalidArgument("performance table is empty; nothing to plot")
    n_pairs, n_kinds = table.accuracy.shape
    width, height = 960, 420
    left, right, top, bottom = 60, 150, 40, 60
    plot_w, plot_h = width - left - right, height - top - bottom
    group_w = plot_w / n_pairs
    bar_w = 0.8 * group_w / n_kinds

    def py(v):
        return top + plot_h * (1.0 - v / 100.0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="15">Pairwise classification accuracy</text>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>',
    ]
    for v in range(0, 101, 20):
        out.append(f'<line x1="{left}" y1="{_num(py(v))}" x2="{left + plot_w}" y2="{_num(py(v))}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{_num(py(v) + 4)}" text-anchor="end" font-size="10">{v}</text>')
    out.append(
        f'<text class="axis-label" x="16" y="{top + plot_h / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.0f})">accuracy (%)</text>'
    )
    out.append(
        f'<text class="axis-label" x="{left + plot_w / 2:.0f}" y="{height - 14}" text-anchor="middle" '
        f'font-size="12">case pair</text>'
    )
    for i, pair in enumerate(table.pairs):
        gx = left + i * group_w + 0.1 * group_w
        for j in range(n_kinds):
            v = float(table.accuracy[i, j])
            out.append(
                f'<rect class="bar" x="{_num(gx + j * bar_w)}" y="{_num(py(v))}" width="{_num(bar_w)}" '
                f'height="{_num(py(0) - py(v))}" fill="{COLORS[j % len(COLORS)]}"/>'
            )
        out.append(
            f'<text x="{_num(left + (i + 0.5) * group_w)}" y="{top + plot_h + 16}" text-anchor="middle" '
            f'font-size="11">{pair_name(pair)}</text>'
        )
    for j, kind in enumerate(table.kinds):
        ly = top + 14 + 18 * j
        out.append(f'<rect x="{width - right + 12}" y="{ly - 9}" width="14" height="10" fill="{COLORS[j % len(COLORS)]}"/>')
        out.append(f'<text x="{width - right + 32}" y="{ly}" font-size="11">{escape(kind.display_name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plots(obj: SensorTrace | PerformanceTable, destination) -> Path:
    """Render ``obj`` to an SVG file; nothing is written if rendering fails."""
    if isinstance(obj, SensorTrace):
        svg = trace_svg(obj)
    elif isinstance(obj, PerformanceTable):
        svg = table_svg(obj)
    else:
        raise InvalidArgument(f"cannot plot {type(obj).__name__}")
    destination = Path(destination)
    write_text_atomic(destination, svg)
    return destination
