"""Minimal SVG rendering of traced graphs: arcs as polylines (horizontal
solid, vertical dashed), zeros and poles marked, fixed square viewport."""

from __future__ import annotations

import math

from .graph import CriticalGraph
from .tracer import TraceConfig

_ARC_COLORS = {
    "ShortTrajectory": "#c0392b",
    "Loop": "#8e44ad",
    "SpiralToOrigin": "#d35400",
    "RadialToOrigin": "#d35400",
    "EscapeToInfinity": "#2471a3",
    "StepBudgetExceeded": "#7f8c8d",
}


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def render_graph_svg(graph: CriticalGraph, size: int = 800, cfg: TraceConfig | None = None) -> str:
    """SVG text for the traced graph in the viewport [-R_max, R_max]^2."""
    q = graph.qdiff
    cfg = cfg or TraceConfig()
    r_max = cfg.r_max_factor * q.scale
    span = 2.0 * r_max

    def to_px(z: complex) -> tuple[float, float]:
        x = (z.real + r_max) / span * size
        y = (r_max - z.imag) / span * size
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for arc in graph.arcs:
        if arc.duplicate_of is not None:
            continue
        pts = arc.samples
        if len(pts) < 2:
            continue
        step = max(1, len(pts) // 4000)
        chosen = pts[::step]
        if chosen[-1] != pts[-1]:
            chosen.append(pts[-1])
        coords = " ".join(
            f"{_fmt(x)},{_fmt(y)}" for x, y in (to_px(p) for p in chosen)
        )
        color = _ARC_COLORS.get(arc.termination.tag, "#2c3e50")
        dash = ' stroke-dasharray="6,5"' if arc.kind == "vertical" else ""
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>'
        )
    for zero in q.zeros():
        x, y = to_px(zero)
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="#1a5276"/>')
    # double (or simple) pole at the origin: a cross
    x, y = to_px(0j)
    parts.append(
        f'<path d="M {_fmt(x - 5)} {_fmt(y)} H {_fmt(x + 5)} M {_fmt(x)} {_fmt(y - 5)} '
        f'V {_fmt(y + 5)}" stroke="#17202a" stroke-width="1.5"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_points_svg(
    points: list[complex],
    overlay: list[complex] | None = None,
    size: int = 800,
    r_view: float | None = None,
) -> str:
    """Scatter of complex points (dots) with an optional overlay polyline."""
    all_pts = list(points) + list(overlay or [])
    if r_view is None:
        r_view = 1.1 * max((abs(p) for p in all_pts), default=1.0)
    span = 2.0 * r_view

    def to_px(z: complex) -> tuple[float, float]:
        return (z.real + r_view) / span * size, (r_view - z.imag) / span * size

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if overlay:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (to_px(p) for p in overlay))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="#2471a3" stroke-width="1.2"/>'
        )
    for p in points:
        x, y = to_px(p)
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2" fill="#c0392b"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
