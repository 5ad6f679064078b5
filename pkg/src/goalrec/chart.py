"""Minimal SVG line charts, hand-assembled markup with no renderer dependency."""

from __future__ import annotations

from typing import Mapping, Sequence

WIDTH = 720
HEIGHT = 480
MARGIN_LEFT = 70
MARGIN_RIGHT = 150
MARGIN_TOP = 50
MARGIN_BOTTOM = 60

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def line_chart_svg(
    title: str,
    x_label: str,
    y_label: str,
    x_values: Sequence[float],
    series: Sequence[tuple[str, Mapping[float, float]]],
    y_min: float = 0.0,
    y_max: float = 1.0,
) -> str:
    """One polyline per series over shared x ticks; y defaults to [0, 1]."""
    if not x_values:
        raise ValueError("x_values must be non-empty")
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    x_span = max(x_values) - min(x_values) or 1.0
    y_span = y_max - y_min or 1.0

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - min(x_values)) / x_span * plot_w

    def py(y: float) -> float:
        return MARGIN_TOP + plot_h - (y - y_min) / y_span * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="18" '
        f'font-family="sans-serif">{_escape(title)}</text>',
    ]
    # axes
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{MARGIN_TOP + plot_h}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + plot_h}" '
        f'x2="{MARGIN_LEFT + plot_w}" y2="{MARGIN_TOP + plot_h}" stroke="black"/>'
    )
    for x in x_values:
        parts.append(
            f'<text x="{px(x):.1f}" y="{MARGIN_TOP + plot_h + 20}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{x:g}</text>'
        )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = y_min + frac * y_span
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{py(y) + 4:.1f}" text-anchor="end" '
            f'font-size="12" font-family="sans-serif">{y:.2f}</text>'
        )
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{py(y):.1f}" x2="{MARGIN_LEFT + plot_w}" '
            f'y2="{py(y):.1f}" stroke="#dddddd"/>'
        )
    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{HEIGHT - 16}" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{_escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="20" y="{MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif" '
        f'transform="rotate(-90 20 {MARGIN_TOP + plot_h / 2:.1f})">{_escape(y_label)}</text>'
    )
    for i, (name, points) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(
            f"{px(x):.2f},{py(points[x]):.2f}" for x in x_values if x in points
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'
        )
        for x in x_values:
            if x in points:
                parts.append(
                    f'<circle cx="{px(x):.2f}" cy="{py(points[x]):.2f}" r="3" fill="{color}"/>'
                )
        legend_y = MARGIN_TOP + 16 + i * 20
        parts.append(
            f'<line x1="{MARGIN_LEFT + plot_w + 12}" y1="{legend_y}" '
            f'x2="{MARGIN_LEFT + plot_w + 36}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT + plot_w + 42}" y="{legend_y + 4}" font-size="12" '
            f'font-family="sans-serif">{_escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_line_chart(path, *args, **kwargs) -> None:
    with open(path, "w") as fp:
        fp.write(line_chart_svg(*args, **kwargs))
