"""Hand-emitted SVG for the sample-complexity phase plot.

No plotting dependency: the file is assembled from fixed-format strings so
repeated runs are byte-identical.  The plot is a log-log scatter of n*
against beta, one series per (estimator, epsilon), with the fitted slope
annotated when one was computed.  Cells with infinite beta have no place on
a log axis and are omitted (the CSV remains the authoritative record).
"""

from __future__ import annotations

import math

from .sweep import SweepCell

__all__ = ["render_phase_svg"]

_W, _H = 860.0, 620.0
_ML, _MR, _MT, _MB = 70.0, 230.0, 40.0, 60.0
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _decades(lo: float, hi: float):
    start = math.floor(math.log10(lo))
    stop = math.ceil(math.log10(hi))
    return [10.0**k for k in range(start, stop + 1)]


def render_phase_svg(cells: list[SweepCell], slopes: dict[tuple[str, float], float]) -> str:
    """SVG text for the resolved finite-beta cells.

    ``slopes`` maps (estimator, epsilon) to a fitted log-log slope; matching
    series get a 3-decimal annotation in the legend.
    """
    usable = [
        c
        for c in cells
        if c.resolved and not c.spec.beta.is_infinite and c.n_star is not None and c.n_star > 0
    ]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:g}" height="{_H:g}" '
        f'viewBox="0 0 {_W:g} {_H:g}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_ML}" y="24" font-family="monospace" font-size="16">'
        "sample complexity n* vs inverse temperature (log-log)</text>",
    ]
    if not usable:
        parts.append(
            f'<text x="{_ML}" y="{_H / 2}" font-family="monospace" font-size="14">'
            "no resolved finite-beta cells</text></svg>"
        )
        return "\n".join(parts) + "\n"

    xs = [c.spec.beta.value for c in usable]
    ys = [float(c.n_star) for c in usable]
    x_lo, x_hi = min(xs) / 1.5, max(xs) * 1.5
    y_lo, y_hi = min(ys) / 1.5, max(ys) * 1.5
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def px(v: float) -> float:
        return _ML + plot_w * (math.log10(v) - math.log10(x_lo)) / (
            math.log10(x_hi) - math.log10(x_lo)
        )

    def py(v: float) -> float:
        return _MT + plot_h * (1.0 - (math.log10(v) - math.log10(y_lo)) / (
            math.log10(y_hi) - math.log10(y_lo)
        ))

    parts.append(
        f'<rect x="{_fmt(_ML)}" y="{_fmt(_MT)}" width="{_fmt(plot_w)}" height="{_fmt(plot_h)}" '
        'fill="none" stroke="black"/>'
    )
    for tick in _decades(x_lo, x_hi):
        if x_lo <= tick <= x_hi:
            x = px(tick)
            parts.append(
                f'<line x1="{_fmt(x)}" y1="{_fmt(_MT + plot_h)}" x2="{_fmt(x)}" '
                f'y2="{_fmt(_MT + plot_h + 6)}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_fmt(x)}" y="{_fmt(_MT + plot_h + 22)}" font-family="monospace" '
                f'font-size="11" text-anchor="middle">{tick:g}</text>'
            )
    for tick in _decades(y_lo, y_hi):
        if y_lo <= tick <= y_hi:
            y = py(tick)
            parts.append(
                f'<line x1="{_fmt(_ML - 6)}" y1="{_fmt(y)}" x2="{_fmt(_ML)}" y2="{_fmt(y)}" '
                'stroke="black"/>'
            )
            parts.append(
                f'<text x="{_fmt(_ML - 10)}" y="{_fmt(y + 4)}" font-family="monospace" '
                f'font-size="11" text-anchor="end">{tick:g}</text>'
            )
    parts.append(
        f'<text x="{_fmt(_ML + plot_w / 2)}" y="{_fmt(_H - 16)}" font-family="monospace" '
        'font-size="13" text-anchor="middle">beta</text>'
    )

    series: dict[tuple[str, float], list[SweepCell]] = {}
    for c in usable:
        series.setdefault((c.spec.estimator, c.spec.epsilon), []).append(c)
    legend_y = _MT + 10.0
    for idx, key in enumerate(sorted(series)):
        estimator, eps = key
        color = _PALETTE[idx % len(_PALETTE)]
        pts = sorted(series[key], key=lambda c: c.spec.beta.value)
        coords = [(px(c.spec.beta.value), py(float(c.n_star))) for c in pts]
        if len(coords) > 1:
            path = " ".join(f"{'M' if i == 0 else 'L'}{_fmt(x)},{_fmt(y)}" for i, (x, y) in enumerate(coords))
            parts.append(f'<path d="{path}" fill="none" stroke="{color}" stroke-width="1"/>')
        for x, y in coords:
            parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="{color}"/>')
        label = f"{estimator} eps={eps:g}"
        if key in slopes:
            label += f" slope={slopes[key]:.3f}"
        parts.append(
            f'<text x="{_fmt(_W - _MR + 12)}" y="{_fmt(legend_y)}" font-family="monospace" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
        legend_y += 18.0
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
