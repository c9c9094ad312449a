"""Deterministic SVG rendering of an ID/OOD plane with bindings and fits."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from .core import ClassStats, Modality
from .otl import Binding, LinearFit, PlanePoint

WIDTH = HEIGHT = 480
LEFT, TOP, RIGHT, BOTTOM = 60, 40, 20, 50
PLOT_W = WIDTH - LEFT - RIGHT
PLOT_H = HEIGHT - TOP - BOTTOM

COLORS = {Modality.TABULAR: "#1f77b4", Modality.EMBEDDED: "#2ca02c"}
FIT_COLORS = {m.value: c for m, c in COLORS.items()}


def to_px(x: float, y: float) -> tuple[float, float]:
    """Map plane coordinates in [0, 1]^2 to pixel coordinates."""
    return LEFT + x * PLOT_W, TOP + (1.0 - y) * PLOT_H


def _n(v: float) -> str:
    s = f"{v:.10f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _line(x1, y1, x2, y2, cls, extra="") -> str:
    return (f'<line class="{cls}" x1="{_n(x1)}" y1="{_n(y1)}" x2="{_n(x2)}" y2="{_n(y2)}"'
            f'{extra}/>')


def _text(x, y, s, cls="label", anchor="middle") -> str:
    return f'<text class="{cls}" x="{_n(x)}" y="{_n(y)}" text-anchor="{anchor}">{escape(s)}</text>'


def plane_svg(points: Sequence[PlanePoint], bindings: Sequence[Binding] = (),
              fits: Mapping[str, LinearFit] | None = None,
              class_stats: tuple[ClassStats, ClassStats] | None = None,
              title: str = "", x_label: str = "ID", y_label: str = "OOD") -> str:
    if not points:
        raise ValueError("cannot render an empty plane")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        "<style>.guide-x,.guide-y{stroke:#999;stroke-dasharray:4 3}"
        ".binding{stroke:#bbb;stroke-width:0.6}.axis{stroke:#000}"
        ".label{font:11px sans-serif}.fit{stroke-width:1.5}</style>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>',
        f'<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}"/></clipPath>',
    ]
    if title:
        out.append(_text(WIDTH / 2, 20, title, "title"))
    x0, y0 = to_px(0, 0)
    x1, y1 = to_px(1, 1)
    out.append(_line(x0, y0, x1, y0, "axis"))
    out.append(_line(x0, y0, x0, y1, "axis"))
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        tx, ty = to_px(t, t)
        out.append(_text(tx, y0 + 14, f"{t:g}"))
        out.append(_text(x0 - 6, ty + 4, f"{t:g}", anchor="end"))
    out.append(_text((x0 + x1) / 2, HEIGHT - 12, x_label))
    out.append(f'<text class="label" transform="translate(16 {_n((y0 + y1) / 2)}) rotate(-90)" '
               f'text-anchor="middle">{escape(y_label)}</text>')

    if class_stats is not None:
        sS, sQ = class_stats
        for name, ratio in (("TR", sS.tr), ("FR", sS.fr)):
            gx, _ = to_px(float(ratio), 0)
            out.append(_line(gx, y0, gx, y1, "guide-x", f' data-ratio="{name}"'))
        for name, ratio in (("TR", sQ.tr), ("FR", sQ.fr)):
            _, gy = to_px(0, float(ratio))
            out.append(_line(x0, gy, x1, gy, "guide-y", f' data-ratio="{name}"'))

    for b in bindings:
        ax, ay = to_px(b.tabular_point.x, b.tabular_point.y)
        bx, by = to_px(b.embedded_point.x, b.embedded_point.y)
        out.append(_line(ax, ay, bx, by, "binding", f" data-config={quoteattr(b.config_id)}"))

    for i, (name, fit) in enumerate(sorted((fits or {}).items())):
        fx0, fy0 = to_px(0.0, fit.intercept)
        fx1, fy1 = to_px(1.0, fit.intercept + fit.slope)
        color = FIT_COLORS.get(name, "#d62728")
        out.append(_line(fx0, fy0, fx1, fy1, f"fit fit-{name}", f' stroke="{color}" clip-path="url(#plot)"'))
        r2 = "degenerate" if fit.r2 is None else f"{fit.r2:.3f}"
        out.append(_text(x0 + 8, y1 + 14 + 14 * i, f"{name}: R2 = {r2} (n={fit.n})", anchor="start"))

    for p in points:
        px, py = to_px(p.x, p.y)
        stroke = ' stroke="#d62728" stroke-width="1"' if p.collapsed else ""
        out.append(f'<circle class="point {p.modality.value}" cx="{_n(px)}" cy="{_n(py)}" r="3" '
                   f'fill="{COLORS[p.modality]}" fill-opacity="0.7"{stroke} '
                   f'data-config={quoteattr(p.config_id)}/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plane_svg(points, bindings, fits, class_stats, path: str | Path, **kwargs) -> Path:
    path = Path(path)
    path.write_text(plane_svg(points, bindings, fits, class_stats, **kwargs), encoding="utf-8", newline="\n")
    return path
