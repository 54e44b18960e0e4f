"""Minimal deterministic SVG emitters (no plotting dependency).

Scatter heatmaps use a fixed blue-white-red diverging ramp: values are
mapped linearly from [vmin, vmax] onto blue (#2166ac) through white
(#f7f7f7) to red (#b2182b). No timestamps or randomness anywhere, so the
same data always yields byte-identical files.
"""

from __future__ import annotations

import numpy as np

_BLUE = (0x21, 0x66, 0xAC)
_WHITE = (0xF7, 0xF7, 0xF7)
_RED = (0xB2, 0x18, 0x2B)

_CURVE_COLORS = ("#2166ac", "#b2182b", "#1b7837", "#762a83", "#e08214",
                 "#35978f", "#c51b7d", "#4d4d4d", "#8c510a", "#5e3c99")


def diverging_color(value, vmin, vmax):
    """Hex color on the blue-white-red ramp; midpoint at (vmin+vmax)/2."""
    if vmax <= vmin:
        t = 0.5
    else:
        t = (value - vmin) / (vmax - vmin)
    t = min(max(float(t), 0.0), 1.0)
    if t < 0.5:
        lo, hi, u = _BLUE, _WHITE, t * 2.0
    else:
        lo, hi, u = _WHITE, _RED, (t - 0.5) * 2.0
    rgb = tuple(round(a + (b - a) * u) for a, b in zip(lo, hi))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _axes(xs, ys, width, height, margin):
    xmin, xmax = float(np.min(xs)), float(np.max(xs))
    ymin, ymax = float(np.min(ys)), float(np.max(ys))
    xpad = (xmax - xmin) * 0.05 or 1.0
    ypad = (ymax - ymin) * 0.05 or 1.0
    xmin, xmax = xmin - xpad, xmax + xpad
    ymin, ymax = ymin - ypad, ymax + ypad

    def to_px(x, y):
        px = margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin)
        py = height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin)
        return px, py

    return to_px


def scatter_heatmap_svg(path, points, values, title="", width=640, height=520,
                        radius=2.5):
    """Scatter of 2-D points colored by value on the diverging ramp."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    values = np.asarray(values, dtype=np.float64)
    vmax = float(np.max(np.abs(values))) or 1.0
    to_px = _axes(points[:, 0], points[:, 1], width, height, margin=40)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    for (x, y), v in zip(points, values):
        px, py = to_px(x, y)
        color = diverging_color(v, -vmax, vmax)
        parts.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{radius}" '
            f'fill="{color}" fill-opacity="0.85"/>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def curves_svg(path, x_values, series, title="", xlabel="", ylabel="",
               width=640, height=480):
    """Line chart of several named series over a shared x grid.

    series: mapping name -> (values, stderr or None); stderr draws a band.
    """
    xs = np.asarray(x_values, dtype=np.float64)
    all_y = []
    for vals, err in series.values():
        vals = np.asarray(vals, dtype=np.float64)
        all_y.extend(vals)
        if err is not None:
            err = np.asarray(err, dtype=np.float64)
            all_y.extend(vals + err)
            all_y.extend(vals - err)
    to_px = _axes(xs, np.asarray(all_y), width, height, margin=50)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {height / 2:.1f})">{ylabel}</text>'
        )
    for idx, (name, (vals, err)) in enumerate(series.items()):
        color = _CURVE_COLORS[idx % len(_CURVE_COLORS)]
        vals = np.asarray(vals, dtype=np.float64)
        if err is not None:
            err = np.asarray(err, dtype=np.float64)
            upper = [to_px(x, y) for x, y in zip(xs, vals + err)]
            lower = [to_px(x, y) for x, y in zip(xs, vals - err)]
            pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in upper + lower[::-1])
            parts.append(
                f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15"/>'
            )
        pts = " ".join(
            f"{px:.2f},{py:.2f}" for px, py in (to_px(x, y) for x, y in zip(xs, vals))
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        ty = 40 + idx * 16
        parts.append(
            f'<rect x="{width - 170}" y="{ty - 9}" width="12" height="3" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{width - 152}" y="{ty}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
