"""Minimal SVG 1.1 scatter plots.

Circles are written in data coordinates inside a transformed group, so a
reader can recover the plotted values straight from ``cx`` and ``cy``.
Coordinates are formatted with ``%.6f``.
"""

import xml.etree.ElementTree as ET

import numpy as np

__all__ = ["scatter_svg", "read_scatter_svg"]

_NS = "http://www.w3.org/2000/svg"


def scatter_svg(points, xlim=(0.0, 2.0), ylim=(0.0, 2.0), size=480, margin=40, radius=1.2, title=None,
                xlabel="zeta(x)", ylabel="zeta(1)"):
    """Render ``(n, 2)`` points as an SVG document string."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    inner = size - 2 * margin
    sx = inner / (xlim[1] - xlim[0])
    sy = inner / (ylim[1] - ylim[0])
    r = radius / sx
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="{_NS}" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
    ]
    if title:
        lines.append(f"<title>{title}</title>")
    lines += [
        f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" fill="none" stroke="black"/>',
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{size / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {size / 2})">{ylabel}</text>',
        f'<g id="points" fill="black" fill-opacity="0.5" '
        f'transform="translate({margin - xlim[0] * sx:.6f},{size - margin + ylim[0] * sy:.6f}) '
        f'scale({sx:.6f},{-sy:.6f})">',
    ]
    lines += [f'<circle cx="{x:.6f}" cy="{y:.6f}" r="{r:.6f}"/>' for x, y in pts]
    lines += ["</g>", "</svg>", ""]
    return "\n".join(lines)


def read_scatter_svg(text):
    """Recover the ``(n, 2)`` data points from :func:`scatter_svg` output."""
    root = ET.fromstring(text.encode("utf-8") if isinstance(text, str) else text)
    group = root.find(f"{{{_NS}}}g[@id='points']")
    if group is None:
        raise ValueError("no point group in SVG")
    return np.array([(float(c.get("cx")), float(c.get("cy"))) for c in group.findall(f"{{{_NS}}}circle")])
