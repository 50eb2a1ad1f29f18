"""Minimal SVG scatter plots of embeddings."""
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

WIDTH, HEIGHT, PAD = 640, 520, 60


def _gradient(v: float) -> str:
    # blue (low) to red (high)
    r = int(round(40 + 200 * v))
    b = int(round(240 - 200 * v))
    return f"rgb({r},70,{b})"


def _scale(vals, lo_px, hi_px):
    lo, hi = float(np.min(vals)), float(np.max(vals))
    span = hi - lo or 1.0
    return lo_px + (np.asarray(vals) - lo) / span * (hi_px - lo_px), lo, hi


def scatter_svg(
    path,
    x,
    y,
    labels: Sequence[str],
    xlabel: str = "dim1",
    ylabel: str = "dim2",
    title: str = "",
    color: Optional[Sequence[float]] = None,
) -> Path:
    """Write a labelled scatter of ``(x, y)``; one ``<circle>`` per point."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(WIDTH),
        height=str(HEIGHT),
        viewBox=f"0 0 {WIDTH} {HEIGHT}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    left, right, top, bottom = PAD, WIDTH - PAD / 2, PAD / 2, HEIGHT - PAD
    axes = ET.SubElement(svg, "g", stroke="black", **{"stroke-width": "1"})
    ET.SubElement(axes, "line", x1=str(left), y1=str(bottom), x2=str(right), y2=str(bottom))
    ET.SubElement(axes, "line", x1=str(left), y1=str(bottom), x2=str(left), y2=str(top))
    px, xlo, xhi = _scale(x, left + 10, right - 10)
    py, ylo, yhi = _scale(y, bottom - 10, top + 10)

    text = {"font-family": "sans-serif", "font-size": "12"}
    ET.SubElement(svg, "text", x=str((left + right) / 2), y=str(HEIGHT - 15), **text, **{"text-anchor": "middle"}).text = xlabel
    ET.SubElement(
        svg, "text", x="15", y=str((top + bottom) / 2), transform=f"rotate(-90 15 {(top + bottom) / 2})",
        **text, **{"text-anchor": "middle"},
    ).text = ylabel
    for val, pos in ((xlo, left + 10), (xhi, right - 10)):
        ET.SubElement(svg, "text", x=f"{pos:.1f}", y=str(bottom + 15), **text, **{"text-anchor": "middle"}).text = f"{val:.3g}"
    for val, pos in ((ylo, bottom - 10), (yhi, top + 10)):
        ET.SubElement(svg, "text", x=str(left - 5), y=f"{pos:.1f}", **text, **{"text-anchor": "end"}).text = f"{val:.3g}"
    if title:
        ET.SubElement(svg, "text", x=str((left + right) / 2), y="20", **text, **{"text-anchor": "middle"}).text = title

    if color is not None:
        c = np.asarray(color, dtype=float)
        span = np.ptp(c) or 1.0
        fills = [_gradient((v - c.min()) / span) for v in c]
    else:
        fills = ["rgb(40,70,200)"] * len(x)
    pts = ET.SubElement(svg, "g")
    for lab, cx, cy, fill in zip(labels, px, py, fills):
        ET.SubElement(pts, "circle", cx=f"{cx:.2f}", cy=f"{cy:.2f}", r="5", fill=fill, stroke="black")
        ET.SubElement(pts, "text", x=f"{cx + 7:.2f}", y=f"{cy - 7:.2f}", **text).text = str(lab)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    return path
