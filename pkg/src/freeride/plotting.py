"""Minimal SVG line charts of regret against round (log-x axis)."""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from typing import Sequence

import numpy as np

MAX_POINTS = 500
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def subsample(x: np.ndarray, max_points: int = MAX_POINTS) -> np.ndarray:
    """Indices of at most ``max_points`` evenly spread entries, always keeping both ends."""
    n = len(x)
    if n <= max_points:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, max_points).round().astype(int))


def regret_svg(
    t: Sequence[float],
    series: Sequence[Sequence[float]],
    labels: Sequence[str],
    title: str = "mean realized regret",
    width: int = 720,
    height: int = 440,
) -> str:
    t = np.asarray(t, dtype=float)
    ys = [np.asarray(s, dtype=float) for s in series]
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    lx0, lx1 = math.log10(max(t[0], 1.0)), math.log10(max(t[-1], 1.0))
    if lx1 <= lx0:
        lx1 = lx0 + 1.0
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    y0, y1 = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    y0 = min(y0, 0.0)
    if y1 <= y0:
        y1 = y0 + 1.0

    def px(v):
        return left + (math.log10(max(v, 1.0)) - lx0) / (lx1 - lx0) * pw

    def py(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width), height=str(height),
                     viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    ET.SubElement(svg, "text", x=str(left), y="24", attrib={"font-size": "15", "font-family": "sans-serif"}).text = title
    axes = ET.SubElement(svg, "g", stroke="black", attrib={"stroke-width": "1"})
    ET.SubElement(axes, "line", x1=str(left), y1=str(top + ph), x2=str(left + pw), y2=str(top + ph))
    ET.SubElement(axes, "line", x1=str(left), y1=str(top), x2=str(left), y2=str(top + ph))
    ticks = ET.SubElement(svg, "g", attrib={"font-size": "11", "font-family": "sans-serif"})
    for e in range(math.ceil(lx0), math.floor(lx1) + 1):
        x = px(10.0**e)
        ET.SubElement(axes, "line", x1=f"{x:.2f}", y1=str(top + ph), x2=f"{x:.2f}", y2=str(top + ph + 5))
        ET.SubElement(ticks, "text", x=f"{x:.2f}", y=str(top + ph + 18), attrib={"text-anchor": "middle"}).text = f"1e{e}"
    for v in np.linspace(y0, y1, 5):
        y = py(v)
        ET.SubElement(axes, "line", x1=str(left - 5), y1=f"{y:.2f}", x2=str(left), y2=f"{y:.2f}")
        ET.SubElement(ticks, "text", x=str(left - 8), y=f"{y + 4:.2f}", attrib={"text-anchor": "end"}).text = f"{v:.4g}"
    ET.SubElement(ticks, "text", x=str(left + pw / 2), y=str(height - 10), attrib={"text-anchor": "middle"}).text = "round t"

    keep = subsample(t)
    for i, (y, label) in enumerate(zip(ys, labels)):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(t[j]):.2f},{py(y[j]):.2f}" for j in keep if np.isfinite(y[j]))
        ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=color,
                      attrib={"stroke-width": "1.5", "data-label": label})
        ly = top + 14 + 16 * i
        ET.SubElement(svg, "line", x1=str(left + pw + 12), y1=str(ly - 4), x2=str(left + pw + 32), y2=str(ly - 4),
                      stroke=color, attrib={"stroke-width": "2"})
        ET.SubElement(ticks, "text", x=str(left + pw + 36), y=str(ly)).text = label
    return ET.tostring(svg, encoding="unicode")
