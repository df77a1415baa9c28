"""Minimal SVG rendering of patterns and tracks for visual inspection."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Detection, Pattern
from .tracksio import PathLike

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_CORRIDOR_FILL = "#b0c4de"


def _corridor_outline(pattern: Pattern) -> np.ndarray:
    """Closed polygon tracing the corridor: one side out, the other back."""
    v = pattern.vertices
    seg = np.diff(v, axis=0)
    seg /= np.linalg.norm(seg, axis=1, keepdims=True)
    normals = np.stack([-seg[:, 1], seg[:, 0]], axis=1)
    vertex_n = np.vstack([normals[:1], normals[:-1] + normals[1:], normals[-1:]])
    lengths = np.linalg.norm(vertex_n, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    vertex_n /= lengths
    left = v + pattern.width * vertex_n
    right = v - pattern.width * vertex_n
    return np.vstack([left, right[::-1]])


def render_svg(
    patterns: Sequence[Pattern],
    tracks: Sequence[Sequence[Detection]],
    size: int = 640,
) -> str:
    """Render corridors, centerlines, and tracks into an SVG document.

    Each non-empty pattern contributes a corridor polygon and a centerline
    polyline; each track contributes one polyline.  Valid output with just
    the frame is produced when both inputs are empty.
    """
    drawn = [p for p in patterns if not p.is_empty]
    points: list[tuple[float, float]] = []
    for pattern in drawn:
        points.extend(map(tuple, _corridor_outline(pattern)))
    for track in tracks:
        points.extend(det.pos for det in track)
    if points:
        arr = np.asarray(points)
        x0, y0 = arr.min(axis=0)
        x1, y1 = arr.max(axis=0)
    else:
        x0, y0, x1, y1 = 0.0, 0.0, 1.0, 1.0
    span = max(x1 - x0, y1 - y0, 1e-9)
    pad = 0.05 * span
    x0, y0, x1, y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad
    scale = size / max(x1 - x0, y1 - y0)
    width = (x1 - x0) * scale
    height = (y1 - y0) * scale

    def to_px(p: tuple[float, float]) -> tuple[float, float]:
        return ((p[0] - x0) * scale, height - (p[1] - y0) * scale)

    def path_points(pts) -> str:
        return " ".join(f"{px:.2f},{py:.2f}" for px, py in (to_px(p) for p in pts))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2f}" height="{height:.2f}" '
        f'viewBox="0 0 {width:.2f} {height:.2f}">',
        f'<rect x="0" y="0" width="{width:.2f}" height="{height:.2f}" '
        'fill="white" stroke="#333333" stroke-width="1"/>',
    ]
    ox, oy = to_px((x0 + pad, y0 + pad))
    parts.append(
        f'<line x1="{ox:.2f}" y1="{oy:.2f}" x2="{width - ox:.2f}" y2="{oy:.2f}" '
        'stroke="#999999" stroke-width="0.5"/>'
    )
    parts.append(
        f'<line x1="{ox:.2f}" y1="{oy:.2f}" x2="{ox:.2f}" y2="{height - oy:.2f}" '
        'stroke="#999999" stroke-width="0.5"/>'
    )
    for pattern in drawn:
        outline = path_points(map(tuple, _corridor_outline(pattern)))
        parts.append(f'<polygon points="{outline}" fill="{_CORRIDOR_FILL}" fill-opacity="0.35"/>')
        center = path_points(pattern.centerline)
        parts.append(
            f'<polyline points="{center}" fill="none" stroke="#555555" '
            'stroke-width="1.5" stroke-dasharray="6 4"/>'
        )
    for t_idx, track in enumerate(tracks):
        color = _PALETTE[t_idx % len(_PALETTE)]
        pts = path_points(det.pos for det in track)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
    parts.append("</svg>")
    return "".join(part + "\n" for part in parts)


def write_plot(
    path: PathLike,
    patterns: Sequence[Pattern],
    tracks: Sequence[Sequence[Detection]],
    size: int = 640,
) -> None:
    Path(path).write_text(render_svg(patterns, tracks, size))
