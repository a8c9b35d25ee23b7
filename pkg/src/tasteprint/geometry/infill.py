"""Extrusion path generation: perimeter loops plus rectilinear infill.

Infill lines run at constant x on even layers and constant y on odd layers,
spaced ``infill_spacing / infill_density`` apart and clipped to the layer
interior by even-odd scanline spans. Density 0 yields perimeters only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tasteprint.geometry import polygon
from tasteprint.geometry.slicer import LayerSlice

_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class ExtrusionPath:
    layer_index: int
    segments: tuple[np.ndarray, ...]  # polylines; perimeter loops first

    @property
    def total_length(self) -> float:
        return float(
            sum(np.sum(np.linalg.norm(np.diff(s, axis=0), axis=1)) for s in self.segments)
        )


def generate_extrusion_paths(
    layer: LayerSlice,
    layer_index: int,
    infill_density: float = 0.0,
    infill_spacing: float = 1.6,
) -> ExtrusionPath:
    if not 0.0 <= infill_density <= 1.0:
        raise ValueError("infill_density must be in [0, 1]")
    if infill_spacing <= 0:
        raise ValueError("infill_spacing must be positive")

    segments: list[np.ndarray] = [np.array(ring) for ring in layer.rings()]
    if infill_density > 0 and layer.contours:
        segments.extend(_rectilinear_lines(layer, layer_index, infill_spacing / infill_density))
    return ExtrusionPath(layer_index=layer_index, segments=tuple(segments))


def _rectilinear_lines(layer: LayerSlice, layer_index: int, step: float) -> list[np.ndarray]:
    rings = list(layer.rings())
    min_x, min_y, max_x, max_y = polygon.bounding_box(rings)
    axis = layer_index % 2  # even layers: lines of constant x
    lo = (min_x, min_y)[axis]
    hi = (max_x, max_y)[axis]

    lines = []
    coord = lo + step
    line_index = 0
    while coord < hi - _EDGE_EPS:
        spans = polygon.clip_axis_line(rings, axis, coord)
        # Serpentine ordering: alternate span direction per scanline.
        if line_index % 2:
            spans = [(b, a) for a, b in reversed(spans)]
        for a, b in spans:
            if axis == 0:
                lines.append(np.array([[coord, a], [coord, b]]))
            else:
                lines.append(np.array([[a, coord], [b, coord]]))
        coord += step
        line_index += 1
    return lines
