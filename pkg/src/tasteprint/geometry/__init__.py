"""Mesh parsing, slicing, and planar path generation."""

from tasteprint.geometry.mesh import TriangleMesh, load_mesh
from tasteprint.geometry.slicer import (
    Contour,
    LayerSlice,
    point_in_layer,
    slice_mesh,
    slices_from_json,
    slices_to_json,
)
from tasteprint.geometry.infill import ExtrusionPath, generate_extrusion_paths

__all__ = [
    "TriangleMesh",
    "load_mesh",
    "Contour",
    "LayerSlice",
    "slice_mesh",
    "point_in_layer",
    "slices_to_json",
    "slices_from_json",
    "ExtrusionPath",
    "generate_extrusion_paths",
]
