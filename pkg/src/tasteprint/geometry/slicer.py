"""Horizontal mesh slicing into closed, oriented layer contours.

Each layer is sampled at its mid-height plane, which sidesteps degenerate
intersections with horizontal facets sitting exactly on layer boundaries.
Intersection segments are stitched into rings by snapping endpoints within
1e-6 mm; rings are wound CCW for outers and CW for holes by containment
parity and grouped into contours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tasteprint import SCHEMA_VERSION
from tasteprint.errors import OpenContourError
from tasteprint.geometry import polygon
from tasteprint.geometry.mesh import TriangleMesh

SNAP_TOL = 1e-6
_QUANT = 1.0 / SNAP_TOL


@dataclass(frozen=True)
class Contour:
    """One outer ring (closed, CCW) plus the holes it contains (closed, CW)."""

    outer: np.ndarray
    holes: tuple[np.ndarray, ...] = ()

    @property
    def area(self) -> float:
        return polygon.signed_area(self.outer) + sum(
            polygon.signed_area(h) for h in self.holes
        )

    def rings(self):
        yield self.outer
        yield from self.holes


@dataclass(frozen=True)
class LayerSlice:
    z_bottom: float
    z_top: float
    contours: tuple[Contour, ...]

    @property
    def height(self) -> float:
        return self.z_top - self.z_bottom

    @property
    def area(self) -> float:
        return sum(c.area for c in self.contours)

    def rings(self):
        for contour in self.contours:
            yield from contour.rings()


def point_in_layer(layer: LayerSlice, point) -> bool:
    """Even-odd containment over the layer's rings; boundary counts as inside."""
    return polygon.point_in_rings(list(layer.rings()), point)


def slice_mesh(mesh: TriangleMesh, layer_height: float) -> list[LayerSlice]:
    """Slice ``mesh`` into horizontal layers of ``layer_height`` (last may be shorter)."""
    if layer_height <= 0:
        raise ValueError("layer_height must be positive")
    lo, hi = mesh.bounding_box
    z_min, z_max = float(lo[2]), float(hi[2])
    height = z_max - z_min
    n_layers = max(1, math.ceil(height / layer_height - 1e-9))
    layers = []
    for k in range(n_layers):
        z_bottom = z_min + k * layer_height
        z_top = min(z_bottom + layer_height, z_max)
        plane_z = 0.5 * (z_bottom + z_top)
        rings = cross_section(mesh, plane_z, layer_index=k)
        contours = _organize_rings(rings)
        layers.append(LayerSlice(z_bottom=z_bottom, z_top=z_top, contours=contours))
    return layers


def cross_section(mesh: TriangleMesh, plane_z: float, layer_index: int = 0) -> list[np.ndarray]:
    """Closed rings of the mesh section at height ``plane_z``."""
    segments = _intersection_segments(mesh.triangles, plane_z)
    return _stitch(segments, layer_index)


def _intersection_segments(triangles: np.ndarray, plane_z: float) -> list[tuple]:
    d = triangles[:, :, 2] - plane_z
    # Vertices exactly on the plane side with the positives; a triangle
    # contributes iff it straddles (at least one strict negative and one
    # non-negative vertex). In-plane facets contribute nothing, and their
    # boundary edges are recovered once from the neighbor underneath.
    pos = d >= 0
    candidates = np.nonzero(pos.any(axis=1) & (~pos).any(axis=1))[0]
    segments = []
    edges = ((0, 1), (1, 2), (2, 0))
    for t in candidates:
        points = []
        for a, b in edges:
            if pos[t, a] == pos[t, b]:
                continue
            da, db = d[t, a], d[t, b]
            frac = da / (da - db)
            p = triangles[t, a, :2] + frac * (triangles[t, b, :2] - triangles[t, a, :2])
            points.append(p)
        if len(points) == 2:
            segments.append((points[0], points[1]))
    return segments


def _quantize(p) -> tuple[int, int]:
    return (int(round(p[0] * _QUANT)), int(round(p[1] * _QUANT)))


class _SnapIndex:
    """Maps 2D points to node ids, merging points within SNAP_TOL."""

    def __init__(self):
        self._cells: dict[tuple[int, int], list[int]] = {}
        self.points: list[np.ndarray] = []

    def node(self, p: np.ndarray) -> int:
        cx, cy = _quantize(p)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in self._cells.get((cx + dx, cy + dy), ()):
                    q = self.points[idx]
                    if abs(q[0] - p[0]) <= SNAP_TOL and abs(q[1] - p[1]) <= SNAP_TOL:
                        return idx
        idx = len(self.points)
        self.points.append(np.asarray(p, dtype=float))
        self._cells.setdefault((cx, cy), []).append(idx)
        return idx


def _stitch(segments, layer_index: int) -> list[np.ndarray]:
    if not segments:
        return []
    index = _SnapIndex()
    adjacency: dict[int, list[int]] = {}
    seen_edges = set()
    for p, q in segments:
        a = index.node(p)
        b = index.node(q)
        if a == b:
            continue  # zero-length sliver after snapping
        key = (min(a, b), max(a, b))
        if key in seen_edges:
            continue
        seen_edges.add(key)
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)

    for node, neighbors in adjacency.items():
        if len(neighbors) != 2:
            raise OpenContourError(
                layer_index,
                f"vertex near {tuple(np.round(index.points[node], 6))} has "
                f"{len(neighbors)} incident segments (need 2)",
            )

    rings = []
    visited: set[int] = set()
    for start in sorted(adjacency):
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        prev, current = start, adjacency[start][0]
        while current != start:
            chain.append(current)
            visited.add(current)
            n1, n2 = adjacency[current]
            prev, current = current, (n2 if n1 == prev else n1)
        if len(chain) < 3:
            raise OpenContourError(layer_index, "degenerate two-vertex loop")
        ring = np.array([index.points[i] for i in chain] + [index.points[chain[0]]])
        rings.append(ring)
    return rings


def _organize_rings(rings: list[np.ndarray]) -> tuple[Contour, ...]:
    """Orient rings by containment parity and group holes under their outers."""
    if not rings:
        return ()
    n = len(rings)
    abs_areas = [abs(polygon.signed_area(r)) for r in rings]
    depth = [0] * n
    containers: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        probe = rings[i][0]
        for j in range(n):
            if i == j:
                continue
            # Rings from distinct loops are disjoint, so a ring vertex is
            # strictly in or out of every other ring.
            if polygon.point_in_ring(rings[j], probe, include_boundary=False):
                depth[i] += 1
                containers[i].append(j)

    oriented = [
        polygon.canonical_ring(rings[i], ccw=(depth[i] % 2 == 0)) for i in range(n)
    ]

    contours: dict[int, list[int]] = {i: [] for i in range(n) if depth[i] % 2 == 0}
    for i in range(n):
        if depth[i] % 2 == 0:
            continue
        outer_candidates = [j for j in containers[i] if depth[j] % 2 == 0]
        parent = min(outer_candidates, key=lambda j: abs_areas[j])
        contours[parent].append(i)

    def sort_key(ring):
        return (float(ring[:, 0].min()), float(ring[:, 1].min()))

    result = []
    for outer_idx in sorted(contours, key=lambda i: sort_key(oriented[i])):
        holes = sorted((oriented[h] for h in contours[outer_idx]), key=sort_key)
        result.append(Contour(outer=oriented[outer_idx], holes=tuple(holes)))
    return tuple(result)


def slices_to_json(
    layers: list[LayerSlice],
    mesh_hash: str,
    layer_height: float,
    mesh_name: str = "",
) -> dict:
    """Serializable slice document. Ring roles are encoded by winding."""
    doc_layers = []
    for layer in layers:
        rings = [ring.tolist() for ring in layer.rings()]
        doc_layers.append(
            {
                "z_bottom": layer.z_bottom,
                "z_top": layer.z_top,
                "area": layer.area,
                "contours": rings,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "mesh_hash": mesh_hash,
        "mesh_name": mesh_name,
        "layer_height": layer_height,
        "layers": doc_layers,
    }


def slices_from_json(doc: dict) -> tuple[list[LayerSlice], str, float]:
    layers = []
    for entry in doc["layers"]:
        rings = [polygon.close_ring(np.asarray(r, dtype=float)) for r in entry["contours"]]
        layers.append(
            LayerSlice(
                z_bottom=float(entry["z_bottom"]),
                z_top=float(entry["z_top"]),
                contours=_organize_rings(rings),
            )
        )
    return layers, str(doc.get("mesh_hash", "")), float(doc.get("layer_height", 0.0))
