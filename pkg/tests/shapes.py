"""Hand-built mesh fixtures: cube STL bytes, tessellated spheres and tori."""

from __future__ import annotations

import math
import struct

import numpy as np

from tasteprint.geometry.mesh import TriangleMesh

# Unit cube faces as quads (vertex indices into the 8 corners), outward winding.
_CUBE_QUADS = [
    (0, 3, 2, 1),  # bottom (z=0)
    (4, 5, 6, 7),  # top (z=1)
    (0, 1, 5, 4),  # y=0
    (2, 3, 7, 6),  # y=1
    (1, 2, 6, 5),  # x=1
    (3, 0, 4, 7),  # x=0
]


def box_triangles(size=(10.0, 10.0, 10.0), origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    sx, sy, sz = size
    ox, oy, oz = origin
    corners = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=float,
    ) * [sx, sy, sz] + [ox, oy, oz]
    tris = []
    for a, b, c, d in _CUBE_QUADS:
        tris.append([corners[a], corners[b], corners[c]])
        tris.append([corners[a], corners[c], corners[d]])
    return np.array(tris)


def box_mesh(size=(10.0, 10.0, 10.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    return TriangleMesh(box_triangles(size, origin))


def stl_binary_bytes(triangles: np.ndarray, header: bytes = b"") -> bytes:
    header = (header + b" " * 80)[:80]
    out = [header, struct.pack("<I", len(triangles))]
    for tri in triangles:
        v0, v1, v2 = (np.asarray(v, dtype=float) for v in tri)
        n = np.cross(v1 - v0, v2 - v0)
        norm = np.linalg.norm(n)
        n = n / norm if norm > 0 else n
        out.append(struct.pack("<12fH", *n, *v0, *v1, *v2, 0))
    return b"".join(out)


def stl_ascii_text(triangles: np.ndarray, name: str = "fixture") -> str:
    lines = [f"solid {name}"]
    for tri in triangles:
        v0, v1, v2 = (np.asarray(v, dtype=float) for v in tri)
        n = np.cross(v1 - v0, v2 - v0)
        norm = np.linalg.norm(n)
        n = n / norm if norm > 0 else n
        lines.append(f"  facet normal {n[0]:.6e} {n[1]:.6e} {n[2]:.6e}")
        lines.append("    outer loop")
        for v in (v0, v1, v2):
            lines.append(f"      vertex {v[0]:.6e} {v[1]:.6e} {v[2]:.6e}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return "\n".join(lines) + "\n"


def _grid_triangles(vertex_fn, n_u: int, n_v: int, wrap_u: bool, wrap_v: bool) -> np.ndarray:
    """Triangulate a parametric grid; wrap closes the seam in that direction."""
    nu = n_u if wrap_u else n_u + 1
    nv = n_v if wrap_v else n_v + 1
    grid = np.array([[vertex_fn(i, j) for j in range(nv)] for i in range(nu)])
    tris = []
    for i in range(n_u):
        for j in range(n_v):
            i1 = (i + 1) % nu if wrap_u else i + 1
            j1 = (j + 1) % nv if wrap_v else j + 1
            a, b, c, d = grid[i, j], grid[i1, j], grid[i1, j1], grid[i, j1]
            tris.append([a, b, c])
            tris.append([a, c, d])
    return np.array(tris)


def sphere_mesh(radius=10.0, center=(0.0, 0.0, 0.0), n_theta=96, n_phi=64) -> TriangleMesh:
    """UV sphere; poles are triangle fans (degenerate pole quads collapse)."""
    cx, cy, cz = center

    def vertex(i, j):
        theta = 2 * math.pi * i / n_theta
        phi = math.pi * j / n_phi  # 0 at +z pole
        return (
            cx + radius * math.sin(phi) * math.cos(theta),
            cy + radius * math.sin(phi) * math.sin(theta),
            cz + radius * math.cos(phi),
        )

    tris = _grid_triangles(vertex, n_theta, n_phi, wrap_u=True, wrap_v=False)
    areas = 0.5 * np.linalg.norm(
        np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1
    )
    return TriangleMesh(tris[areas > 1e-12])


def torus_mesh(
    ring_radius=10.0,
    tube_radius=3.0,
    center=(0.0, 0.0, 0.0),
    axis="z",
    n_ring=128,
    n_tube=48,
) -> TriangleMesh:
    """Torus around the given axis ('z': lying flat, 'y': standing on edge)."""
    cx, cy, cz = center

    def vertex(i, j):
        u = 2 * math.pi * i / n_ring
        v = 2 * math.pi * j / n_tube
        r = ring_radius + tube_radius * math.cos(v)
        x, y, z = r * math.cos(u), r * math.sin(u), tube_radius * math.sin(v)
        if axis == "y":
            x, y, z = x, z, y
        return (cx + x, cy + y, cz + z)

    return TriangleMesh(_grid_triangles(vertex, n_ring, n_tube, wrap_u=True, wrap_v=True))


def disc_ring(radius: float, center=(0.0, 0.0), n=256, ccw=True) -> np.ndarray:
    """Closed polygon approximating a circle."""
    cx, cy = center
    sign = 1.0 if ccw else -1.0
    angles = sign * 2 * math.pi * np.arange(n) / n
    pts = np.column_stack([cx + radius * np.cos(angles), cy + radius * np.sin(angles)])
    return np.vstack([pts, pts[0]])
