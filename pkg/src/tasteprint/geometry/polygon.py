"""Planar ring primitives: areas, containment, boundary distance, scanline clipping.

Rings are (n, 2) float arrays, closed (first vertex repeated last). The
even-odd rule decides containment; points on any boundary count as inside.
"""

from __future__ import annotations

import numpy as np

# Matching tolerance for "on the boundary" queries, in mm.
BOUNDARY_TOL = 1e-6


def close_ring(vertices: np.ndarray) -> np.ndarray:
    """Return a closed copy of ``vertices`` (first point repeated at the end)."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise ValueError("ring needs at least 3 two-dimensional vertices")
    if not np.array_equal(v[0], v[-1]):
        v = np.vstack([v, v[0]])
    return v


def signed_area(ring: np.ndarray) -> float:
    """Shoelace area; positive for counter-clockwise winding."""
    x = ring[:-1, 0]
    y = ring[:-1, 1]
    xn = ring[1:, 0]
    yn = ring[1:, 1]
    return float(0.5 * np.sum(x * yn - xn * y))


def ring_length(ring: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(ring, axis=0), axis=1)))


def point_on_ring(ring: np.ndarray, point, tol: float = BOUNDARY_TOL) -> bool:
    """True when ``point`` lies within ``tol`` of any ring edge."""
    return distance_to_ring(ring, point) <= tol


def distance_to_ring(ring: np.ndarray, point) -> float:
    """Minimum Euclidean distance from ``point`` to the ring's edges."""
    p = np.asarray(point, dtype=float)
    a = ring[:-1]
    b = ring[1:]
    ab = b - a
    ap = p - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.zeros(len(a))
    nonzero = denom > 0
    t[nonzero] = np.einsum("ij,ij->i", ap[nonzero], ab[nonzero]) / denom[nonzero]
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(closest - p, axis=1)))


def _crossings(ring: np.ndarray, point) -> int:
    """Ray-cast crossing count for the horizontal ray from ``point`` to +x."""
    px, py = float(point[0]), float(point[1])
    x0 = ring[:-1, 0]
    y0 = ring[:-1, 1]
    x1 = ring[1:, 0]
    y1 = ring[1:, 1]
    straddles = (y0 > py) != (y1 > py)
    if not straddles.any():
        return 0
    x0s, y0s, x1s, y1s = x0[straddles], y0[straddles], x1[straddles], y1[straddles]
    xi = x0s + (py - y0s) * (x1s - x0s) / (y1s - y0s)
    return int(np.count_nonzero(px < xi))


def point_in_ring(ring: np.ndarray, point, include_boundary: bool = True) -> bool:
    """Even-odd containment for a single ring."""
    if include_boundary and point_on_ring(ring, point):
        return True
    return _crossings(ring, point) % 2 == 1


def point_in_rings(rings, point) -> bool:
    """Even-odd containment over a ring collection (holes handled by parity).

    Boundary points count as inside regardless of which ring they lie on.
    """
    total = 0
    for ring in rings:
        if point_on_ring(ring, point):
            return True
        total += _crossings(ring, point)
    return total % 2 == 1


def clip_axis_line(rings, axis: int, coord: float) -> list[tuple[float, float]]:
    """Intersect the line ``{axis}=coord`` with the even-odd interior of ``rings``.

    axis 0 clips the vertical line x=coord (spans are y intervals); axis 1
    clips the horizontal line y=coord. Returns interior spans sorted ascending.
    """
    other = 1 - axis
    hits: list[float] = []
    for ring in rings:
        a = ring[:-1]
        b = ring[1:]
        ca = a[:, axis]
        cb = b[:, axis]
        straddles = (ca > coord) != (cb > coord)
        if not straddles.any():
            continue
        ca_s, cb_s = ca[straddles], cb[straddles]
        oa = a[straddles, other]
        ob = b[straddles, other]
        t = (coord - ca_s) / (cb_s - ca_s)
        hits.extend((oa + t * (ob - oa)).tolist())
    hits.sort()
    spans = []
    for lo, hi in zip(hits[0::2], hits[1::2]):
        if hi - lo > BOUNDARY_TOL:
            spans.append((lo, hi))
    return spans


def bounding_box(rings) -> tuple[float, float, float, float]:
    """(min_x, min_y, max_x, max_y) over all ring vertices."""
    stacked = np.vstack([np.asarray(r) for r in rings])
    mins = stacked.min(axis=0)
    maxs = stacked.max(axis=0)
    return float(mins[0]), float(mins[1]), float(maxs[0]), float(maxs[1])


def canonical_ring(ring: np.ndarray, ccw: bool) -> np.ndarray:
    """Normalize winding and start vertex so equal rings serialize identically.

    The ring is rewound to the requested orientation and rotated to start at
    its lexicographically smallest vertex.
    """
    open_ring = ring[:-1]
    if (signed_area(ring) > 0) != ccw:
        open_ring = open_ring[::-1]
    start = int(np.lexsort((open_ring[:, 1], open_ring[:, 0]))[0])
    rolled = np.roll(open_ring, -start, axis=0)
    return np.vstack([rolled, rolled[0]])
