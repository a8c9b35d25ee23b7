import numpy as np

from shapes import disc_ring
from tasteprint.geometry import polygon


SQUARE = polygon.close_ring(np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]))
HOLE = polygon.close_ring(np.array([[4.0, 4.0], [4.0, 6.0], [6.0, 6.0], [6.0, 4.0]]))  # CW


def raycast_oracle(rings, p):
    """Scalar even-odd ray cast, written independently of the library path."""
    inside = False
    for ring in rings:
        for i in range(len(ring) - 1):
            x0, y0 = ring[i]
            x1, y1 = ring[i + 1]
            if (y0 > p[1]) != (y1 > p[1]):
                xi = x0 + (p[1] - y0) * (x1 - x0) / (y1 - y0)
                if p[0] < xi:
                    inside = not inside
    return inside


def test_signed_area_orientation():
    assert polygon.signed_area(SQUARE) == 100.0
    assert polygon.signed_area(SQUARE[::-1]) == -100.0
    assert polygon.signed_area(HOLE) == -4.0


def test_containment_basics():
    assert polygon.point_in_rings([SQUARE], (5, 5))
    assert not polygon.point_in_rings([SQUARE], (-1, -1))
    # boundary counts as inside
    assert polygon.point_in_rings([SQUARE], (0, 5))
    assert polygon.point_in_rings([SQUARE], (10, 10))
    # hole interior is outside, hole boundary is inside
    assert not polygon.point_in_rings([SQUARE, HOLE], (5, 5))
    assert polygon.point_in_rings([SQUARE, HOLE], (4, 5))
    assert polygon.point_in_rings([SQUARE, HOLE], (2, 2))


def test_containment_matches_raycast_oracle():
    rng = np.random.default_rng(7)
    fixtures = [
        [SQUARE],
        [SQUARE, HOLE],
        [disc_ring(15.0, center=(2.0, -3.0)), disc_ring(6.0, center=(2.0, -3.0), ccw=False)],
    ]
    for rings in fixtures:
        points = rng.uniform(-20, 20, size=(1000, 2))
        for p in points:
            assert polygon.point_in_rings(rings, p) == raycast_oracle(rings, p)


def test_distance_to_ring():
    assert polygon.distance_to_ring(SQUARE, (5, 5)) == 5.0
    assert polygon.distance_to_ring(SQUARE, (-3, 0)) == 3.0
    assert polygon.distance_to_ring(SQUARE, (0, 0)) == 0.0


def test_clip_axis_line_square_and_hole():
    spans = polygon.clip_axis_line([SQUARE], 0, 3.0)
    assert np.allclose(spans, [(0.0, 10.0)])
    spans = polygon.clip_axis_line([SQUARE, HOLE], 0, 5.0)
    assert np.allclose(spans, [(0.0, 4.0), (6.0, 10.0)])
    # line outside the polygon
    assert polygon.clip_axis_line([SQUARE], 0, 12.0) == []
    # horizontal variant
    spans = polygon.clip_axis_line([SQUARE, HOLE], 1, 5.0)
    assert np.allclose(spans, [(0.0, 4.0), (6.0, 10.0)])


def test_canonical_ring_is_winding_and_start_normalized():
    rolled = np.vstack([SQUARE[2:-1], SQUARE[:2], SQUARE[2]])
    canon_a = polygon.canonical_ring(SQUARE, ccw=True)
    canon_b = polygon.canonical_ring(rolled, ccw=True)
    assert np.allclose(canon_a, canon_b)
    assert polygon.signed_area(polygon.canonical_ring(SQUARE, ccw=False)) == -100.0
