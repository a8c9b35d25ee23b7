import numpy as np
import pytest

from shapes import disc_ring
from tasteprint.geometry import polygon
from tasteprint.geometry.infill import generate_extrusion_paths
from tasteprint.geometry.slicer import Contour, LayerSlice, point_in_layer


def square_layer(side=10.0):
    ring = polygon.close_ring(
        np.array([[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]])
    )
    return LayerSlice(z_bottom=0.0, z_top=1.6, contours=(Contour(outer=ring),))


def annulus_layer(outer_r=15.0, inner_r=6.0):
    outer = disc_ring(outer_r, ccw=True)
    hole = disc_ring(inner_r, ccw=False)
    return LayerSlice(
        z_bottom=0.0, z_top=1.6, contours=(Contour(outer=outer, holes=(hole,)),)
    )


def test_density_zero_is_perimeter_only():
    path = generate_extrusion_paths(square_layer(), 0, infill_density=0.0)
    assert len(path.segments) == 1
    assert path.total_length == pytest.approx(40.0)


def test_square_infill_line_count_and_positions():
    path = generate_extrusion_paths(
        square_layer(), 0, infill_density=1.0, infill_spacing=1.6
    )
    infill = path.segments[1:]
    assert len(infill) == 6  # x = 1.6, 3.2, ..., 9.6 by spacing arithmetic
    xs = sorted(seg[0, 0] for seg in infill)
    assert np.allclose(xs, [1.6, 3.2, 4.8, 6.4, 8.0, 9.6])
    for seg in infill:
        assert seg[0, 0] == seg[1, 0]  # even layer: constant-x lines
        assert abs(seg[1, 1] - seg[0, 1]) == pytest.approx(10.0)


def test_odd_layer_runs_perpendicular():
    path = generate_extrusion_paths(
        square_layer(), 1, infill_density=1.0, infill_spacing=1.6
    )
    for seg in path.segments[1:]:
        assert seg[0, 1] == seg[1, 1]  # constant-y lines


def test_half_density_doubles_spacing():
    path = generate_extrusion_paths(
        square_layer(), 0, infill_density=0.5, infill_spacing=1.6
    )
    xs = sorted(seg[0, 0] for seg in path.segments[1:])
    assert np.allclose(xs, [3.2, 6.4, 9.6])


def test_annulus_infill_avoids_hole():
    layer = annulus_layer()
    path = generate_extrusion_paths(layer, 0, infill_density=1.0, infill_spacing=2.0)
    hole_ring = layer.contours[0].holes[0]
    infill = path.segments[2:]  # two perimeter rings first
    assert len(infill) > 0
    for seg in infill:
        # point-in-polygon oracle on sampled points along the line
        for t in np.linspace(0.05, 0.95, 7):
            p = seg[0] + t * (seg[1] - seg[0])
            assert point_in_layer(layer, p)
            assert not polygon.point_in_ring(hole_ring, p, include_boundary=False) or (
                polygon.point_on_ring(hole_ring, p, tol=1e-6)
            )
    # lines crossing the hole are split into two spans
    center_lines = [seg for seg in infill if abs(seg[0, 0]) < 5.0]
    assert len(center_lines) >= 4
    assert len(center_lines) % 2 == 0


def test_all_vertices_inside_layer():
    for layer, parity in ((square_layer(), 0), (annulus_layer(), 1)):
        path = generate_extrusion_paths(layer, parity, infill_density=1.0, infill_spacing=1.6)
        for seg in path.segments:
            for vertex in seg:
                assert point_in_layer(layer, vertex)


def test_total_length_is_segment_sum():
    path = generate_extrusion_paths(square_layer(), 0, infill_density=1.0, infill_spacing=1.6)
    expected = sum(
        float(np.sum(np.linalg.norm(np.diff(seg, axis=0), axis=1)))
        for seg in path.segments
    )
    assert path.total_length == pytest.approx(expected)


def test_degenerate_tiny_contour_is_perimeter_only():
    ring = polygon.close_ring(np.array([[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]]))
    layer = LayerSlice(z_bottom=0, z_top=1.6, contours=(Contour(outer=ring),))
    path = generate_extrusion_paths(layer, 0, infill_density=1.0, infill_spacing=1.6)
    assert len(path.segments) == 1
