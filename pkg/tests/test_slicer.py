import math

import numpy as np
import pytest

from shapes import box_mesh, box_triangles, sphere_mesh, torus_mesh
from tasteprint.errors import OpenContourError
from tasteprint.geometry.mesh import TriangleMesh
from tasteprint.geometry.slicer import (
    point_in_layer,
    slice_mesh,
    slices_from_json,
    slices_to_json,
)


def test_cube_layers(cube_mesh):
    layers = slice_mesh(cube_mesh, 1.6)
    assert len(layers) == 7
    for k, layer in enumerate(layers):
        assert layer.z_bottom == pytest.approx(1.6 * k)
        assert len(layer.contours) == 1
        assert layer.contours[0].holes == ()
        assert layer.area == pytest.approx(100.0, abs=1e-9)
        ring = layer.contours[0].outer
        assert ring[:, 0].min() == pytest.approx(0.0)
        assert ring[:, 0].max() == pytest.approx(10.0)
    # all but the last layer are full height; the last is the remainder
    assert layers[0].height == pytest.approx(1.6)
    assert layers[-1].z_top == pytest.approx(10.0)
    assert layers[-1].height == pytest.approx(0.4)


def test_cube_volume_exact(cube_mesh):
    layers = slice_mesh(cube_mesh, 1.6)
    volume = sum(layer.area * layer.height for layer in layers)
    assert volume == pytest.approx(1000.0, rel=1e-9)


def test_sphere_equator_circle():
    mesh = sphere_mesh(radius=10.0, n_theta=96, n_phi=64)
    layers = slice_mesh(mesh, 4.0)  # planes at -8, -4, 0, 4, 8
    assert len(layers) == 5
    equator = layers[2]
    assert equator.z_bottom == pytest.approx(-2.0)
    # analytic circle area oracle
    assert equator.area == pytest.approx(math.pi * 100.0, rel=0.01)
    assert len(equator.contours) == 1


def test_sphere_volume_within_two_percent():
    mesh = sphere_mesh(radius=10.0, n_theta=96, n_phi=64)
    layers = slice_mesh(mesh, 0.4)
    volume = sum(layer.area * layer.height for layer in layers)
    analytic = 4.0 / 3.0 * math.pi * 1000.0
    assert abs(volume - analytic) / analytic < 0.02


def test_convex_solids_have_single_outer_ring():
    for mesh in (box_mesh(), sphere_mesh(radius=8.0, n_theta=48, n_phi=32)):
        for layer in slice_mesh(mesh, 1.0):
            assert len(layer.contours) == 1
            assert layer.contours[0].holes == ()


def test_flat_torus_layer_has_hole():
    mesh = torus_mesh(ring_radius=10.0, tube_radius=3.0, axis="z", center=(0, 0, 3.0))
    layers = slice_mesh(mesh, 2.0)  # planes at 1, 3, 5
    mid = layers[1]
    assert len(mid.contours) == 1
    assert len(mid.contours[0].holes) == 1
    assert mid.area == pytest.approx(math.pi * (13.0**2 - 7.0**2), rel=0.01)
    # analytic containment for the torus cross-section
    assert not point_in_layer(mid, (0.0, 0.0))  # inside the hole
    assert point_in_layer(mid, (10.0, 0.0))
    assert not point_in_layer(mid, (14.0, 0.0))


def test_standing_torus_gives_two_outer_rings():
    mesh = torus_mesh(ring_radius=10.0, tube_radius=3.0, axis="y", center=(0, 0, 13.0))
    layers = slice_mesh(mesh, 2.0)
    mid = layers[6]  # spans z in [12, 14], plane at 13 = torus mid-plane
    assert len(mid.contours) == 2
    for contour in mid.contours:
        assert contour.holes == ()
        assert contour.area == pytest.approx(math.pi * 9.0, rel=0.01)
    centers = sorted(float(np.mean(c.outer[:-1, 0])) for c in mid.contours)
    assert centers[0] == pytest.approx(-10.0, abs=0.05)
    assert centers[1] == pytest.approx(10.0, abs=0.05)


def test_slicing_is_deterministic(cube_mesh):
    a = slice_mesh(cube_mesh, 1.6)
    b = slice_mesh(cube_mesh, 1.6)
    for la, lb in zip(a, b):
        for ca, cb in zip(la.contours, lb.contours):
            assert np.array_equal(ca.outer, cb.outer)
            assert all(np.array_equal(x, y) for x, y in zip(ca.holes, cb.holes))


def test_open_contour_reports_layer():
    tris = box_triangles(size=(10, 10, 10))
    mesh = TriangleMesh(np.delete(tris, 4, axis=0))  # remove one wall triangle
    with pytest.raises(OpenContourError) as err:
        slice_mesh(mesh, 1.6)
    assert err.value.layer_index == 0


def test_slices_json_round_trip(cube_mesh):
    layers = slice_mesh(cube_mesh, 1.6)
    doc = slices_to_json(layers, mesh_hash="abc123", layer_height=1.6)
    loaded, mesh_hash, layer_height = slices_from_json(doc)
    assert mesh_hash == "abc123"
    assert layer_height == 1.6
    assert len(loaded) == len(layers)
    for la, lb in zip(layers, loaded):
        assert la.z_bottom == lb.z_bottom
        assert la.z_top == lb.z_top
        assert la.area == pytest.approx(lb.area)
        for ca, cb in zip(la.contours, lb.contours):
            assert np.allclose(ca.outer, cb.outer)
