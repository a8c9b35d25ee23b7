import math

import numpy as np
import pytest

from shapes import disc_ring
from tasteprint.calibration import default_calibration, predict_mass
from tasteprint.errors import CapacityError, PlacementError
from tasteprint.geometry import polygon
from tasteprint.geometry.slicer import Contour, LayerSlice, point_in_layer
from tasteprint.planner import (
    DEFAULT_CHANNELS,
    SprayEvent,
    TasteChannel,
    add_free_event,
    allocate_total_amount,
    design_from_json,
    design_hash,
    design_to_json,
    fill_pattern,
    hex_lattice_points,
    new_design,
    validate_design,
)

CAL = default_calibration()


def layer_from_rings(*rings, z_bottom=0.0, z_top=1.6):
    outer = rings[0]
    holes = tuple(rings[1:])
    return LayerSlice(z_bottom=z_bottom, z_top=z_top,
                      contours=(Contour(outer=outer, holes=holes),))


def square_ring(side, origin=(0.0, 0.0)):
    ox, oy = origin
    return polygon.close_ring(
        np.array([[ox, oy], [ox + side, oy], [ox + side, oy + side], [ox, oy + side]])
    )


def rect_ring(w, h, origin=(0.0, 0.0)):
    ox, oy = origin
    return polygon.close_ring(
        np.array([[ox, oy], [ox + w, oy], [ox + w, oy + h], [ox, oy + h]])
    )


def disc_stack(radius=15.0, layers=1):
    slices = []
    for k in range(layers):
        slices.append(
            layer_from_rings(disc_ring(radius), z_bottom=1.6 * k, z_top=1.6 * (k + 1))
        )
    return slices


def empty_design(slices):
    return new_design(len(slices), "meshhash", 1.6, CAL)


def test_add_free_event_annotations():
    slices = disc_stack()
    design = empty_design(slices)
    event = SprayEvent(channel=1, x_mm=0.0, y_mm=0.0, duration_ms=20, standoff_mm=20.0)
    outcome = add_free_event(design, 0, event, slices, CAL)
    assert outcome.design.layers[0] == (event,)
    assert outcome.diameter_mm == pytest.approx(7.065, abs=5e-4)
    assert outcome.mass_mg == pytest.approx(1.434, abs=5e-4)
    assert outcome.warnings == ()
    # input design untouched
    assert design.layers[0] == ()


def test_add_free_event_outside_contour():
    slices = disc_stack()
    design = empty_design(slices)
    event = SprayEvent(channel=1, x_mm=16.0, y_mm=0.0, duration_ms=20, standoff_mm=20.0)
    with pytest.raises(PlacementError) as err:
        add_free_event(design, 0, event, slices, CAL)
    assert "layer 0" in str(err.value)
    assert "16.0" in str(err.value)


def test_add_free_event_bad_layer():
    slices = disc_stack()
    design = empty_design(slices)
    event = SprayEvent(channel=1, x_mm=0.0, y_mm=0.0, duration_ms=20, standoff_mm=20.0)
    with pytest.raises(PlacementError):
        add_free_event(design, 3, event, slices, CAL)


def test_add_free_event_footprint_overflow_warning():
    slices = disc_stack()
    design = empty_design(slices)
    # 12.756 mm footprint centered 11 mm from the middle of a 30 mm disc
    event = SprayEvent(channel=0, x_mm=11.0, y_mm=0.0, duration_ms=60, standoff_mm=40.0)
    outcome = add_free_event(design, 0, event, slices, CAL)
    codes = [w.code for w in outcome.warnings]
    assert "footprint-overflow" in codes
    # circle-polygon oracle: some boundary samples must fall outside
    radius = outcome.diameter_mm / 2
    angles = np.linspace(0, 2 * math.pi, 181)
    samples = [(11.0 + radius * math.cos(a), radius * math.sin(a)) for a in angles]
    assert any(not point_in_layer(slices[0], p) for p in samples)


def test_add_free_event_extrapolation_warning():
    slices = disc_stack()
    design = empty_design(slices)
    event = SprayEvent(channel=0, x_mm=0.0, y_mm=0.0, duration_ms=200, standoff_mm=20.0)
    outcome = add_free_event(design, 0, event, slices, CAL)
    assert any(w.code == "extrapolation" for w in outcome.warnings)


def oracle_hex_count(radius, pitch):
    """Independent lattice enumeration against the analytic circle."""
    row_step = pitch * math.sqrt(3.0) / 2.0
    count = 0
    for j in range(-10, 11):
        y = j * row_step
        offset = pitch / 2.0 if j % 2 else 0.0
        for i in range(-10, 11):
            x = offset + i * pitch
            if x * x + y * y <= radius * radius:
                count += 1
    return count


def test_fill_pattern_disc_matches_enumeration():
    slices = disc_stack()
    design = empty_design(slices)
    outcome = fill_pattern(design, 0, channel=2, duration_ms=20, standoff_mm=20.0,
                           overlap=0.0, slices=slices, calibration=CAL)
    assert outcome.pitch_mm == pytest.approx(outcome.diameter_mm)
    expected = oracle_hex_count(15.0, outcome.pitch_mm)
    assert outcome.events_added == expected == 19
    for event in outcome.design.layers[0]:
        assert point_in_layer(slices[0], event.position)


def test_fill_pattern_overlap_shrinks_pitch():
    slices = disc_stack()
    design = empty_design(slices)
    tight = fill_pattern(design, 0, 2, 20, 20.0, 0.3, slices, CAL)
    loose = fill_pattern(design, 0, 2, 20, 20.0, 0.0, slices, CAL)
    assert tight.pitch_mm == pytest.approx(loose.pitch_mm * 0.7)
    assert tight.events_added > loose.events_added


def test_fill_pattern_tiny_contour_single_event():
    slices = [layer_from_rings(square_ring(8.0))]
    design = empty_design(slices)
    outcome = fill_pattern(design, 0, 0, 20, 20.0, 0.0, slices, CAL)
    assert outcome.events_added == 1
    event = outcome.design.layers[0][0]
    assert event.position == (4.0, 4.0)  # bbox-center anchor


def test_fill_pattern_anchor_outside_yields_zero():
    # L-shape whose bounding-box center falls in the notch
    ring = polygon.close_ring(
        np.array([[0, 0], [3, 0], [3, 3], [6, 3], [6, 6], [0, 6]], dtype=float)
    )
    # bbox center (3, 3) is a corner of the notch; nudge the shape so the
    # center is strictly outside the material
    ring = polygon.close_ring(
        np.array([[0, 0], [2.5, 0], [2.5, 5.9], [6, 5.9], [6, 6], [0, 6]], dtype=float)
    )
    slices = [layer_from_rings(ring)]
    design = empty_design(slices)
    outcome = fill_pattern(design, 0, 0, 20, 20.0, 0.0, slices, CAL)
    assert outcome.events_added == 0


def test_fill_pattern_annulus_avoids_hole():
    hole = disc_ring(6.0, ccw=False)
    slices = [layer_from_rings(disc_ring(15.0), hole)]
    design = empty_design(slices)
    outcome = fill_pattern(design, 0, 1, 20, 20.0, 0.0, slices, CAL)
    assert outcome.events_added > 0
    for event in outcome.design.layers[0]:
        assert not polygon.point_in_ring(hole, event.position, include_boundary=False)


def test_events_sorted_by_channel_then_insertion():
    slices = disc_stack()
    design = empty_design(slices)
    design = fill_pattern(design, 0, 3, 20, 20.0, 0.0, slices, CAL).design
    design = fill_pattern(design, 0, 1, 20, 20.0, 0.0, slices, CAL).design
    channels = [e.channel for e in design.layers[0]]
    assert channels == sorted(channels)
    # row-major inside one channel: y non-decreasing
    ch3 = [e for e in design.layers[0] if e.channel == 3]
    ys = [e.y_mm for e in ch3]
    assert ys == sorted(ys)


def test_allocate_equal_layers_gives_27ms():
    slices = [
        layer_from_rings(square_ring(8.0), z_bottom=1.6 * k, z_top=1.6 * (k + 1))
        for k in range(5)
    ]
    design = empty_design(slices)
    outcome = allocate_total_amount(design, channel=4, total_mass_mg=10.0,
                                    standoff_mm=20.0, slices=slices, calibration=CAL)
    assert len(outcome.rows) == 5
    for row in outcome.rows:
        assert row.event_count == 1
        assert row.target_mg == pytest.approx(2.0)
        assert row.duration_min_ms == row.duration_max_ms == 27  # raw 26.90
    total = outcome.total_achieved_mg
    assert abs(total - 10.0) <= 5 * CAL.alpha1 * 1.0


def test_allocate_minimum_duration_boundary():
    slices = [
        layer_from_rings(square_ring(8.0), z_bottom=1.6 * k, z_top=1.6 * (k + 1))
        for k in range(5)
    ]
    design = empty_design(slices)
    total = 5 * predict_mass(CAL, CAL.duration_range[0])
    outcome = allocate_total_amount(design, 0, total, 20.0, slices, CAL)
    for row in outcome.rows:
        assert row.duration_min_ms == row.duration_max_ms == 10


def test_allocate_targets_proportional_to_area():
    slices = [
        layer_from_rings(square_ring(4.0)),  # area 16
        layer_from_rings(square_ring(2.0), z_bottom=1.6, z_top=3.2),  # area 4
    ]
    design = empty_design(slices)
    outcome = allocate_total_amount(design, 0, 3.0, 20.0, slices, CAL)
    areas = [16.0, 4.0]
    total_area = sum(areas)
    for row, area in zip(outcome.rows, areas):
        assert row.target_mg == 3.0 * area / total_area  # bit-exact area weighting
    assert outcome.rows[0].target_mg == pytest.approx(4 * outcome.rows[1].target_mg)


def test_allocate_layer_weights_override():
    slices = [
        layer_from_rings(square_ring(4.0)),
        layer_from_rings(square_ring(4.0), z_bottom=1.6, z_top=3.2),
    ]
    design = empty_design(slices)
    outcome = allocate_total_amount(design, 0, 3.0, 20.0, slices, CAL,
                                    layer_weights={1: 2.0})
    assert outcome.rows[1].target_mg == pytest.approx(2 * outcome.rows[0].target_mg)


def test_allocate_redistributes_quantization():
    # rectangle sized for exactly 3 lattice points in one row
    slices = [layer_from_rings(rect_ring(12.5, 3.0))]
    design = empty_design(slices)
    target = 3 * predict_mass(CAL, 20) + 1.5 * CAL.alpha1
    outcome = allocate_total_amount(design, 0, target, 20.0, slices, CAL)
    row = outcome.rows[0]
    assert row.event_count == 3
    durations = sorted(e.duration_ms for e in outcome.design.layers[0])
    assert durations == [20, 21, 21]
    assert abs(row.achieved_mg - target) <= CAL.alpha1 * 0.5 + 1e-9


def test_allocate_small_target_trims_lattice():
    # a 30 mm disc fits 19 minimum-duration footprints; a 1 mg target must
    # not receive 19 clamped 10 ms sprays (11+ mg overshoot)
    slices = disc_stack()
    design = empty_design(slices)
    outcome = allocate_total_amount(design, 0, 1.0, 20.0, slices, CAL)
    row = outcome.rows[0]
    assert row.event_count == 1
    assert abs(row.achieved_mg - 1.0) <= CAL.alpha1 * 0.5 + 1e-9
    # the surviving event sits at the layer center
    event = outcome.design.layers[0][0]
    assert event.position == (0.0, 0.0)


def test_allocate_capacity_error():
    slices = [layer_from_rings(square_ring(8.0))]
    design = empty_design(slices)
    with pytest.raises(CapacityError) as err:
        allocate_total_amount(design, 0, 100.0, 20.0, slices, CAL)
    assert err.value.achievable_mass_mg == pytest.approx(predict_mass(CAL, 80))


def test_validate_well_formed_design():
    slices = disc_stack(layers=2)
    design = empty_design(slices)
    design = fill_pattern(design, 0, 1, 20, 20.0, 0.0, slices, CAL).design
    event = SprayEvent(channel=0, x_mm=2.0, y_mm=1.0, duration_ms=40, standoff_mm=30.0)
    design = add_free_event(design, 1, event, slices, CAL).design
    report = validate_design(design, slices, CAL)
    assert report.errors == ()
    assert report.mass_by_layer_channel[(0, 1)] == pytest.approx(19 * 1.434, abs=0.01)
    assert (1, 0) in report.mass_by_layer_channel


def test_validate_flags_duration_extrapolation():
    slices = disc_stack()
    design = empty_design(slices)
    event = SprayEvent(channel=0, x_mm=0.0, y_mm=0.0, duration_ms=200, standoff_mm=20.0)
    design = add_free_event(design, 0, event, slices, CAL).design
    report = validate_design(design, slices, CAL)
    assert report.errors == ()
    assert any(d.code == "duration-extrapolated" for d in report.warnings)


def test_validate_flags_overflow_and_unknown_channel():
    slices = disc_stack()
    design = empty_design(slices)
    overflow = SprayEvent(channel=0, x_mm=11.0, y_mm=0.0, duration_ms=60, standoff_mm=40.0)
    design = add_free_event(design, 0, overflow, slices, CAL).design
    report = validate_design(design, slices, CAL)
    assert any(d.code == "footprint-overflow" for d in report.warnings)

    # hand-build a design with a channel index outside the configured set
    few_channels = design_from_json(
        {
            **design_to_json(design),
            "channels": [{"index": 0, "name": "sweet"}],
            "layers": [[{"channel": 5, "x_mm": 0, "y_mm": 0,
                         "duration_ms": 20, "standoff_mm": 20}]],
            "mode_metadata": [[]],
        }
    )[0]
    report = validate_design(few_channels, slices, CAL)
    assert any(d.code == "unknown-channel" for d in report.errors)


def test_validate_layer_mismatch():
    slices = disc_stack(layers=2)
    design = new_design(1, "meshhash", 1.6, CAL)
    report = validate_design(design, slices, CAL)
    assert any(d.code == "layer-mismatch" for d in report.errors)


def test_module_output_always_validates_clean():
    slices = disc_stack(layers=3)
    design = empty_design(slices)
    design = fill_pattern(design, 0, 1, 20, 20.0, 0.2, slices, CAL).design
    design = allocate_total_amount(design, 2, 5.0, 20.0, slices, CAL).design
    event = SprayEvent(channel=3, x_mm=5.0, y_mm=-3.0, duration_ms=40, standoff_mm=25.0)
    design = add_free_event(design, 1, event, slices, CAL).design
    report = validate_design(design, slices, CAL)
    assert report.errors == ()


def test_operations_are_pure_and_deterministic():
    slices = disc_stack()
    design = empty_design(slices)
    a = fill_pattern(design, 0, 1, 20, 20.0, 0.0, slices, CAL).design
    b = fill_pattern(design, 0, 1, 20, 20.0, 0.0, slices, CAL).design
    assert a == b
    assert design.layers[0] == ()


def test_design_json_round_trip_and_hash():
    slices = disc_stack(layers=2)
    design = empty_design(slices)
    design = fill_pattern(design, 0, 1, 20, 20.0, 0.0, slices, CAL).design
    doc = design_to_json(design, version=7)
    loaded, version = design_from_json(doc)
    assert version == 7
    assert loaded == design
    assert design_hash(loaded) == design_hash(design)
    other = fill_pattern(design, 1, 2, 30, 25.0, 0.1, slices, CAL).design
    assert design_hash(other) != design_hash(design)


def test_channel_invariants():
    with pytest.raises(ValueError):
        TasteChannel(6, "too-high")
    with pytest.raises(ValueError):
        new_design(1, "m", 1.6, CAL, channels=(TasteChannel(0, "a"), TasteChannel(0, "b")))


def test_spray_event_quantization():
    event = SprayEvent(channel=0, x_mm=1.23456, y_mm=-0.00049, duration_ms=20,
                       standoff_mm=20.0)
    assert event.x_mm == 1.235
    assert event.y_mm == -0.0
    with pytest.raises(ValueError):
        SprayEvent(channel=0, x_mm=0, y_mm=0, duration_ms=0, standoff_mm=20.0)
