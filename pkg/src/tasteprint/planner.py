"""Taste design documents: free placement, dense-packing patterns, and
total-amount allocation over sliced geometry.

All operations are pure: they take a design value and return a new one,
leaving the input untouched. Event lists stay sorted by channel index with
insertion order preserved inside a channel, so downstream G-code is
reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

from tasteprint import SCHEMA_VERSION
from tasteprint.calibration import (
    CalibrationSet,
    predict_diameter,
    predict_mass,
    predict_quiet,
)
from tasteprint.errors import (
    CapacityError,
    InvalidFootprintError,
    PlacementError,
)
from tasteprint.geometry import polygon
from tasteprint.geometry.slicer import LayerSlice, point_in_layer

MAX_CHANNELS = 6


@dataclass(frozen=True)
class TasteChannel:
    index: int
    name: str
    solution_concentration: float = 0.0  # mg solute per mg solution; metadata
    color: tuple[int, int, int] = (128, 128, 128)

    def __post_init__(self):
        if not 0 <= self.index < MAX_CHANNELS:
            raise ValueError(f"channel index must be 0..{MAX_CHANNELS - 1}")


DEFAULT_CHANNELS = (
    TasteChannel(0, "sweet", color=(231, 84, 128)),
    TasteChannel(1, "salty", color=(70, 130, 180)),
    TasteChannel(2, "sour", color=(255, 190, 0)),
    TasteChannel(3, "bitter", color=(85, 140, 60)),
    TasteChannel(4, "umami", color=(178, 34, 34)),
    TasteChannel(5, "spare", color=(128, 128, 128)),
)


@dataclass(frozen=True)
class SprayEvent:
    """One airbrush activation. Positions are quantized to 1 um."""

    channel: int
    x_mm: float
    y_mm: float
    duration_ms: int
    standoff_mm: float

    def __post_init__(self):
        if self.duration_ms < 1:
            raise ValueError("duration must be at least 1 ms")
        if self.standoff_mm <= 0:
            raise ValueError("standoff must be positive")
        object.__setattr__(self, "x_mm", round(float(self.x_mm), 3))
        object.__setattr__(self, "y_mm", round(float(self.y_mm), 3))
        object.__setattr__(self, "duration_ms", int(self.duration_ms))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x_mm, self.y_mm)


@dataclass(frozen=True)
class TasteDesign:
    mesh_ref: str
    layer_height: float
    channels: tuple[TasteChannel, ...]
    layers: tuple[tuple[SprayEvent, ...], ...]
    mode_metadata: tuple[tuple[str, ...], ...]
    calibration_ref: str

    def __post_init__(self):
        indices = [c.index for c in self.channels]
        if len(set(indices)) != len(indices):
            raise ValueError("channel indices must be unique")
        if len(self.channels) > MAX_CHANNELS:
            raise ValueError(f"at most {MAX_CHANNELS} channels")
        if len(self.mode_metadata) != len(self.layers):
            raise ValueError("mode_metadata must have one entry per layer")

    @property
    def layer_count(self) -> int:
        return len(self.layers)

    def event_count(self) -> int:
        return sum(len(layer) for layer in self.layers)


def new_design(
    layer_count: int,
    mesh_ref: str,
    layer_height: float,
    calibration: CalibrationSet,
    channels: tuple[TasteChannel, ...] = DEFAULT_CHANNELS,
) -> TasteDesign:
    return TasteDesign(
        mesh_ref=mesh_ref,
        layer_height=layer_height,
        channels=channels,
        layers=tuple(() for _ in range(layer_count)),
        mode_metadata=tuple(() for _ in range(layer_count)),
        calibration_ref=calibration.identifier(),
    )


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    layer: int | None = None

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "layer": self.layer,
        }


@dataclass(frozen=True)
class PlacementOutcome:
    design: TasteDesign
    diameter_mm: float
    mass_mg: float
    warnings: tuple[Diagnostic, ...]


@dataclass(frozen=True)
class PatternOutcome:
    design: TasteDesign
    events_added: int
    pitch_mm: float
    diameter_mm: float


@dataclass(frozen=True)
class LayerAllocation:
    layer: int
    target_mg: float
    achieved_mg: float
    event_count: int
    duration_min_ms: int
    duration_max_ms: int
    clamped: bool


@dataclass(frozen=True)
class AllocationOutcome:
    design: TasteDesign
    rows: tuple[LayerAllocation, ...]
    total_target_mg: float
    total_achieved_mg: float


def _check_layer_index(design: TasteDesign, layer: int) -> None:
    if not 0 <= layer < design.layer_count:
        raise PlacementError(
            f"layer {layer} out of range (design has {design.layer_count} layers)"
        )


def _with_events(design: TasteDesign, layer: int, events, mode: str) -> TasteDesign:
    merged = sorted(design.layers[layer] + tuple(events), key=lambda e: e.channel)
    layers = list(design.layers)
    layers[layer] = tuple(merged)
    modes = list(design.mode_metadata)
    if mode not in modes[layer]:
        modes[layer] = modes[layer] + (mode,)
    return replace(design, layers=tuple(layers), mode_metadata=tuple(modes))


def footprint_fits(layer_slice: LayerSlice, center, radius: float) -> bool:
    """True when the circle lies fully inside the layer's material region."""
    if not point_in_layer(layer_slice, center):
        return False
    clearance = min(polygon.distance_to_ring(ring, center) for ring in layer_slice.rings())
    return clearance + 1e-9 >= radius


def add_free_event(
    design: TasteDesign,
    layer: int,
    event: SprayEvent,
    slices: list[LayerSlice],
    calibration: CalibrationSet,
) -> PlacementOutcome:
    """Append one manually placed event, annotated with its predicted footprint."""
    _check_layer_index(design, layer)
    layer_slice = slices[layer]
    if not point_in_layer(layer_slice, event.position):
        raise PlacementError(
            f"position ({event.x_mm}, {event.y_mm}) on layer {layer} "
            "is outside the layer contours"
        )
    diags: list[Diagnostic] = []
    diameter, notes = predict_quiet(
        predict_diameter, calibration, event.standoff_mm, event.duration_ms
    )
    mass, mass_notes = predict_quiet(predict_mass, calibration, event.duration_ms)
    for note in notes + mass_notes:
        diags.append(Diagnostic("warning", "extrapolation", note, layer=layer))
    if diameter > 0 and not footprint_fits(layer_slice, event.position, diameter / 2):
        diags.append(
            Diagnostic(
                "warning",
                "footprint-overflow",
                f"footprint ({diameter:.3f} mm) at ({event.x_mm}, {event.y_mm}) "
                "extends beyond the layer contour",
                layer=layer,
            )
        )
    return PlacementOutcome(
        design=_with_events(design, layer, [event], "free"),
        diameter_mm=diameter,
        mass_mg=mass,
        warnings=tuple(diags),
    )


def hex_lattice_points(
    layer_slice: LayerSlice, pitch: float
) -> list[tuple[float, float]]:
    """Hexagonal lattice anchored at the bounding-box center, clipped to the layer.

    Points come out row-major: ascending y rows, ascending x inside a row.
    """
    rings = list(layer_slice.rings())
    if not rings:
        return []
    min_x, min_y, max_x, max_y = polygon.bounding_box(rings)
    cx = (min_x + max_x) / 2.0
    cy = (min_y + max_y) / 2.0
    row_step = pitch * math.sqrt(3.0) / 2.0

    points = []
    j_lo = math.floor((min_y - cy) / row_step)
    j_hi = math.ceil((max_y - cy) / row_step)
    for j in range(j_lo, j_hi + 1):
        y = cy + j * row_step
        offset = pitch / 2.0 if j % 2 else 0.0
        i_lo = math.floor((min_x - cx - offset) / pitch)
        i_hi = math.ceil((max_x - cx - offset) / pitch)
        for i in range(i_lo, i_hi + 1):
            x = cx + offset + i * pitch
            if point_in_layer(layer_slice, (x, y)):
                points.append((x, y))
    return points


def fill_pattern(
    design: TasteDesign,
    layer: int,
    channel: int,
    duration_ms: int,
    standoff_mm: float,
    overlap: float,
    slices: list[LayerSlice],
    calibration: CalibrationSet,
) -> PatternOutcome:
    """Tile the layer with spray events on a dense hexagonal lattice."""
    _check_layer_index(design, layer)
    if not 0.0 <= overlap <= 0.9:
        raise ValueError("overlap must be in [0, 0.9]")
    diameter, _ = predict_quiet(predict_diameter, calibration, standoff_mm, duration_ms)
    if diameter <= 0:
        raise InvalidFootprintError(
            f"predicted footprint diameter is {diameter:.3f} mm at "
            f"standoff {standoff_mm} mm, duration {duration_ms} ms"
        )
    pitch = diameter * (1.0 - overlap)
    points = hex_lattice_points(slices[layer], pitch)
    events = [
        SprayEvent(channel=channel, x_mm=x, y_mm=y,
                   duration_ms=duration_ms, standoff_mm=standoff_mm)
        for x, y in points
    ]
    return PatternOutcome(
        design=_with_events(design, layer, events, "pattern"),
        events_added=len(events),
        pitch_mm=pitch,
        diameter_mm=diameter,
    )


def allocate_total_amount(
    design: TasteDesign,
    channel: int,
    total_mass_mg: float,
    standoff_mm: float,
    slices: list[LayerSlice],
    calibration: CalibrationSet,
    layer_weights: dict[int, float] | None = None,
) -> AllocationOutcome:
    """Distribute a whole-model seasoning mass across layers by area.

    Each layer's target is proportional to area (times any user weight).
    Events are laid out as a minimum-duration dense pattern, then durations
    are raised uniformly (with 1 ms redistribution) until the layer's
    predicted mass meets its target within quantization.
    """
    if total_mass_mg <= 0:
        raise ValueError("total mass must be positive")
    weights = layer_weights or {}
    weighted = [
        max(s.area, 0.0) * weights.get(k, 1.0) for k, s in enumerate(slices)
    ]
    total_weight = sum(weighted)
    if total_weight <= 0:
        raise ValueError("no layer has positive area")

    d_min, d_max = calibration.duration_range
    base_diameter, _ = predict_quiet(
        predict_diameter, calibration, standoff_mm, d_min
    )
    if base_diameter <= 0:
        raise InvalidFootprintError(
            f"minimum-duration footprint is empty at standoff {standoff_mm} mm"
        )

    result = design
    rows = []
    for k, layer_slice in enumerate(slices):
        target = total_mass_mg * weighted[k] / total_weight
        if target <= 0:
            continue
        points = hex_lattice_points(layer_slice, base_diameter)
        capacity = len(points) * predict_mass(calibration, d_max) if points else 0.0
        if target > capacity + 1e-9:
            raise CapacityError(
                f"layer {k} target {target:.3f} mg exceeds capacity "
                f"{capacity:.3f} mg ({len(points)} events at {d_max} ms)",
                achievable_mass_mg=capacity,
            )
        points = _trim_to_target(points, target, layer_slice, calibration)
        n = len(points)
        durations = _solve_durations(target, n, calibration)
        events = [
            SprayEvent(channel=channel, x_mm=x, y_mm=y,
                       duration_ms=d, standoff_mm=standoff_mm)
            for (x, y), d in zip(points, durations)
        ]
        achieved = sum(predict_mass(calibration, d) for d in durations)
        result = _with_events(result, k, events, "total_amount")
        rows.append(
            LayerAllocation(
                layer=k,
                target_mg=target,
                achieved_mg=achieved,
                event_count=n,
                duration_min_ms=min(durations),
                duration_max_ms=max(durations),
                clamped=(min(durations) == d_min or max(durations) == d_max),
            )
        )
    return AllocationOutcome(
        design=result,
        rows=tuple(rows),
        total_target_mg=total_mass_mg,
        total_achieved_mg=sum(r.achieved_mg for r in rows),
    )


def _trim_to_target(points, target_mg: float, layer_slice: LayerSlice,
                    cal: CalibrationSet):
    """Drop lattice points when even minimum-duration doses would overshoot.

    Keeps the centermost points (then restores row-major order) so small
    targets still land near the middle of the layer instead of one edge.
    """
    mass_min, _ = predict_quiet(predict_mass, cal, cal.duration_range[0])
    if not points or mass_min <= 0 or len(points) * mass_min <= target_mg:
        return points
    keep = max(1, int(target_mg // mass_min))
    min_x, min_y, max_x, max_y = polygon.bounding_box(list(layer_slice.rings()))
    cx, cy = (min_x + max_x) / 2.0, (min_y + max_y) / 2.0
    by_distance = sorted(
        range(len(points)),
        key=lambda i: ((points[i][0] - cx) ** 2 + (points[i][1] - cy) ** 2, i),
    )
    chosen = sorted(by_distance[:keep])
    return [points[i] for i in chosen]


def _solve_durations(target_mg: float, n: int, cal: CalibrationSet) -> list[int]:
    """Per-event integer durations whose predicted masses sum near the target."""
    d_min, d_max = cal.duration_range
    raw = (target_mg / n - cal.alpha0) / cal.alpha1
    base = int(math.floor(raw + 0.5))
    durations = [min(max(base, d_min), d_max)] * n

    # Redistribute whole-ms steps (deterministic event order) while the
    # residual exceeds half a quantization step and headroom remains.
    def achieved():
        return sum(cal.alpha0 + cal.alpha1 * d for d in durations)

    residual = target_mg - achieved()
    step = cal.alpha1
    guard = n * (d_max - d_min) + 1
    while abs(residual) > step / 2 + 1e-12 and guard > 0:
        guard -= 1
        if residual > 0:
            candidates = [i for i, d in enumerate(durations) if d < d_max]
            if not candidates:
                break
            durations[candidates[0]] += 1
            residual -= step
        else:
            candidates = [i for i, d in enumerate(durations) if d > d_min]
            if not candidates:
                break
            durations[candidates[-1]] -= 1
            residual += step
    return durations


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]
    mass_by_layer_channel: dict  # (layer, channel) -> predicted mg

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "warning")

    def to_json(self) -> dict:
        return {
            "diagnostics": [d.to_json() for d in self.diagnostics],
            "mass_summary": [
                {"layer": layer, "channel": channel, "predicted_mass_mg": mg}
                for (layer, channel), mg in sorted(self.mass_by_layer_channel.items())
            ],
        }

    def to_text(self) -> str:
        lines = []
        for d in self.diagnostics:
            where = f" [layer {d.layer}]" if d.layer is not None else ""
            lines.append(f"{d.severity.upper()}{where} {d.code}: {d.message}")
        if not lines:
            lines.append("design is valid")
        return "\n".join(lines)


def validate_design(
    design: TasteDesign,
    slices: list[LayerSlice],
    calibration: CalibrationSet,
) -> ValidationReport:
    """Full design check: containment, ranges, channels, and mass summary."""
    diags: list[Diagnostic] = []
    masses: dict[tuple[int, int], float] = {}
    known_channels = {c.index for c in design.channels}
    d_min, d_max = calibration.duration_range
    s_min, s_max = calibration.distance_range

    if design.layer_count != len(slices):
        diags.append(
            Diagnostic(
                "error",
                "layer-mismatch",
                f"design has {design.layer_count} layers, slices have {len(slices)}",
            )
        )
        return ValidationReport(tuple(diags), masses)

    for k, events in enumerate(design.layers):
        layer_slice = slices[k]
        for event in events:
            if event.channel not in known_channels:
                diags.append(
                    Diagnostic(
                        "error",
                        "unknown-channel",
                        f"event at ({event.x_mm}, {event.y_mm}) uses channel "
                        f"{event.channel} which is not configured",
                        layer=k,
                    )
                )
                continue
            if not point_in_layer(layer_slice, event.position):
                diags.append(
                    Diagnostic(
                        "error",
                        "outside-contour",
                        f"event at ({event.x_mm}, {event.y_mm}) lies outside "
                        "the layer contours",
                        layer=k,
                    )
                )
                continue
            if not d_min <= event.duration_ms <= d_max:
                diags.append(
                    Diagnostic(
                        "warning",
                        "duration-extrapolated",
                        f"duration {event.duration_ms} ms outside calibrated "
                        f"range [{d_min}, {d_max}] ms",
                        layer=k,
                    )
                )
            if not s_min <= event.standoff_mm <= s_max:
                diags.append(
                    Diagnostic(
                        "warning",
                        "standoff-extrapolated",
                        f"standoff {event.standoff_mm} mm outside calibrated "
                        f"range [{s_min:g}, {s_max:g}] mm",
                        layer=k,
                    )
                )
            diameter, _ = predict_quiet(
                predict_diameter, calibration, event.standoff_mm, event.duration_ms
            )
            if diameter > 0 and not footprint_fits(layer_slice, event.position, diameter / 2):
                diags.append(
                    Diagnostic(
                        "warning",
                        "footprint-overflow",
                        f"footprint ({diameter:.3f} mm) at "
                        f"({event.x_mm}, {event.y_mm}) extends beyond the contour",
                        layer=k,
                    )
                )
            mass, _ = predict_quiet(predict_mass, calibration, event.duration_ms)
            key = (k, event.channel)
            masses[key] = masses.get(key, 0.0) + mass
    return ValidationReport(tuple(diags), masses)


# --- persistence ---


def design_to_json(design: TasteDesign, version: int = 1) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": version,
        "mesh_ref": design.mesh_ref,
        "layer_height": design.layer_height,
        "calibration_ref": design.calibration_ref,
        "channels": [
            {
                "index": c.index,
                "name": c.name,
                "solution_concentration": c.solution_concentration,
                "color": list(c.color),
            }
            for c in design.channels
        ],
        "layers": [
            [
                {
                    "channel": e.channel,
                    "x_mm": e.x_mm,
                    "y_mm": e.y_mm,
                    "duration_ms": e.duration_ms,
                    "standoff_mm": e.standoff_mm,
                }
                for e in events
            ]
            for events in design.layers
        ],
        "mode_metadata": [list(modes) for modes in design.mode_metadata],
    }


def design_from_json(doc: dict) -> tuple[TasteDesign, int]:
    channels = tuple(
        TasteChannel(
            index=int(c["index"]),
            name=str(c["name"]),
            solution_concentration=float(c.get("solution_concentration", 0.0)),
            color=tuple(c.get("color", (128, 128, 128))),
        )
        for c in doc["channels"]
    )
    layers = tuple(
        tuple(
            SprayEvent(
                channel=int(e["channel"]),
                x_mm=float(e["x_mm"]),
                y_mm=float(e["y_mm"]),
                duration_ms=int(e["duration_ms"]),
                standoff_mm=float(e["standoff_mm"]),
            )
            for e in events
        )
        for events in doc["layers"]
    )
    modes = doc.get("mode_metadata") or [[] for _ in layers]
    design = TasteDesign(
        mesh_ref=str(doc["mesh_ref"]),
        layer_height=float(doc["layer_height"]),
        channels=channels,
        layers=layers,
        mode_metadata=tuple(tuple(m) for m in modes),
        calibration_ref=str(doc.get("calibration_ref", "")),
    )
    return design, int(doc.get("version", 1))


def design_hash(design: TasteDesign) -> str:
    """Content hash over the design payload (version excluded)."""
    doc = design_to_json(design)
    doc.pop("version", None)
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(payload).hexdigest()
