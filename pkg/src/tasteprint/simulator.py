"""Virtual printer: executes a program and rasterizes spray deposition.

Every spray deposits its dose-model mass uniformly over a footprint disc.
Cells partially covered by the disc are weighted by 4x4 subsampling, and
per-cell masses are normalized by the summed weights, so the integrated
map mass equals the analytic event mass to float precision regardless of
rasterization error.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tasteprint.calibration import (
    CalibrationSet,
    predict_diameter,
    predict_mass,
    predict_quiet,
)
from tasteprint.errors import BoundsError, SynchronizationError
from tasteprint.gcode import GcodeProgram, MachineProfile
from tasteprint.imaging.image import write_pgm
from tasteprint.planner import Diagnostic, TasteDesign

SUBSAMPLES = 4  # per cell edge; 16 coverage samples per cell


@dataclass(frozen=True)
class SimulationOptions:
    spread_factor: float = 0.0  # static footprint inflation on edible substrates
    cell_size_mm: float = 0.2

    def __post_init__(self):
        if self.cell_size_mm <= 0:
            raise ValueError("cell size must be positive")
        if self.spread_factor < 0:
            raise ValueError("spread factor must be non-negative")


@dataclass(frozen=True)
class SprayRecord:
    layer: int
    channel: int
    x_mm: float
    y_mm: float
    duration_ms: int
    standoff_mm: float
    mass_mg: float
    diameter_mm: float


@dataclass
class VirtualPrinterState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    e_axis: float = 0.0
    current_layer: int | None = None
    elapsed_time_s: float = 0.0
    spray_log: list[SprayRecord] = field(default_factory=list)


@dataclass(frozen=True)
class DepositionMap:
    """Per-layer raster of per-channel seasoning density (mg/mm^2)."""

    layer_index: int
    cell_size_mm: float
    origin_mm: tuple[float, float]
    grids: dict  # channel -> (ny, nx) float array

    def integrated_mass(self, channel: int) -> float:
        grid = self.grids.get(channel)
        if grid is None or grid.size == 0:
            return 0.0
        return float(grid.sum()) * self.cell_size_mm**2

    def centroid(self, channel: int) -> tuple[float, float] | None:
        grid = self.grids.get(channel)
        if grid is None or grid.size == 0 or grid.sum() == 0:
            return None
        ny, nx = grid.shape
        xs = self.origin_mm[0] + (np.arange(nx) + 0.5) * self.cell_size_mm
        ys = self.origin_mm[1] + (np.arange(ny) + 0.5) * self.cell_size_mm
        total = grid.sum()
        cx = float((grid.sum(axis=0) * xs).sum() / total)
        cy = float((grid.sum(axis=1) * ys).sum() / total)
        return (cx, cy)

    def channels(self) -> list[int]:
        return sorted(self.grids)


@dataclass(frozen=True)
class SimulationResult:
    maps: list[DepositionMap]
    state: VirtualPrinterState
    diagnostics: tuple[Diagnostic, ...]


def simulate(
    program: GcodeProgram,
    calibration: CalibrationSet,
    profile: MachineProfile,
    options: SimulationOptions = SimulationOptions(),
) -> SimulationResult:
    """Execute the program deterministically and build deposition maps."""
    state = VirtualPrinterState()
    diagnostics: list[Diagnostic] = []
    bx, by, bz = profile.build_volume_mm
    feed = profile.travel_feedrate_mm_min
    layer_top: float | None = None
    layer_extent: dict[int, list[float]] = {}  # layer -> [minx, miny, maxx, maxy]
    max_layer = -1

    def touch_extent(layer: int, x0, y0, x1, y1):
        box = layer_extent.setdefault(layer, [x0, y0, x1, y1])
        box[0] = min(box[0], x0)
        box[1] = min(box[1], y0)
        box[2] = max(box[2], x1)
        box[3] = max(box[3], y1)

    for cmd in program.lines:
        if cmd.kind == "comment":
            if cmd.text.startswith("LAYER:"):
                try:
                    state.current_layer = int(cmd.text[6:])
                except ValueError:
                    continue
                max_layer = max(max_layer, state.current_layer)
                layer_top = None
        elif cmd.kind == "home":
            state.x = state.y = state.z = 0.0
        elif cmd.kind == "move":
            nx = cmd.x if cmd.x is not None else state.x
            ny = cmd.y if cmd.y is not None else state.y
            nz = cmd.z if cmd.z is not None else state.z
            if not (0 <= nx <= bx and 0 <= ny <= by and 0 <= nz <= bz):
                raise BoundsError(
                    f"move to ({nx:.3f}, {ny:.3f}, {nz:.3f}) leaves the "
                    f"build volume {profile.build_volume_mm}"
                )
            if cmd.f is not None:
                feed = float(cmd.f)
            distance = math.dist((state.x, state.y, state.z), (nx, ny, nz))
            if distance > 0:
                state.elapsed_time_s += distance / (feed / 60.0)
            if cmd.z is not None and state.current_layer is not None and layer_top is None:
                layer_top = cmd.z
            state.x, state.y, state.z = nx, ny, nz
            if cmd.e is not None:
                state.e_axis = cmd.e
            if state.current_layer is not None:
                touch_extent(state.current_layer, nx, ny, nx, ny)
        elif cmd.kind == "dwell":
            state.elapsed_time_s += cmd.p / 1000.0
        elif cmd.kind == "spray":
            if state.current_layer is None or layer_top is None:
                raise SynchronizationError(
                    "spray outside any layer block with a Z move"
                )
            standoff = state.z - layer_top
            if standoff <= 0:
                raise SynchronizationError(
                    f"layer {state.current_layer}: spray at Z {state.z:.3f} "
                    f"at or below layer top {layer_top:.3f}"
                )
            ox, oy = profile.offset_for(cmd.channel)
            sx, sy = state.x + ox, state.y + oy
            mass, mass_notes = predict_quiet(predict_mass, calibration, cmd.duration)
            diameter, dia_notes = predict_quiet(
                predict_diameter, calibration, standoff, cmd.duration
            )
            diameter *= 1.0 + options.spread_factor
            for note in mass_notes + dia_notes:
                diagnostics.append(
                    Diagnostic("warning", "model-range", note, layer=state.current_layer)
                )
            state.spray_log.append(
                SprayRecord(
                    layer=state.current_layer,
                    channel=cmd.channel,
                    x_mm=sx,
                    y_mm=sy,
                    duration_ms=cmd.duration,
                    standoff_mm=standoff,
                    mass_mg=mass,
                    diameter_mm=diameter,
                )
            )
            r = diameter / 2.0
            touch_extent(state.current_layer, sx - r, sy - r, sx + r, sy + r)

    maps = _build_maps(state.spray_log, layer_extent, max_layer, options, diagnostics)
    return SimulationResult(maps=maps, state=state, diagnostics=tuple(diagnostics))


def _build_maps(spray_log, layer_extent, max_layer, options, diagnostics):
    cell = options.cell_size_mm
    maps = []
    by_layer: dict[int, list[SprayRecord]] = {}
    for record in spray_log:
        by_layer.setdefault(record.layer, []).append(record)

    for k in range(max_layer + 1):
        extent = layer_extent.get(k)
        if extent is None:
            maps.append(DepositionMap(k, cell, (0.0, 0.0), {}))
            continue
        origin = (
            math.floor(extent[0] / cell) * cell,
            math.floor(extent[1] / cell) * cell,
        )
        nx = max(1, math.ceil((extent[2] - origin[0]) / cell))
        ny = max(1, math.ceil((extent[3] - origin[1]) / cell))
        grids: dict[int, np.ndarray] = {}
        for record in by_layer.get(k, []):
            if record.mass_mg <= 0 or record.diameter_mm <= 0:
                diagnostics.append(
                    Diagnostic(
                        "warning",
                        "empty-deposit",
                        f"spray on channel {record.channel} deposits nothing "
                        f"(mass {record.mass_mg:.3f} mg, "
                        f"diameter {record.diameter_mm:.3f} mm)",
                        layer=k,
                    )
                )
                continue
            grid = grids.setdefault(record.channel, np.zeros((ny, nx)))
            _deposit_disc(grid, origin, cell, record, diagnostics)
        maps.append(DepositionMap(k, cell, origin, grids))
    return maps


def _deposit_disc(grid, origin, cell, record: SprayRecord, diagnostics):
    r = record.diameter_mm / 2.0
    cx, cy = record.x_mm, record.y_mm
    ny, nx = grid.shape
    ix0 = max(0, int(math.floor((cx - r - origin[0]) / cell)))
    ix1 = min(nx, int(math.ceil((cx + r - origin[0]) / cell)))
    iy0 = max(0, int(math.floor((cy - r - origin[1]) / cell)))
    iy1 = min(ny, int(math.ceil((cy + r - origin[1]) / cell)))
    if ix1 <= ix0 or iy1 <= iy0:
        return

    # Subsample cell coverage: 16 points per cell, fraction inside the disc.
    sub = (np.arange(SUBSAMPLES) + 0.5) / SUBSAMPLES
    xs = origin[0] + (np.arange(ix0, ix1)[:, None] + sub[None, :]) * cell
    ys = origin[1] + (np.arange(iy0, iy1)[:, None] + sub[None, :]) * cell
    dx2 = (xs.reshape(1, 1, -1, SUBSAMPLES) - cx) ** 2
    dy2 = (ys.reshape(-1, SUBSAMPLES, 1, 1) - cy) ** 2
    inside = (dx2 + dy2) <= r * r
    weights = inside.mean(axis=(1, 3))  # (cells_y, cells_x)

    total_weight = weights.sum()
    if total_weight == 0:
        # disc smaller than the subsample spacing: dump into the center cell
        jx = min(nx - 1, max(0, int((cx - origin[0]) / cell)))
        jy = min(ny - 1, max(0, int((cy - origin[1]) / cell)))
        grid[jy, jx] += record.mass_mg / cell**2
        return

    covered_area = total_weight * cell * cell
    disc_area = math.pi * r * r
    if abs(covered_area - disc_area) / disc_area > 0.005:
        diagnostics.append(
            Diagnostic(
                "warning",
                "raster-coverage",
                f"subsampled disc area {covered_area:.4f} deviates from "
                f"analytic {disc_area:.4f} by more than 0.5%",
                layer=record.layer,
            )
        )
    # Normalizing by the summed weights conserves mass exactly.
    cell_mass = record.mass_mg * weights / total_weight
    grid[iy0:iy1, ix0:ix1] += cell_mass / cell**2


def conservation_check(result: SimulationResult, rel_tol: float = 1e-9) -> dict:
    """Integrated map mass vs the analytic spray-log mass, per layer/channel.

    This is intrinsic to the simulation (no design needed): the maps must
    carry exactly the mass the dose model assigned to each logged spray.
    """
    expected: dict[tuple[int, int], float] = {}
    for record in result.state.spray_log:
        if record.mass_mg > 0 and record.diameter_mm > 0:
            key = (record.layer, record.channel)
            expected[key] = expected.get(key, 0.0) + record.mass_mg
    keys = set(expected)
    for dep in result.maps:
        keys.update((dep.layer_index, c) for c in dep.channels())
    rows = []
    worst = 0.0
    for layer, channel in sorted(keys):
        analytic = expected.get((layer, channel), 0.0)
        integrated = (
            result.maps[layer].integrated_mass(channel)
            if layer < len(result.maps)
            else 0.0
        )
        scale = max(abs(analytic), abs(integrated), 1e-12)
        deviation = abs(analytic - integrated) / scale
        worst = max(worst, deviation)
        rows.append(
            {
                "layer": layer,
                "channel": channel,
                "analytic_mass_mg": analytic,
                "integrated_mass_mg": integrated,
                "relative_deviation": deviation,
                "ok": deviation <= rel_tol,
            }
        )
    return {
        "all_clear": all(r["ok"] for r in rows),
        "max_relative_deviation": worst,
        "rows": rows,
    }


@dataclass(frozen=True)
class ComparisonRow:
    layer: int
    channel: int
    designed_mass_mg: float
    simulated_mass_mg: float
    mass_ok: bool
    designed_centroid: tuple[float, float] | None
    simulated_centroid: tuple[float, float] | None
    centroid_ok: bool


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def all_clear(self) -> bool:
        return all(r.mass_ok and r.centroid_ok for r in self.rows)

    def to_json(self) -> dict:
        return {
            "all_clear": self.all_clear,
            "rows": [
                {
                    "layer": r.layer,
                    "channel": r.channel,
                    "designed_mass_mg": r.designed_mass_mg,
                    "simulated_mass_mg": r.simulated_mass_mg,
                    "mass_ok": r.mass_ok,
                    "designed_centroid": r.designed_centroid,
                    "simulated_centroid": r.simulated_centroid,
                    "centroid_ok": r.centroid_ok,
                }
                for r in self.rows
            ],
        }


def compare_to_design(
    maps: list[DepositionMap],
    design: TasteDesign,
    calibration: CalibrationSet,
    mass_rel_tol: float = 1e-6,
) -> ComparisonReport:
    """Designed vs simulated mass and centroid, per layer and channel."""
    if len(maps) > design.layer_count:
        raise ValueError(
            f"simulation has {len(maps)} layers but design has {design.layer_count}"
        )
    rows = []
    for k in range(design.layer_count):
        dep_map = maps[k] if k < len(maps) else None
        by_channel: dict[int, list] = {}
        for event in design.layers[k]:
            by_channel.setdefault(event.channel, []).append(event)
        channels = set(by_channel)
        if dep_map is not None:
            channels.update(dep_map.channels())
        for channel in sorted(channels):
            events = by_channel.get(channel, [])
            masses = [
                predict_quiet(predict_mass, calibration, e.duration_ms)[0]
                for e in events
            ]
            designed = sum(masses)
            if designed > 0:
                designed_centroid = (
                    sum(m * e.x_mm for m, e in zip(masses, events)) / designed,
                    sum(m * e.y_mm for m, e in zip(masses, events)) / designed,
                )
            else:
                designed_centroid = None
            simulated = dep_map.integrated_mass(channel) if dep_map else 0.0
            sim_centroid = dep_map.centroid(channel) if dep_map else None
            scale = max(abs(designed), abs(simulated), 1e-12)
            mass_ok = abs(designed - simulated) / scale <= mass_rel_tol
            if designed_centroid and sim_centroid and dep_map:
                centroid_ok = (
                    math.dist(designed_centroid, sim_centroid) <= dep_map.cell_size_mm
                )
            else:
                centroid_ok = designed_centroid == sim_centroid
            rows.append(
                ComparisonRow(
                    layer=k,
                    channel=channel,
                    designed_mass_mg=designed,
                    simulated_mass_mg=simulated,
                    mass_ok=mass_ok,
                    designed_centroid=designed_centroid,
                    simulated_centroid=sim_centroid,
                    centroid_ok=centroid_ok,
                )
            )
    return ComparisonReport(tuple(rows))


def export_simulation(maps: list[DepositionMap], directory: str | Path) -> dict:
    """Write per-layer per-channel PGMs, a scale sidecar, and a mass CSV."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index: dict = {"layers": []}
    csv_rows = []
    for dep_map in maps:
        entry = {
            "layer": dep_map.layer_index,
            "cell_size_mm": dep_map.cell_size_mm,
            "origin_mm": list(dep_map.origin_mm),
            "channels": {},
        }
        for channel in dep_map.channels():
            grid = dep_map.grids[channel]
            peak = float(grid.max())
            name = f"layer{dep_map.layer_index:03d}_ch{channel}.pgm"
            if peak > 0:
                levels = np.rint(grid / peak * 255.0).astype(np.uint8)
            else:
                levels = np.zeros_like(grid, dtype=np.uint8)
            write_pgm(levels, directory / name)
            entry["channels"][str(channel)] = {
                "file": name,
                "density_mg_mm2_per_level": peak / 255.0 if peak > 0 else 0.0,
                "shape": list(grid.shape),
            }
            csv_rows.append(
                (dep_map.layer_index, channel, dep_map.integrated_mass(channel))
            )
        index["layers"].append(entry)
    (directory / "simulation.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    with open(directory / "masses.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "channel", "integrated_mass_mg"])
        writer.writerows(csv_rows)
    return index
