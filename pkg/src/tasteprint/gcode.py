"""The merged extrusion+spray G-code dialect.

One spray command per airbrush activation: ``M810 C<channel> D<ms>``,
followed by a ``G4 P<ms>`` dwell so controllers that dispatch M-codes
asynchronously still hold position for the spray. Everything is absolute
(G90/M82), coordinates carry 3 decimals, E carries 6, and layer blocks are
delimited by ``;LAYER:<k>`` comments, so rendering is byte-deterministic
and parse -> render round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from tasteprint import __version__
from tasteprint.calibration import CalibrationSet
from tasteprint.errors import (
    BoundsError,
    GcodeParseError,
    OrphanSprayError,
    SynchronizationError,
    ValidationError,
)
from tasteprint.geometry.infill import ExtrusionPath
from tasteprint.geometry.slicer import LayerSlice
from tasteprint.planner import Diagnostic, SprayEvent, TasteDesign, design_hash

SPRAY_CODE = "M810"
_MODE_CODES = ("G90", "M82", "M84")


@dataclass(frozen=True)
class Command:
    kind: str  # move | dwell | spray | home | mode | comment | opaque
    code: str = ""
    x: float | None = None
    y: float | None = None
    z: float | None = None
    e: float | None = None
    f: int | None = None
    p: int | None = None
    channel: int | None = None
    duration: int | None = None
    text: str = ""

    def render(self) -> str:
        if self.kind == "comment":
            return ";" + self.text
        if self.kind == "opaque":
            return self.text
        if self.kind == "spray":
            return f"{SPRAY_CODE} C{self.channel} D{self.duration}"
        if self.kind == "dwell":
            return f"G4 P{self.p}"
        if self.kind in ("home", "mode"):
            return self.code
        parts = [self.code]
        if self.x is not None:
            parts.append(f"X{self.x:.3f}")
        if self.y is not None:
            parts.append(f"Y{self.y:.3f}")
        if self.z is not None:
            parts.append(f"Z{self.z:.3f}")
        if self.e is not None:
            parts.append(f"E{self.e:.6f}")
        if self.f is not None:
            parts.append(f"F{self.f}")
        return " ".join(parts)


def comment(text: str) -> Command:
    return Command(kind="comment", text=text)


def move(code: str, x=None, y=None, z=None, e=None, f=None) -> Command:
    return Command(
        kind="move",
        code=code,
        x=None if x is None else round(float(x), 3),
        y=None if y is None else round(float(y), 3),
        z=None if z is None else round(float(z), 3),
        e=None if e is None else round(float(e), 6),
        f=None if f is None else int(round(f)),
    )


@dataclass(frozen=True)
class GcodeProgram:
    lines: tuple[Command, ...]
    warnings: tuple[str, ...] = ()

    def render(self) -> str:
        return "\n".join(cmd.render() for cmd in self.lines) + "\n"

    def layer_comment_index(self) -> list[tuple[int, int]]:
        """(line index, layer number) for each ;LAYER: marker, in order."""
        markers = []
        for i, cmd in enumerate(self.lines):
            if cmd.kind == "comment" and cmd.text.startswith("LAYER:"):
                try:
                    markers.append((i, int(cmd.text[6:])))
                except ValueError:
                    continue
        return markers

    def layer_blocks(self) -> list[tuple[int, tuple[Command, ...]]]:
        """Per-layer command runs, excluding the preamble and footer-only tail."""
        markers = self.layer_comment_index()
        blocks = []
        for n, (start, layer) in enumerate(markers):
            end = markers[n + 1][0] if n + 1 < len(markers) else len(self.lines)
            blocks.append((layer, self.lines[start:end]))
        return blocks

    def spray_count(self) -> int:
        return sum(1 for cmd in self.lines if cmd.kind == "spray")


@dataclass(frozen=True)
class MachineProfile:
    nozzle_diameter_mm: float = 1.6
    syringe_capacity_ml: float = 30.0
    flow_multiplier: float = 1.0
    travel_feedrate_mm_min: float = 3000.0
    print_feedrate_mm_min: float = 1200.0
    default_standoff_mm: float = 20.0
    build_volume_mm: tuple[float, float, float] = (220.0, 220.0, 250.0)
    airbrush_offsets_mm: dict = field(
        default_factory=lambda: {c: (0.0, 0.0) for c in range(6)}
    )

    def __post_init__(self):
        if self.nozzle_diameter_mm <= 0:
            raise ValidationError("nozzle diameter must be positive")
        if self.travel_feedrate_mm_min <= 0 or self.print_feedrate_mm_min <= 0:
            raise ValidationError("feedrates must be positive")
        # Offsets quantized like positions so G-code round trips exactly.
        offsets = {
            int(c): (round(float(dx), 3), round(float(dy), 3))
            for c, (dx, dy) in self.airbrush_offsets_mm.items()
        }
        object.__setattr__(self, "airbrush_offsets_mm", offsets)

    def offset_for(self, channel: int) -> tuple[float, float]:
        if channel not in self.airbrush_offsets_mm:
            raise ValidationError(f"no airbrush offset configured for channel {channel}")
        return self.airbrush_offsets_mm[channel]

    def to_json(self) -> dict:
        return {
            "nozzle_diameter_mm": self.nozzle_diameter_mm,
            "syringe_capacity_ml": self.syringe_capacity_ml,
            "flow_multiplier": self.flow_multiplier,
            "travel_feedrate_mm_min": self.travel_feedrate_mm_min,
            "print_feedrate_mm_min": self.print_feedrate_mm_min,
            "default_standoff_mm": self.default_standoff_mm,
            "build_volume_mm": list(self.build_volume_mm),
            "airbrush_offsets_mm": {
                str(c): list(off) for c, off in sorted(self.airbrush_offsets_mm.items())
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MachineProfile":
        kwargs = {}
        for key in (
            "nozzle_diameter_mm",
            "syringe_capacity_ml",
            "flow_multiplier",
            "travel_feedrate_mm_min",
            "print_feedrate_mm_min",
            "default_standoff_mm",
        ):
            if key in doc:
                kwargs[key] = float(doc[key])
        if "build_volume_mm" in doc:
            kwargs["build_volume_mm"] = tuple(float(v) for v in doc["build_volume_mm"])
        if "airbrush_offsets_mm" in doc:
            kwargs["airbrush_offsets_mm"] = {
                int(c): tuple(float(v) for v in off)
                for c, off in doc["airbrush_offsets_mm"].items()
            }
        return cls(**kwargs)


def load_profile(path: str | Path) -> MachineProfile:
    return MachineProfile.from_json(json.loads(Path(path).read_text()))


def save_profile(profile: MachineProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_json(), indent=2, sort_keys=True) + "\n")


def generate_gcode(
    slices: list[LayerSlice],
    paths: list[ExtrusionPath],
    design: TasteDesign,
    profile: MachineProfile,
    calibration: CalibrationSet | None = None,
) -> GcodeProgram:
    """Emit the merged program: per layer, extrusion first, then sprays."""
    if not (len(slices) == len(paths) == design.layer_count):
        raise ValidationError(
            f"layer counts differ: {len(slices)} slices, {len(paths)} paths, "
            f"{design.layer_count} design layers"
        )
    travel = profile.travel_feedrate_mm_min
    print_feed = profile.print_feedrate_mm_min
    cal_ref = calibration.identifier() if calibration else design.calibration_ref

    lines: list[Command] = [
        comment(f" generated by tasteprint {__version__}"),
        comment(f" design {design_hash(design)}"),
        comment(f" calibration {cal_ref}"),
        Command(kind="home", code="G28"),
        Command(kind="mode", code="G90"),
        Command(kind="mode", code="M82"),
    ]

    e_axis = 0.0
    z_limit = profile.build_volume_mm[2]
    for k, (layer, path) in enumerate(zip(slices, paths)):
        lines.append(comment(f"LAYER:{k}"))
        lines.append(move("G0", z=layer.z_top, f=travel))
        flow = layer.height * profile.nozzle_diameter_mm * profile.flow_multiplier
        for segment in path.segments:
            lines.append(move("G0", x=segment[0][0], y=segment[0][1], f=travel))
            previous = segment[0]
            for vertex in segment[1:]:
                e_axis += float(
                    ((vertex[0] - previous[0]) ** 2 + (vertex[1] - previous[1]) ** 2)
                    ** 0.5
                ) * flow
                lines.append(
                    move("G1", x=vertex[0], y=vertex[1], e=e_axis, f=print_feed)
                )
                previous = vertex
        for event in design.layers[k]:
            spray_z = layer.z_top + event.standoff_mm
            if spray_z > z_limit:
                raise BoundsError(
                    f"layer {k}: spray Z {spray_z:.3f} exceeds machine range {z_limit}"
                )
            ox, oy = profile.offset_for(event.channel)
            lines.append(
                move("G0", x=event.x_mm - ox, y=event.y_mm - oy, z=spray_z, f=travel)
            )
            lines.append(
                Command(kind="spray", code=SPRAY_CODE,
                        channel=event.channel, duration=event.duration_ms)
            )
            lines.append(Command(kind="dwell", code="G4", p=event.duration_ms))
    final_z = min(slices[-1].z_top + 10.0, z_limit) if slices else 10.0
    lines.append(move("G0", z=final_z, f=travel))
    lines.append(Command(kind="mode", code="M84"))
    lines.append(comment("END"))
    return GcodeProgram(tuple(lines))


def parse_gcode(text: str) -> GcodeProgram:
    """Tolerant line parser for the dialect; unknown commands survive as opaque."""
    lines: list[Command] = []
    warnings: list[str] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith(";"):
            lines.append(comment(raw.split(";", 1)[1]))
            continue
        code_part = stripped.split(";", 1)[0].strip()
        tokens = code_part.split()
        head = tokens[0].upper()
        if head in ("G0", "G1"):
            lines.append(_parse_move(head, tokens[1:], line_no))
        elif head == "G4":
            params = _parse_params(tokens[1:], "P", line_no)
            lines.append(
                Command(kind="dwell", code="G4", p=_require_int(params, "P", line_no))
            )
        elif head == "G28":
            lines.append(Command(kind="home", code="G28"))
        elif head == SPRAY_CODE:
            params = _parse_params(tokens[1:], "CD", line_no)
            lines.append(
                Command(
                    kind="spray",
                    code=SPRAY_CODE,
                    channel=_require_int(params, "C", line_no),
                    duration=_require_int(params, "D", line_no),
                )
            )
        elif head in _MODE_CODES:
            lines.append(Command(kind="mode", code=head))
        else:
            warnings.append(f"line {line_no}: unknown command {head!r} kept as-is")
            lines.append(Command(kind="opaque", text=raw))
    return GcodeProgram(tuple(lines), tuple(warnings))


def _parse_move(code: str, tokens: list[str], line_no: int) -> Command:
    values = _parse_params(tokens, "XYZEF", line_no)
    f = values.get("F")
    return Command(
        kind="move",
        code=code,
        x=values.get("X"),
        y=values.get("Y"),
        z=values.get("Z"),
        e=values.get("E"),
        f=None if f is None else int(round(f)),
    )


def _parse_params(tokens: list[str], allowed: str, line_no: int) -> dict[str, float]:
    values: dict[str, float] = {}
    for token in tokens:
        letter = token[0].upper()
        if letter not in allowed:
            raise GcodeParseError(f"unexpected parameter {token!r}", line_no)
        try:
            values[letter] = float(token[1:])
        except ValueError:
            raise GcodeParseError(f"malformed parameter {token!r}", line_no) from None
    return values


def _require_int(values: dict[str, float], letter: str, line_no: int) -> int:
    if letter not in values:
        raise GcodeParseError(f"missing required parameter {letter}", line_no)
    value = values[letter]
    if value != int(value):
        raise GcodeParseError(f"parameter {letter} must be an integer", line_no)
    return int(value)


def extract_spray_plan(
    program: GcodeProgram, profile: MachineProfile
) -> list[list[SprayEvent]]:
    """Reconstruct surface spray events from a parsed program.

    The inverse of generation: undo the airbrush XY offset and recover the
    standoff from Z minus the layer top (the first Z move of the block).
    """
    layers: dict[int, list[SprayEvent]] = {}
    current_layer: int | None = None
    layer_top: float | None = None
    x = y = z = None
    max_layer = -1
    for cmd in program.lines:
        if cmd.kind == "comment" and cmd.text.startswith("LAYER:"):
            current_layer = int(cmd.text[6:])
            max_layer = max(max_layer, current_layer)
            layer_top = None
        elif cmd.kind == "home":
            x = y = z = 0.0
        elif cmd.kind == "move":
            x = cmd.x if cmd.x is not None else x
            y = cmd.y if cmd.y is not None else y
            if cmd.z is not None:
                z = cmd.z
                if current_layer is not None and layer_top is None:
                    layer_top = cmd.z
        elif cmd.kind == "spray":
            if x is None or y is None or z is None:
                raise OrphanSprayError(
                    "spray command appears before any positioning move"
                )
            if current_layer is None or layer_top is None:
                raise OrphanSprayError(
                    "spray command appears before a layer block with a Z move"
                )
            standoff = z - layer_top
            if standoff <= 0:
                raise SynchronizationError(
                    f"spray at Z {z:.3f} at or below layer top {layer_top:.3f}"
                )
            ox, oy = profile.offset_for(cmd.channel)
            layers.setdefault(current_layer, []).append(
                SprayEvent(
                    channel=cmd.channel,
                    x_mm=x + ox,
                    y_mm=y + oy,
                    duration_ms=cmd.duration,
                    standoff_mm=round(standoff, 3),
                )
            )
    return [layers.get(k, []) for k in range(max_layer + 1)]


def check_synchronization(program: GcodeProgram) -> list[Diagnostic]:
    """Static layer-ordering checks on a program.

    Verifies, per layer block: extrusion strictly precedes sprays, Z holds
    constant during extrusion, sprays sit above the layer top, and layer
    tops never regress. Sprays with no prior move are flagged as orphans.
    """
    violations: list[Diagnostic] = []
    previous_top: float | None = None
    saw_move = False
    z: float | None = None
    e_axis = 0.0

    markers = program.layer_comment_index()
    preamble_end = markers[0][0] if markers else len(program.lines)
    for cmd in program.lines[:preamble_end]:
        if cmd.kind == "home":
            saw_move = True
            z = 0.0
        elif cmd.kind == "move":
            saw_move = True
            if cmd.z is not None:
                z = cmd.z

    for layer, block in program.layer_blocks():
        layer_top: float | None = None
        saw_spray = False
        ordering_flagged = False
        extrusion_zs: set[float] = set()
        for cmd in block:
            if cmd.kind == "home":
                saw_move = True
                z = 0.0
            elif cmd.kind == "move":
                saw_move = True
                if cmd.z is not None:
                    z = cmd.z
                    if layer_top is None:
                        layer_top = cmd.z
                if cmd.e is not None:
                    if cmd.e < e_axis - 1e-9:
                        violations.append(
                            Diagnostic("error", "e-regression",
                                       f"E decreases from {e_axis:.6f} to {cmd.e:.6f}",
                                       layer=layer)
                        )
                    extruding = cmd.e > e_axis
                    e_axis = max(e_axis, cmd.e)
                    if extruding:
                        if z is not None:
                            extrusion_zs.add(z)
                        if saw_spray and not ordering_flagged:
                            violations.append(
                                Diagnostic(
                                    "error",
                                    "spray-before-extrude",
                                    "extruding move occurs after a spray in the "
                                    "same layer block",
                                    layer=layer,
                                )
                            )
                            ordering_flagged = True
            elif cmd.kind == "spray":
                saw_spray = True
                if not saw_move:
                    violations.append(
                        Diagnostic("error", "orphan-spray",
                                   "spray with no preceding positioning move",
                                   layer=layer)
                    )
                    continue
                reference_top = layer_top if layer_top is not None else previous_top
                if reference_top is not None and z is not None and z <= reference_top:
                    violations.append(
                        Diagnostic(
                            "error",
                            "spray-z",
                            f"spray at Z {z:.3f} not above layer top "
                            f"{reference_top:.3f}",
                            layer=layer,
                        )
                    )
        if len(extrusion_zs) > 1:
            violations.append(
                Diagnostic("error", "z-extrusion",
                           f"Z varies during extrusion: {sorted(extrusion_zs)}",
                           layer=layer)
            )
        if layer_top is not None:
            if previous_top is not None and layer_top < previous_top - 1e-9:
                violations.append(
                    Diagnostic(
                        "error",
                        "z-regression",
                        f"layer top {layer_top:.3f} below previous "
                        f"{previous_top:.3f}",
                        layer=layer,
                    )
                )
            previous_top = layer_top
    return violations
