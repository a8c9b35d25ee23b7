"""Local HTTP service consumed by the design-studio UI.

A thin orchestration layer over the same functions the CLI calls, plus a
project directory for persistence and optimistic document versioning:
every mutating request carries the version it was based on and is rejected
with 409 when that version is stale. Mutations are serialized by a lock.
"""

from __future__ import annotations

import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from tasteprint import __version__, SCHEMA_VERSION
from tasteprint.calibration import (
    CalibrationSet,
    default_calibration,
    load_calibration,
    predict_diameter,
    predict_mass,
    predict_quiet,
)
from tasteprint.errors import InputError, TastePrintError
from tasteprint.gcode import (
    GcodeProgram,
    MachineProfile,
    check_synchronization,
    generate_gcode,
    load_profile,
    parse_gcode,
)
from tasteprint.geometry.infill import generate_extrusion_paths
from tasteprint.geometry.mesh import load_mesh
from tasteprint.geometry.slicer import LayerSlice, slice_mesh, slices_from_json, slices_to_json
from tasteprint.planner import (
    SprayEvent,
    TasteDesign,
    add_free_event,
    allocate_total_amount,
    design_from_json,
    design_hash,
    design_to_json,
    fill_pattern,
    new_design,
    validate_design,
)
from tasteprint.project import dump_json, read_json, sha256_bytes, write_json
from tasteprint.simulator import (
    SimulationOptions,
    SimulationResult,
    compare_to_design,
    export_simulation,
    simulate,
)


class EventBody(BaseModel):
    channel: int
    x_mm: float
    y_mm: float
    duration_ms: int
    standoff_mm: float | None = None
    version: int


class PatternBody(BaseModel):
    layer: int
    channel: int
    duration_ms: int
    standoff_mm: float | None = None
    overlap: float = 0.0
    version: int


class AllocateBody(BaseModel):
    channel: int
    total_mass_mg: float
    standoff_mm: float | None = None
    layer_weights: dict[int, float] | None = None
    dry_run: bool = False  # preview the per-layer split without committing
    version: int


class PredictBody(BaseModel):
    standoff_mm: float
    duration_ms: float


class SimulateBody(BaseModel):
    spread_factor: float = 0.0
    cell_size_mm: float = 0.2


class Project:
    """In-memory state backed by plain files in the project directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.lock = threading.Lock()
        self.calibration: CalibrationSet = self._load_calibration()
        self.profile: MachineProfile = self._load_profile()
        self.slices: list[LayerSlice] = []
        self.mesh_hash: str = ""
        self.mesh_name: str = ""
        self.layer_height: float = 1.6
        self.infill_density: float = 0.0
        self.infill_spacing: float = 1.6
        self.design: TasteDesign | None = None
        self.version: int = 0
        self.program: GcodeProgram | None = None
        self.simulation: SimulationResult | None = None
        self._restore()

    def _load_calibration(self) -> CalibrationSet:
        path = self.directory / "calibration.json"
        return load_calibration(path) if path.exists() else default_calibration()

    def _load_profile(self) -> MachineProfile:
        path = self.directory / "profile.json"
        return load_profile(path) if path.exists() else MachineProfile()

    def _restore(self) -> None:
        slices_path = self.directory / "slices.json"
        if slices_path.exists():
            doc = read_json(slices_path)
            self.slices, self.mesh_hash, self.layer_height = slices_from_json(doc)
            self.mesh_name = doc.get("mesh_name", "")
        design_path = self.directory / "design.json"
        if design_path.exists():
            self.design, self.version = design_from_json(read_json(design_path))
        gcode_path = self.directory / "program.gcode"
        if gcode_path.exists():
            self.program = parse_gcode(gcode_path.read_text())

    def persist_design(self) -> None:
        write_json(self.directory / "design.json",
                   design_to_json(self.design, version=self.version))

    def slices_doc(self) -> dict:
        return slices_to_json(self.slices, self.mesh_hash, self.layer_height,
                              mesh_name=self.mesh_name)

    def load_mesh_bytes(self, name: str, data: bytes, layer_height: float,
                        infill_density: float, infill_spacing: float) -> dict:
        uploads = self.directory / "uploads"
        uploads.mkdir(exist_ok=True)
        mesh_path = uploads / Path(name).name
        mesh_path.write_bytes(data)
        mesh = load_mesh(mesh_path)
        self.slices = slice_mesh(mesh, layer_height)
        self.mesh_hash = mesh.source_hash
        self.mesh_name = Path(name).name
        self.layer_height = layer_height
        self.infill_density = infill_density
        self.infill_spacing = infill_spacing
        self.design = new_design(len(self.slices), self.mesh_hash,
                                 layer_height, self.calibration)
        self.version += 1
        self.program = None
        self.simulation = None
        write_json(self.directory / "slices.json", self.slices_doc())
        self.persist_design()
        return {
            "mesh_hash": self.mesh_hash,
            "triangle_count": mesh.triangle_count,
            "vertex_count": mesh.vertex_count,
            "layer_count": len(self.slices),
            "version": self.version,
        }

    def extrusion_paths(self):
        return [
            generate_extrusion_paths(layer, k, infill_density=self.infill_density,
                                     infill_spacing=self.infill_spacing)
            for k, layer in enumerate(self.slices)
        ]


def _error(status: int, message: str, **extra):
    detail = {"message": message, **extra}
    return HTTPException(status_code=status, detail=detail)


def _json_response(doc) -> Response:
    # Canonical bytes, identical to the CLI's file output.
    return Response(content=dump_json(doc), media_type="application/json")


def create_app(project_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tasteprint service", version=__version__)
    project = Project(Path(project_dir))
    app.state.project = project

    def require_design() -> TasteDesign:
        if project.design is None:
            raise _error(422, "no mesh loaded; upload one first")
        return project.design

    def check_version(version: int) -> None:
        if version != project.version:
            raise _error(409, "stale document version",
                         current_version=project.version)

    def annotate(design: TasteDesign) -> list:
        annotations = []
        for events in design.layers:
            layer_notes = []
            for event in events:
                diameter, _ = predict_quiet(
                    predict_diameter, project.calibration,
                    event.standoff_mm, event.duration_ms,
                )
                mass, _ = predict_quiet(
                    predict_mass, project.calibration, event.duration_ms
                )
                layer_notes.append(
                    {"diameter_mm": diameter, "mass_mg": mass}
                )
            annotations.append(layer_notes)
        return annotations

    @app.get("/api/state")
    def get_state():
        return {
            "tool_version": __version__,
            "schema_version": SCHEMA_VERSION,
            "mesh_hash": project.mesh_hash,
            "mesh_name": project.mesh_name,
            "layer_count": len(project.slices),
            "layer_height": project.layer_height,
            "infill_density": project.infill_density,
            "version": project.version,
            "has_program": project.program is not None,
            "has_simulation": project.simulation is not None,
        }

    @app.post("/api/mesh")
    async def upload_mesh(request: Request, name: str,
                          layer_height: float = 1.6,
                          infill_density: float = 0.0,
                          infill_spacing: float = 1.6):
        data = await request.body()
        if not data:
            raise _error(422, "empty mesh upload")
        with project.lock:
            try:
                return project.load_mesh_bytes(
                    name, data, layer_height, infill_density, infill_spacing
                )
            except InputError as exc:
                raise _error(422, str(exc)) from None
            except TastePrintError as exc:
                raise _error(422, str(exc)) from None

    @app.get("/api/slices")
    def get_slices():
        if not project.slices:
            raise _error(404, "no mesh loaded")
        return _json_response(project.slices_doc())

    @app.get("/api/design")
    def get_design():
        design = require_design()
        doc = design_to_json(design, version=project.version)
        doc["annotations"] = annotate(design)
        doc["design_hash"] = design_hash(design)
        return _json_response(doc)

    @app.put("/api/design")
    def put_design(doc: dict):
        with project.lock:
            require_design()
            check_version(int(doc.get("version", -1)))
            try:
                design, _ = design_from_json(doc)
            except (KeyError, ValueError, TypeError) as exc:
                raise _error(422, f"malformed design document: {exc}") from None
            if design.mesh_ref != project.mesh_hash:
                raise _error(
                    422,
                    "design references a different mesh "
                    f"({design.mesh_ref[:12]}... vs {project.mesh_hash[:12]}...)",
                )
            report = validate_design(design, project.slices, project.calibration)
            if report.errors:
                raise _error(422, "design has validation errors",
                             diagnostics=[d.to_json() for d in report.errors])
            project.design = design
            project.version += 1
            project.persist_design()
            return {"version": project.version}

    @app.post("/api/design/layers/{layer}/events")
    def post_event(layer: int, body: EventBody):
        with project.lock:
            design = require_design()
            check_version(body.version)
            standoff = (
                body.standoff_mm
                if body.standoff_mm is not None
                else project.profile.default_standoff_mm
            )
            try:
                event = SprayEvent(
                    channel=body.channel, x_mm=body.x_mm, y_mm=body.y_mm,
                    duration_ms=body.duration_ms, standoff_mm=standoff,
                )
                outcome = add_free_event(design, layer, event,
                                         project.slices, project.calibration)
            except (TastePrintError, ValueError) as exc:
                raise _error(422, str(exc)) from None
            project.design = outcome.design
            project.version += 1
            project.persist_design()
            return {
                "version": project.version,
                "event": {
                    "layer": layer,
                    "channel": event.channel,
                    "x_mm": event.x_mm,
                    "y_mm": event.y_mm,
                    "duration_ms": event.duration_ms,
                    "standoff_mm": event.standoff_mm,
                },
                "annotation": {
                    "diameter_mm": outcome.diameter_mm,
                    "mass_mg": outcome.mass_mg,
                },
                "warnings": [w.to_json() for w in outcome.warnings],
            }

    @app.post("/api/design/pattern")
    def post_pattern(body: PatternBody):
        with project.lock:
            design = require_design()
            check_version(body.version)
            standoff = (
                body.standoff_mm
                if body.standoff_mm is not None
                else project.profile.default_standoff_mm
            )
            try:
                outcome = fill_pattern(
                    design, body.layer, body.channel, body.duration_ms,
                    standoff, body.overlap, project.slices, project.calibration,
                )
            except (TastePrintError, ValueError) as exc:
                raise _error(422, str(exc)) from None
            project.design = outcome.design
            project.version += 1
            project.persist_design()
            return {
                "version": project.version,
                "events_added": outcome.events_added,
                "pitch_mm": outcome.pitch_mm,
                "diameter_mm": outcome.diameter_mm,
            }

    @app.post("/api/design/allocate")
    def post_allocate(body: AllocateBody):
        with project.lock:
            design = require_design()
            check_version(body.version)
            standoff = (
                body.standoff_mm
                if body.standoff_mm is not None
                else project.profile.default_standoff_mm
            )
            try:
                outcome = allocate_total_amount(
                    design, body.channel, body.total_mass_mg, standoff,
                    project.slices, project.calibration,
                    layer_weights=body.layer_weights,
                )
            except (TastePrintError, ValueError) as exc:
                raise _error(422, str(exc)) from None
            if not body.dry_run:
                project.design = outcome.design
                project.version += 1
                project.persist_design()
            return {
                "version": project.version,
                "dry_run": body.dry_run,
                "total_target_mg": outcome.total_target_mg,
                "total_achieved_mg": outcome.total_achieved_mg,
                "rows": [
                    {
                        "layer": r.layer,
                        "target_mg": r.target_mg,
                        "achieved_mg": r.achieved_mg,
                        "event_count": r.event_count,
                        "duration_min_ms": r.duration_min_ms,
                        "duration_max_ms": r.duration_max_ms,
                        "clamped": r.clamped,
                    }
                    for r in outcome.rows
                ],
            }

    @app.get("/api/calibration")
    def get_calibration():
        doc = project.calibration.to_json()
        doc["identifier"] = project.calibration.identifier()
        return _json_response(doc)

    @app.post("/api/predict")
    def post_predict(body: PredictBody):
        try:
            diameter, notes_d = predict_quiet(
                predict_diameter, project.calibration,
                body.standoff_mm, body.duration_ms,
            )
            mass, notes_m = predict_quiet(
                predict_mass, project.calibration, body.duration_ms
            )
        except TastePrintError as exc:
            raise _error(422, str(exc)) from None
        return {
            "diameter_mm": diameter,
            "mass_mg": mass,
            "warnings": list(notes_d + notes_m),
        }

    @app.post("/api/gcode")
    def post_gcode():
        with project.lock:
            design = require_design()
            report = validate_design(design, project.slices, project.calibration)
            if report.errors:
                raise _error(422, "design has validation errors",
                             diagnostics=[d.to_json() for d in report.errors])
            try:
                program = generate_gcode(
                    project.slices, project.extrusion_paths(), design,
                    project.profile, project.calibration,
                )
            except TastePrintError as exc:
                raise _error(422, str(exc)) from None
            project.program = program
            text = program.render()
            (project.directory / "program.gcode").write_text(text)
            return {
                "design_hash": design_hash(design),
                "line_count": len(program.lines),
                "spray_count": program.spray_count(),
                "sha256": sha256_bytes(text.encode()),
            }

    @app.get("/api/gcode/file")
    def get_gcode_file():
        if project.program is None:
            raise _error(404, "no G-code generated yet")
        return PlainTextResponse(project.program.render())

    @app.post("/api/simulate")
    def post_simulate(body: SimulateBody):
        with project.lock:
            design = require_design()
            if project.program is None:
                raise _error(422, "no G-code generated yet")
            try:
                options = SimulationOptions(
                    spread_factor=body.spread_factor,
                    cell_size_mm=body.cell_size_mm,
                )
                result = simulate(project.program, project.calibration,
                                  project.profile, options)
            except (TastePrintError, ValueError) as exc:
                raise _error(422, str(exc)) from None
            project.simulation = result
            export_simulation(result.maps, project.directory / "simulation")
            comparison = compare_to_design(result.maps, design, project.calibration)
            violations = check_synchronization(project.program)
            return {
                "elapsed_time_s": result.state.elapsed_time_s,
                "spray_count": len(result.state.spray_log),
                "synchronization_violations": [v.to_json() for v in violations],
                "comparison": comparison.to_json(),
                "layers": [
                    {
                        "layer": dep.layer_index,
                        "channels": {
                            str(c): dep.integrated_mass(c) for c in dep.channels()
                        },
                    }
                    for dep in result.maps
                ],
            }

    @app.get("/api/simulation/layers/{layer}")
    def get_simulation_layer(layer: int):
        if project.simulation is None:
            raise _error(404, "no simulation results")
        maps = project.simulation.maps
        if not 0 <= layer < len(maps):
            raise _error(404, f"layer {layer} out of range")
        dep = maps[layer]
        channels = {}
        for channel in dep.channels():
            grid = dep.grids[channel]
            stride = max(1, int(np.ceil(max(grid.shape) / 64)))
            preview = grid[::stride, ::stride]
            channels[str(channel)] = {
                "integrated_mass_mg": dep.integrated_mass(channel),
                "centroid_mm": dep.centroid(channel),
                "preview": {
                    "cell_size_mm": dep.cell_size_mm * stride,
                    "origin_mm": list(dep.origin_mm),
                    "grid": [[float(v) for v in row] for row in preview],
                },
            }
        return {
            "layer": layer,
            "cell_size_mm": dep.cell_size_mm,
            "origin_mm": list(dep.origin_mm),
            "channels": channels,
        }

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
