"""Command-line entry point: slice, plan, gcode, simulate, calibrate, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from tasteprint import __version__, SCHEMA_VERSION
from tasteprint.calibration import (
    default_calibration,
    fit_amount_model,
    fit_resolution_model,
    load_calibration,
    read_samples_csv,
    write_samples_csv,
    CalibrationSample,
)
from tasteprint.errors import InputError, TastePrintError, ValidationError
from tasteprint.gcode import (
    MachineProfile,
    check_synchronization,
    generate_gcode,
    load_profile,
    parse_gcode,
)
from tasteprint.geometry.infill import generate_extrusion_paths
from tasteprint.geometry.mesh import load_mesh
from tasteprint.geometry.slicer import slice_mesh, slices_from_json, slices_to_json
from tasteprint.imaging.homography import MarkerCorrespondence
from tasteprint.imaging.image import read_ppm
from tasteprint.imaging.measure import measure_spot
from tasteprint.planner import (
    SprayEvent,
    add_free_event,
    allocate_total_amount,
    design_from_json,
    design_to_json,
    fill_pattern,
    new_design,
    validate_design,
)
from tasteprint.project import dump_json, read_json, write_json
from tasteprint.simulator import (
    SimulationOptions,
    compare_to_design,
    conservation_check,
    export_simulation,
    simulate,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tasteprint",
        description="Slice food models, plan seasoning sprays, emit and test G-code.",
    )
    parser.add_argument(
        "--version", action="version",
        version=f"tasteprint {__version__} (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", help="slice a mesh into layer contours")
    p.add_argument("--mesh", required=True)
    p.add_argument("--format", default="auto",
                   choices=["auto", "stl_binary", "stl_ascii", "obj"])
    p.add_argument("--layer-height", type=float, default=1.6)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plan", help="create or edit a taste design")
    p.add_argument("--slices", required=True)
    p.add_argument("--design", help="existing design to extend")
    p.add_argument("--calibration")
    p.add_argument("--free", action="append", default=[],
                   metavar="LAYER,CH,X,Y,DUR[,STANDOFF]")
    p.add_argument("--pattern", action="append", default=[],
                   metavar="LAYER,CH,DUR[,STANDOFF[,OVERLAP]]")
    p.add_argument("--allocate", action="append", default=[],
                   metavar="CH,MASS[,STANDOFF]")
    p.add_argument("--validate-only", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("gcode", help="generate merged extrusion+spray G-code")
    p.add_argument("--slices", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--profile", default="default")
    p.add_argument("--calibration")
    p.add_argument("--infill-density", type=float, default=0.0)
    p.add_argument("--infill-spacing", type=float, default=1.6)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="run a program on the virtual printer")
    p.add_argument("--gcode", required=True)
    p.add_argument("--design", help="compare deposition against this design")
    p.add_argument("--calibration")
    p.add_argument("--profile", default="default")
    p.add_argument("--spread-factor", type=float, default=0.0)
    p.add_argument("--cell-size", type=float, default=0.2)
    p.add_argument("--out-dir", help="export deposition maps here")
    p.add_argument("--report", help="write the JSON report here")

    p = sub.add_parser("calibrate", help="fit models or measure spray photos")
    cal_sub = p.add_subparsers(dest="calibrate_command", required=True)

    pf = cal_sub.add_parser("fit", help="least-squares fit from a sample CSV")
    pf.add_argument("--samples", required=True)
    pf.add_argument("--model", required=True, choices=["resolution", "amount"])
    pf.add_argument("--out")

    pm = cal_sub.add_parser("measure", help="measure a spray footprint photo")
    pm.add_argument("--image", required=True)
    pm.add_argument("--markers", required=True,
                    help="JSON sidecar with pixel/mm correspondences")
    pm.add_argument("--roi-center", default="0,0", metavar="X,Y")
    pm.add_argument("--roi-size", type=float, default=24.0)
    pm.add_argument("--foreground", default="dark", choices=["dark", "bright"])
    pm.add_argument("--distance", type=float, help="standoff used for the spray (mm)")
    pm.add_argument("--duration", type=float, help="spray duration (ms)")
    pm.add_argument("--replicate", type=int, default=0)
    pm.add_argument("--out", help="append a sample row to this CSV")

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--project-dir")
    p.add_argument("--ui-dir", help="static frontend to mount at /ui")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TastePrintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    handlers = {
        "slice": cmd_slice,
        "plan": cmd_plan,
        "gcode": cmd_gcode,
        "simulate": cmd_simulate,
        "calibrate": cmd_calibrate,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


def _load_calibration(path: str | None):
    return load_calibration(path) if path else default_calibration()


def _load_profile(spec: str):
    return MachineProfile() if spec == "default" else load_profile(spec)


def cmd_slice(args) -> int:
    mesh = load_mesh(args.mesh, format=args.format)
    layers = slice_mesh(mesh, args.layer_height)
    doc = slices_to_json(layers, mesh_hash=mesh.source_hash,
                         layer_height=args.layer_height,
                         mesh_name=Path(args.mesh).name)
    Path(args.out).write_text(dump_json(doc))
    print(
        f"sliced {args.mesh}: {mesh.triangle_count} triangles, "
        f"{mesh.vertex_count} vertices -> {len(layers)} layers "
        f"at {args.layer_height} mm -> {args.out}"
    )
    return 0


def _parse_floats(spec: str, minimum: int, maximum: int, flag: str) -> list[float]:
    parts = spec.split(",")
    if not minimum <= len(parts) <= maximum:
        raise ValidationError(f"{flag} expects {minimum}..{maximum} comma-separated values")
    try:
        return [float(v) for v in parts]
    except ValueError:
        raise ValidationError(f"{flag}: non-numeric value in {spec!r}") from None


def cmd_plan(args) -> int:
    slices_doc = read_json(args.slices)
    slices, mesh_hash, layer_height = slices_from_json(slices_doc)
    calibration = _load_calibration(args.calibration)
    if args.design:
        design, version = design_from_json(read_json(args.design))
    else:
        design = new_design(len(slices), mesh_hash, layer_height, calibration)
        version = 0

    default_standoff = MachineProfile().default_standoff_mm
    for spec in args.free:
        vals = _parse_floats(spec, 5, 6, "--free")
        layer, channel, x, y, duration = vals[:5]
        standoff = vals[5] if len(vals) > 5 else default_standoff
        event = SprayEvent(channel=int(channel), x_mm=x, y_mm=y,
                           duration_ms=int(duration), standoff_mm=standoff)
        outcome = add_free_event(design, int(layer), event, slices, calibration)
        design = outcome.design
        print(
            f"layer {int(layer)}: event ch{int(channel)} at ({x:g}, {y:g}) "
            f"-> footprint {outcome.diameter_mm:.3f} mm, {outcome.mass_mg:.3f} mg"
        )
        for warning in outcome.warnings:
            print(f"  warning: {warning.message}")
    for spec in args.pattern:
        vals = _parse_floats(spec, 3, 5, "--pattern")
        layer, channel, duration = vals[:3]
        standoff = vals[3] if len(vals) > 3 else default_standoff
        overlap = vals[4] if len(vals) > 4 else 0.0
        outcome = fill_pattern(design, int(layer), int(channel), int(duration),
                               standoff, overlap, slices, calibration)
        design = outcome.design
        print(
            f"layer {int(layer)}: pattern ch{int(channel)} placed "
            f"{outcome.events_added} events at pitch {outcome.pitch_mm:.3f} mm"
        )
    for spec in args.allocate:
        vals = _parse_floats(spec, 2, 3, "--allocate")
        channel, mass = vals[:2]
        standoff = vals[2] if len(vals) > 2 else default_standoff
        outcome = allocate_total_amount(design, int(channel), mass, standoff,
                                        slices, calibration)
        design = outcome.design
        print(
            f"allocated {mass:g} mg on ch{int(channel)}: achieved "
            f"{outcome.total_achieved_mg:.3f} mg over {len(outcome.rows)} layers"
        )
        for row in outcome.rows:
            print(
                f"  layer {row.layer}: target {row.target_mg:.3f} mg, "
                f"achieved {row.achieved_mg:.3f} mg with {row.event_count} "
                f"events ({row.duration_min_ms}-{row.duration_max_ms} ms)"
            )

    report = validate_design(design, slices, calibration)
    print(report.to_text())
    if report.errors:
        return 1
    if args.validate_only:
        return 0
    if not args.out:
        raise ValidationError("--out is required unless --validate-only is given")
    write_json(args.out, design_to_json(design, version=version + 1))
    print(f"design with {design.event_count()} events -> {args.out}")
    return 0


def cmd_gcode(args) -> int:
    slices, _, _ = slices_from_json(read_json(args.slices))
    design, _ = design_from_json(read_json(args.design))
    calibration = _load_calibration(args.calibration)
    profile = _load_profile(args.profile)
    report = validate_design(design, slices, calibration)
    if report.errors:
        print(report.to_text(), file=sys.stderr)
        raise ValidationError("design has validation errors; not generating G-code")
    paths = [
        generate_extrusion_paths(layer, k, infill_density=args.infill_density,
                                 infill_spacing=args.infill_spacing)
        for k, layer in enumerate(slices)
    ]
    program = generate_gcode(slices, paths, design, profile, calibration)
    Path(args.out).write_text(program.render())
    print(
        f"G-code: {len(program.lines)} commands, {program.spray_count()} sprays, "
        f"{len(slices)} layers -> {args.out}"
    )
    return 0


def cmd_simulate(args) -> int:
    program = parse_gcode(Path(args.gcode).read_text())
    for warning in program.warnings:
        print(f"warning: {warning}")
    calibration = _load_calibration(args.calibration)
    profile = _load_profile(args.profile)
    options = SimulationOptions(spread_factor=args.spread_factor,
                                cell_size_mm=args.cell_size)
    result = simulate(program, calibration, profile, options)

    violations = check_synchronization(program)
    for violation in violations:
        print(f"sync violation [layer {violation.layer}]: {violation.message}")

    conservation = conservation_check(result)
    if conservation["all_clear"]:
        print(
            "conservation report: all-clear "
            f"(max relative deviation {conservation['max_relative_deviation']:.2e})"
        )
    else:
        for row in conservation["rows"]:
            if not row["ok"]:
                print(
                    f"conservation MISMATCH layer {row['layer']} channel "
                    f"{row['channel']}: map {row['integrated_mass_mg']:.6f} mg "
                    f"vs model {row['analytic_mass_mg']:.6f} mg"
                )

    report_doc = {
        "elapsed_time_s": result.state.elapsed_time_s,
        "spray_count": len(result.state.spray_log),
        "synchronization_violations": [v.to_json() for v in violations],
        "conservation": conservation,
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
    if args.design:
        design, _ = design_from_json(read_json(args.design))
        comparison = compare_to_design(result.maps, design, calibration)
        report_doc["comparison"] = comparison.to_json()
        status = "all-clear" if comparison.all_clear else "MISMATCH"
        print(f"design comparison: {status}")
    if args.out_dir:
        export_simulation(result.maps, args.out_dir)
        print(f"deposition maps -> {args.out_dir}")
    if args.report:
        write_json(args.report, report_doc)
        print(f"report -> {args.report}")
    total = sum(
        dep.integrated_mass(c) for dep in result.maps for c in dep.channels()
    )
    print(
        f"simulated {len(result.state.spray_log)} sprays over "
        f"{len(result.maps)} layers, {total:.3f} mg total, "
        f"{result.state.elapsed_time_s:.1f} s print time"
    )
    if violations or not conservation["all_clear"]:
        return 1
    if args.design and not comparison.all_clear:
        return 1
    return 0


def cmd_calibrate(args) -> int:
    if args.calibrate_command == "fit":
        samples = read_samples_csv(args.samples)
        fit = fit_resolution_model if args.model == "resolution" else fit_amount_model
        report = fit(samples)
        coeffs = ", ".join(f"{c:.6g}" for c in report.coefficients)
        print(f"{report.model} model: coefficients ({coeffs})")
        print(
            f"R^2 = {report.r2:.4f} over {report.sample_count} samples, "
            f"mean replicate SD = {report.mean_replicate_sd:.4g}"
        )
        if args.out:
            write_json(args.out, report.to_json())
            print(f"fit report -> {args.out}")
        return 0

    image = read_ppm(args.image)
    sidecar = read_json(args.markers)
    correspondences = [
        MarkerCorrespondence(pixel=tuple(c["px"]), world=tuple(c["mm"]))
        for c in sidecar["correspondences"]
    ]
    cx, cy = _parse_floats(args.roi_center, 2, 2, "--roi-center")
    result = measure_spot(image, correspondences, (cx, cy),
                          roi_size=args.roi_size, foreground=args.foreground)
    print(
        f"spot: equivalent diameter {result.equivalent_diameter_mm:.3f} mm, "
        f"area {result.area_mm2:.3f} mm^2, centroid "
        f"({result.centroid_mm[0]:.3f}, {result.centroid_mm[1]:.3f}) mm, "
        f"Otsu threshold {result.threshold_used}"
    )
    if args.out:
        if args.distance is None or args.duration is None:
            raise ValidationError("--distance and --duration are required with --out")
        sample = CalibrationSample(
            distance_mm=args.distance,
            duration_ms=args.duration,
            diameter_mm=result.equivalent_diameter_mm,
            replicate=args.replicate,
        )
        out = Path(args.out)
        existing = read_samples_csv(out) if out.exists() else []
        write_samples_csv(existing + [sample], out)
        print(f"appended sample -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from tasteprint.project import resolve_project_dir
    from tasteprint.service import create_app

    project_dir = resolve_project_dir(args.project_dir)
    app = create_app(project_dir, ui_dir=args.ui_dir)
    print(f"project directory: {project_dir}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
