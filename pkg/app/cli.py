"""
Command line entry point: python -m app <command>

Exit status is 0 on success, 2 when no downward-opening cluster is found and
1 for every error, argument errors included.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from app.config import Settings, load_settings
from app.errors import ConfigError, PipeScanError, UnknownSegment
from app.logging_config import configure_logging
from app.models.pipemap import SurveyLine
from app.models.report import SweepSpec
from app.models.scene import GridParams, PipeScene
from app.models.signature import PipeEstimate
from app.services import bench
from app.services.bscan import extraction_payload, load_bscan, point_set_from_payload
from app.services.eiia import disambiguate_bearing, with_bearing
from app.services.pipeline import InversionPipeline
from app.services.pipemap import (
    bearing_of,
    load_map,
    map_bearing_near,
    plan_detecting_bearing,
    revise,
    save_map,
)
from app.services.synth import render, write_scene

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_CLUSTER = 2

# CLI flag destination -> settings field
_OVERRIDES = {
    "max_iterations": "eiia_max_iterations",
    "rms_threshold": "eiia_rms_threshold_m",
    "stability_epsilon": "eiia_stability_epsilon_m",
    "refine": "eiia_refine",
    "threshold_k": "preprocess_threshold_k",
    "min_area": "preprocess_min_component_area",
    "min_width": "cluster_min_width",
    "tolerance": "cluster_tolerance_rows",
    "spacing": "extract_spacing_m",
    "count": "extract_count",
    "workers": "bench_workers",
    "log_level": "log_level",
}


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser reporting argument errors with exit status 1"""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _dump(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _survey(args: argparse.Namespace, parser: argparse.ArgumentParser, need_position: bool) -> Optional[SurveyLine]:
    if args.detecting_bearing is None:
        return None
    if need_position and (args.survey_x is None or args.survey_y is None):
        parser.error("--survey-x and --survey-y are required together with a map")
    position = (args.survey_x or 0.0, args.survey_y or 0.0)
    return SurveyLine(position=position, detecting_bearing=args.detecting_bearing % 360.0)


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    """Render a synthetic scene and write it to the output directory"""
    scene = PipeScene.from_degrees(
        args.radius,
        args.depth,
        args.alpha_deg,
        apex_x=args.apex_x,
        scan_length=args.scan_length,
        noise_salt_fraction=args.noise,
        signature_thickness=args.thickness,
        aperture_m=args.aperture,
    )
    params = GridParams(
        trace_spacing_m=args.trace_spacing,
        sample_interval_ns=args.sample_interval,
        relative_permittivity=args.permittivity,
        rows=args.rows,
        cols=args.cols,
    )
    grid, truth = render(scene, params, seed=args.seed)
    paths = write_scene(grid, truth, args.out_dir, data_file="bscan.csv" if args.csv else "bscan.f32")
    _emit(_dump({k: str(v) for k, v in paths.items()}), None)
    return EXIT_OK


def cmd_extract(args: argparse.Namespace, settings: Settings) -> int:
    """Detect clusters in a B-scan and write one extraction per cluster"""
    grid = load_bscan(args.bscan)
    clusters = []
    for cluster, pts, error in InversionPipeline(settings).extract_all(grid):
        entry: Dict[str, Any] = {"apex_column": cluster.apex_column, "width_columns": cluster.width}
        if pts is not None:
            entry.update(extraction_payload(pts))
        else:
            entry["error"] = error
        clusters.append(entry)

    flags = [] if clusters else ["no_cluster"]
    _emit(_dump({"bscan_path": args.bscan, "clusters": clusters, "flags": flags}), args.out)
    return EXIT_OK if clusters else EXIT_NO_CLUSTER


def cmd_invert(args: argparse.Namespace, settings: Settings) -> int:
    """Invert an extraction file to a pipe estimate"""
    payload = json.loads(Path(args.extraction).read_text())
    if "clusters" in payload:
        usable = [c for c in payload["clusters"] if "points" in c]
        if args.cluster >= len(usable):
            raise ConfigError(f"extraction holds {len(usable)} usable clusters, index {args.cluster} requested")
        payload = usable[args.cluster]
    pts = point_set_from_payload(payload)
    estimate = InversionPipeline(settings).invert(pts, args.detecting_bearing, args.map_bearing)
    _emit(estimate.model_dump_json(indent=2), args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    """Process a B-scan end to end and write the run report"""
    survey = _survey(args, args.parser, need_position=args.map is not None)
    report = InversionPipeline(settings).run(
        args.bscan,
        map_path=args.map,
        survey=survey,
        revised_map_path=args.revise_out,
        include_timings=args.include_timings,
    )
    _emit(report.model_dump_json(indent=2), args.out)
    return EXIT_NO_CLUSTER if "no_cluster" in report.flags else EXIT_OK


def _load_estimate(path: str) -> PipeEstimate:
    payload = json.loads(Path(path).read_text())
    if "clusters" in payload:
        estimates = [c["estimate"] for c in payload["clusters"] if c.get("estimate")]
        if not estimates:
            raise ConfigError(f"report {path} holds no estimate")
        payload = estimates[0]
    return PipeEstimate.model_validate(payload)


def cmd_revise_map(args: argparse.Namespace, settings: Settings) -> int:
    """Write a revised copy of a map using a pipe estimate"""
    if Path(args.out).resolve() == Path(args.map).resolve():
        raise ConfigError("refusing to overwrite the input map; choose another output file")
    survey = _survey(args, args.parser, need_position=True)
    if survey is None:
        args.parser.error("--detecting-bearing is required to revise a map")
    pipe_map = load_map(args.map)
    estimate = _load_estimate(args.estimate)

    nearest = map_bearing_near(pipe_map, survey.position)
    segment_id = args.segment or nearest.segment_id
    segment = pipe_map.segment(segment_id)
    if segment is None:
        raise UnknownSegment(f"no segment with id {segment_id!r}")
    if estimate.chosen_bearing is None:
        choice = disambiguate_bearing(survey.detecting_bearing, estimate.alpha, bearing_of(segment))
        estimate = with_bearing(estimate, choice)

    path = save_map(revise(pipe_map, segment_id, estimate, survey), args.out)
    _emit(_dump({"revised_map": str(path), "segment_id": segment_id, "bearing": estimate.chosen_bearing}), None)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, settings: Settings) -> int:
    """Run the comparative sweep and write the CSV table and its summary"""
    spec = SweepSpec.model_validate(json.loads(Path(args.sweep).read_text())) if args.sweep else SweepSpec()
    for field, value in (
        ("alphas_deg", args.alphas),
        ("radii_m", args.radii),
        ("depths_m", args.depths),
        ("noise", args.noise),
        ("seeds", args.seeds),
    ):
        if value is not None:
            spec = spec.model_copy(update={field: value})

    rows = bench.run_bench(spec, config=settings.echo(), workers=settings.bench_workers)
    bench.write_csv(rows, args.out)
    summary = bench.summarize(rows)
    bench.write_summary(summary, args.out)
    _emit(_dump(summary), None)
    return EXIT_OK


def cmd_plan(args: argparse.Namespace, settings: Settings) -> int:
    """Suggest a detecting direction for crossing the mapped pipe near a position"""
    nearest = map_bearing_near(load_map(args.map), (args.x, args.y))
    bearing = plan_detecting_bearing(nearest.bearing, args.offset)
    _emit(
        _dump(
            {
                "segment_id": nearest.segment_id,
                "map_bearing": nearest.bearing,
                "detecting_bearing": bearing,
                "tie": nearest.tie,
            }
        ),
        None,
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, settings: Settings) -> int:
    """Serve the HTTP API"""
    import uvicorn

    logger.info(f"Starting {settings.app_name} on {args.host}:{args.port}, documentation at /docs")
    uvicorn.run(
        "app.main:app",
        host=args.host,
        port=args.port,
        reload=settings.debug,
        log_level=settings.log_level.lower(),
    )
    return EXIT_OK


def _add_settings_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration (flag > --config file > environment > default)")
    group.add_argument("--config", help="JSON file with setting overrides")
    group.add_argument("--max-iterations", type=int, help="EIIA iteration cap K")
    group.add_argument("--rms-threshold", type=float, help="EIIA geometric RMS tolerance in meters")
    group.add_argument("--stability-epsilon", type=float, help="EIIA residual stability tolerance in meters")
    group.add_argument(
        "--no-refine",
        dest="refine",
        action="store_const",
        const=False,
        help="Return the best iterate without the final depth-misfit minimization",
    )
    group.add_argument("--threshold-k", type=float, help="Binarization threshold in standard deviations")
    group.add_argument("--min-area", type=int, help="Despeckle minimum component area in pixels")
    group.add_argument("--min-width", type=int, help="Minimum cluster width in columns")
    group.add_argument("--tolerance", type=int, help="Downward-opening tolerance in rows")
    group.add_argument("--spacing", type=float, help="Extraction column spacing in meters")
    group.add_argument("--count", type=int, help="Number of extracted points (whole cluster by default)")
    group.add_argument("--log-level", help="Logging level")
    group.add_argument("--plain-logs", action="store_true", help="Plain-text logs instead of JSON lines")


def _add_survey_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--detecting-bearing", type=float, help="GPR travel direction in degrees from north")
    parser.add_argument("--survey-x", type=float, help="Plan x of the detection in meters")
    parser.add_argument("--survey-y", type=float, help="Plan y of the detection in meters")


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="pipescan", description="Pipe direction and radius from GPR B-scans")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    synth = commands.add_parser("synth", help="render a synthetic B-scan")
    synth.add_argument("--radius", type=float, required=True, help="Pipe radius in meters")
    synth.add_argument("--depth", type=float, required=True, help="Depth of the pipe axis in meters")
    synth.add_argument("--alpha-deg", type=float, required=True, help="Obliquity in (0, 90] degrees")
    synth.add_argument("--apex-x", type=float, help="Scan position above the pipe (default: mid-scan)")
    synth.add_argument("--scan-length", type=float, default=12.0)
    synth.add_argument("--noise", type=float, default=0.0, help="Salt-noise pixel fraction")
    synth.add_argument("--thickness", type=int, default=3, help="Signature thickness in samples")
    synth.add_argument("--aperture", type=float, help="Signature half-width around the apex in meters")
    synth.add_argument("--trace-spacing", type=float, default=0.01)
    synth.add_argument("--sample-interval", type=float, default=0.1, help="Nanoseconds per sample")
    synth.add_argument("--permittivity", type=float, default=9.0)
    synth.add_argument("--rows", type=int, default=1300)
    synth.add_argument("--cols", type=int)
    synth.add_argument("--csv", action="store_true", help="Write a CSV grid instead of float32")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("-o", "--out-dir", required=True)
    _add_settings_options(synth)
    synth.set_defaults(handler=cmd_synth)

    extract = commands.add_parser("extract", help="extract signature points from a B-scan")
    extract.add_argument("bscan")
    extract.add_argument("-o", "--out")
    _add_settings_options(extract)
    extract.set_defaults(handler=cmd_extract)

    invert = commands.add_parser("invert", help="invert extracted points to a pipe estimate")
    invert.add_argument("extraction")
    invert.add_argument("--cluster", type=int, default=0, help="Cluster index in a multi-cluster extraction")
    invert.add_argument("--detecting-bearing", type=float)
    invert.add_argument("--map-bearing", type=float)
    invert.add_argument("-o", "--out")
    _add_settings_options(invert)
    invert.set_defaults(handler=cmd_invert)

    run = commands.add_parser("run", help="B-scan to pipe estimates, optionally revising a map")
    run.add_argument("bscan")
    run.add_argument("--map")
    _add_survey_options(run)
    run.add_argument("--revise-out", help="Write the revised map to this new file")
    run.add_argument("--include-timings", action="store_true")
    run.add_argument("-o", "--out")
    _add_settings_options(run)
    run.set_defaults(handler=cmd_run, parser=run)

    revise_map = commands.add_parser("revise-map", help="revise a map with a pipe estimate")
    revise_map.add_argument("--map", required=True)
    revise_map.add_argument("--estimate", required=True, help="Estimate JSON or run report")
    revise_map.add_argument("--segment", help="Segment id (default: nearest to the survey position)")
    _add_survey_options(revise_map)
    revise_map.add_argument("-o", "--out", required=True)
    _add_settings_options(revise_map)
    revise_map.set_defaults(handler=cmd_revise_map, parser=revise_map)

    bench_cmd = commands.add_parser("bench", help="compare EIIA with the hyperbola baseline")
    bench_cmd.add_argument("--sweep", help="JSON sweep spec")
    bench_cmd.add_argument("--alphas", type=_float_list, help="Comma-separated obliquities in degrees")
    bench_cmd.add_argument("--radii", type=_float_list)
    bench_cmd.add_argument("--depths", type=_float_list)
    bench_cmd.add_argument("--noise", type=_float_list)
    bench_cmd.add_argument("--seeds", type=_int_list)
    bench_cmd.add_argument("--workers", type=int)
    bench_cmd.add_argument("-o", "--out", required=True, help="CSV output path")
    _add_settings_options(bench_cmd)
    bench_cmd.set_defaults(handler=cmd_bench)

    plan = commands.add_parser("plan", help="suggest a detecting bearing across a mapped pipe")
    plan.add_argument("--map", required=True)
    plan.add_argument("--x", type=float, required=True)
    plan.add_argument("--y", type=float, required=True)
    plan.add_argument("--offset", type=float, default=80.0)
    _add_settings_options(plan)
    plan.set_defaults(handler=cmd_plan)

    serve = commands.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=8000)
    _add_settings_options(serve)
    serve.set_defaults(handler=cmd_serve)

    return parser


def _resolve_settings(args: argparse.Namespace) -> Settings:
    overrides = {field: getattr(args, dest, None) for dest, field in _OVERRIDES.items()}
    if args.plain_logs:
        overrides["log_json"] = False
    return load_settings(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and not 0.0 < args.alpha_deg <= 90.0:
        parser.error(f"--alpha-deg must be in (0, 90], got {args.alpha_deg}")

    try:
        settings = _resolve_settings(args)
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR
    configure_logging(settings.log_level, settings.log_json)

    handler: Callable[[argparse.Namespace, Settings], int] = args.handler
    try:
        return handler(args, settings)
    except (PipeScanError, OSError, ValidationError, ValueError, KeyError) as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR
