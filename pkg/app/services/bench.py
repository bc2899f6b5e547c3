"""
Synthetic benchmark comparing EIIA with the circular hyperbola baseline
"""

import csv
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from app.config import Settings
from app.errors import FitError, GeometryError
from app.models.report import BenchCase, BenchRow, SweepSpec
from app.models.scene import GridParams, PipeScene
from app.services.eiia import run_eiia
from app.services.fitting import fit_hyperbola_baseline
from app.services.pipeline import InversionPipeline
from app.services.synth import render

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "alpha_deg",
    "radius_m",
    "depth_m",
    "noise",
    "seed",
    "eiia_radius_err",
    "hyperbola_radius_err",
    "alpha_err",
    "iterations",
    "status",
]


def sweep_cases(spec: SweepSpec) -> List[BenchCase]:
    """Expand a sweep into its cases, in case-key order"""
    cases = [
        BenchCase(alpha_deg=a, radius_m=r, depth_m=d, noise=n, seed=s)
        for a, r, d, n, s in itertools.product(spec.alphas_deg, spec.radii_m, spec.depths_m, spec.noise, spec.seeds)
    ]
    return sorted(cases, key=lambda c: (c.alpha_deg, c.radius_m, c.depth_m, c.noise, c.seed))


def evaluate_case(
    case: BenchCase,
    config: Optional[Dict[str, Any]] = None,
    grid_params: Optional[GridParams] = None,
) -> BenchRow:
    """
    Render one scene and invert its signature with both methods

    Both methods see the same extracted points. Failures are recorded in the
    row status instead of being raised.
    """
    resolved = Settings(**(config or {}))
    pipeline = InversionPipeline(resolved)
    row = case.model_dump()

    scene = PipeScene.from_degrees(case.radius_m, case.depth_m, case.alpha_deg, noise_salt_fraction=case.noise)
    grid, truth = render(scene, grid_params, seed=case.seed)
    usable = [(c, pts) for c, pts, _ in pipeline.extract_all(grid) if pts is not None]
    if not usable:
        return BenchRow(**row, status="no_cluster")
    _, pts = min(usable, key=lambda item: abs(item[0].apex_column - truth.apex_columns[0]))

    status = []
    try:
        estimate = run_eiia(pts, resolved.eiia_config())
        row["eiia_radius_err"] = abs(estimate.radius - case.radius_m) / case.radius_m
        row["alpha_err"] = abs(estimate.alpha_deg - case.alpha_deg)
        row["iterations"] = estimate.iterations_used
    except (FitError, GeometryError) as e:
        logger.warning(f"EIIA failed on {case.model_dump()}: {e}")
        status.append("eiia_failed")

    try:
        baseline = fit_hyperbola_baseline(pts.points)
        row["hyperbola_radius_err"] = abs(baseline.radius - case.radius_m) / case.radius_m
    except (FitError, GeometryError) as e:
        logger.warning(f"Hyperbola baseline failed on {case.model_dump()}: {e}")
        status.append("hyperbola_failed")

    return BenchRow(**row, status="+".join(status) or "ok")


def run_bench(
    spec: SweepSpec,
    config: Optional[Dict[str, Any]] = None,
    grid_params: Optional[GridParams] = None,
    workers: int = 1,
) -> List[BenchRow]:
    """
    Evaluate every sweep case, in parallel when workers > 1

    Rows come back ordered by case key whatever the completion order.
    """
    cases = sweep_cases(spec)
    logger.info(f"Benchmarking {len(cases)} cases with {workers} worker(s)")
    if workers > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(
                executor.map(
                    evaluate_case,
                    cases,
                    itertools.repeat(config),
                    itertools.repeat(grid_params),
                )
            )
    else:
        rows = [evaluate_case(case, config, grid_params) for case in cases]
    return sorted(rows, key=lambda r: r.key)


def _stats(values: Sequence[float]) -> Dict[str, Optional[float]]:
    if not values:
        return {"mean": None, "max": None}
    return {"mean": sum(values) / len(values), "max": max(values)}


def summarize(rows: Sequence[BenchRow]) -> Dict[str, Any]:
    """
    Mean and max errors per method, in percent

    Direction error is expressed relative to the true obliquity.
    """
    eiia_radius = [100.0 * r.eiia_radius_err for r in rows if r.eiia_radius_err is not None]
    eiia_direction = [100.0 * r.alpha_err / r.alpha_deg for r in rows if r.alpha_err is not None]
    hyperbola_radius = [100.0 * r.hyperbola_radius_err for r in rows if r.hyperbola_radius_err is not None]

    eiia_r, eiia_d, hyp_r = _stats(eiia_radius), _stats(eiia_direction), _stats(hyperbola_radius)
    return {
        "cases": len(rows),
        "eiia": {
            "mean_radius_err_pct": eiia_r["mean"],
            "max_radius_err_pct": eiia_r["max"],
            "mean_direction_err_pct": eiia_d["mean"],
            "max_direction_err_pct": eiia_d["max"],
            "failures": len(rows) - len(eiia_radius),
        },
        "hyperbola": {
            "mean_radius_err_pct": hyp_r["mean"],
            "max_radius_err_pct": hyp_r["max"],
            "failures": len(rows) - len(hyperbola_radius),
        },
    }


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float) and not math.isfinite(value):
        return ""
    return value


def write_csv(rows: Sequence[BenchRow], path: Union[str, Path]) -> Path:
    """Write the bench table; an empty sweep still gets the header"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.model_dump().items()})
    return path


def summary_path(csv_path: Union[str, Path]) -> Path:
    path = Path(csv_path)
    return path.with_name(f"{path.stem}.summary.json")


def write_summary(summary: Dict[str, Any], csv_path: Union[str, Path]) -> Path:
    path = summary_path(csv_path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path
