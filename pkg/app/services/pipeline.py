"""
End-to-end orchestration: B-scan -> clusters -> point sets -> estimates -> map revision
"""

import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from app.config import Settings, settings
from app.errors import ClusterTooNarrow, ConfigError, FitError, GeometryError
from app.models.bscan import BScanGrid, Cluster
from app.models.pipemap import NearestSegment, PipeMap, SurveyLine
from app.models.report import ClusterReport, RunReport
from app.models.signature import PipeEstimate, SignaturePointSet
from app.services.bscan import extract_point_set, find_downward_opening_clusters, load_bscan, preprocess
from app.services.eiia import candidate_bearings, disambiguate_bearing, run_eiia, with_bearing
from app.services.pipemap import load_map, map_bearing_near, revise, save_map

logger = logging.getLogger(__name__)

ELLIPSE_SAMPLES = 180


class InversionPipeline:
    """Service running the inversion chain with one resolved configuration"""

    def __init__(self, config: Optional[Settings] = None):
        """Bind the pipeline to explicit settings, or to the global ones"""
        self.settings = config or settings

    def detect(self, grid: BScanGrid) -> List[Cluster]:
        """Preprocess a grid and return its downward-opening clusters, shallowest first"""
        image = preprocess(
            grid,
            threshold_k=self.settings.preprocess_threshold_k,
            min_component_area=self.settings.preprocess_min_component_area,
        )
        return find_downward_opening_clusters(
            image,
            min_width=self.settings.cluster_min_width,
            tolerance=self.settings.cluster_tolerance_rows,
        )

    def extract(self, cluster: Cluster, grid: BScanGrid) -> SignaturePointSet:
        return extract_point_set(
            cluster,
            grid,
            spacing=self.settings.extract_spacing_m,
            count=self.settings.extract_count,
        )

    def extract_all(self, grid: BScanGrid) -> List[Tuple[Cluster, Optional[SignaturePointSet], Optional[str]]]:
        """
        Extract a point set from every cluster

        Returns:
            (cluster, point set or None, error message or None) per cluster
        """
        extracted = []
        for cluster in self.detect(grid):
            try:
                extracted.append((cluster, self.extract(cluster, grid), None))
            except ClusterTooNarrow as e:
                logger.warning(f"Cluster at column {cluster.apex_column} skipped: {e}")
                extracted.append((cluster, None, str(e)))
        return extracted

    def invert(
        self,
        pts: SignaturePointSet,
        detecting_bearing: Optional[float] = None,
        map_bearing: Optional[float] = None,
    ) -> PipeEstimate:
        """
        Run the inversion and attach bearings when the detecting direction is known

        Args:
            pts: signature points
            detecting_bearing: GPR travel direction in degrees
            map_bearing: bearing of the mapped pipe; enables disambiguation

        Returns:
            PipeEstimate
        """
        estimate = run_eiia(pts, self.settings.eiia_config())
        if detecting_bearing is None:
            return estimate
        if map_bearing is None:
            return estimate.model_copy(
                update={"candidate_bearings": candidate_bearings(detecting_bearing, estimate.alpha)}
            )
        choice = disambiguate_bearing(detecting_bearing, estimate.alpha, map_bearing)
        return with_bearing(estimate, choice)

    def run(
        self,
        bscan_path: Union[str, Path],
        map_path: Optional[Union[str, Path]] = None,
        survey: Optional[SurveyLine] = None,
        revised_map_path: Optional[Union[str, Path]] = None,
        include_timings: bool = False,
    ) -> RunReport:
        """
        Process one B-scan end to end

        Clusters that cannot be extracted or inverted are reported with their
        error; the first (shallowest) estimate revises the map when a revised
        map path is given.

        Returns:
            RunReport, flagged "no_cluster" when nothing was detected
        """
        if revised_map_path is not None:
            if map_path is None or survey is None:
                raise ConfigError("map revision needs both a map and a survey line")
            if Path(revised_map_path).resolve() == Path(map_path).resolve():
                raise ConfigError("the revised map must be written to a new file")

        timings: Dict[str, float] = {}
        started = time.perf_counter()
        grid = load_bscan(bscan_path)
        timings["load"] = time.perf_counter() - started

        pipe_map: Optional[PipeMap] = None
        nearest: Optional[NearestSegment] = None
        flags: List[str] = []
        if map_path is not None:
            pipe_map = load_map(map_path)
            if survey is not None:
                nearest = map_bearing_near(pipe_map, survey.position)
                if nearest.tie:
                    flags.append("segment_tie")

        started = time.perf_counter()
        extracted = self.extract_all(grid)
        timings["detect"] = time.perf_counter() - started
        if not extracted:
            logger.warning(f"No downward-opening cluster in {bscan_path}")
            flags.append("no_cluster")

        started = time.perf_counter()
        reports = []
        for index, (cluster, pts, error) in enumerate(extracted):
            reports.append(self._cluster_report(index, cluster, grid, pts, error, survey, nearest))
        timings["invert"] = time.perf_counter() - started

        revised_path = None
        if revised_map_path is not None and pipe_map is not None and nearest is not None:
            first = next((r.estimate for r in reports if r.estimate is not None), None)
            if first is None:
                flags.append("map_not_revised")
            else:
                revised = revise(pipe_map, nearest.segment_id, first, survey)
                revised_path = str(save_map(revised, revised_map_path))

        logger.info(
            f"Run on {bscan_path}: {len(reports)} clusters in "
            f"{sum(timings.values()):.3f} s ({', '.join(f'{k}={v:.3f}' for k, v in timings.items())})"
        )
        return RunReport(
            bscan_path=str(bscan_path),
            map_path=None if map_path is None else str(map_path),
            revised_map_path=revised_path,
            config=self.settings.echo(),
            survey=survey,
            clusters=reports,
            flags=flags,
            timings_s=timings if include_timings else None,
        )

    def _cluster_report(
        self,
        index: int,
        cluster: Cluster,
        grid: BScanGrid,
        pts: Optional[SignaturePointSet],
        error: Optional[str],
        survey: Optional[SurveyLine],
        nearest: Optional[NearestSegment],
    ) -> ClusterReport:
        report = ClusterReport(
            index=index,
            apex_column=cluster.apex_column,
            apex_x_m=cluster.apex_column * grid.trace_spacing,
            width_columns=cluster.width,
            nearest_segment=nearest,
            error=error,
        )
        if pts is None:
            return report

        update = {"extraction_flags": list(pts.flags), "points": list(pts.points)}
        try:
            estimate = self.invert(
                pts,
                detecting_bearing=None if survey is None else survey.detecting_bearing,
                map_bearing=None if nearest is None else nearest.bearing,
            )
        except (FitError, GeometryError) as e:
            logger.warning(f"Inversion of cluster {index} failed: {e}")
            update["error"] = str(e)
            return report.model_copy(update=update)

        update.update(
            {
                "estimate": estimate,
                "inverted_points": list(estimate.inverted_points),
                "ellipse_samples": [tuple(p) for p in estimate.ellipse.sample_boundary(ELLIPSE_SAMPLES).tolist()],
                "residual_history": list(estimate.residual_history),
            }
        )
        return report.model_copy(update=update)


# Global service instance
pipeline = InversionPipeline()
