"""
Inversion routes: signature points to pipe estimates, and bearing disambiguation
"""

import logging
import math

from fastapi import APIRouter, HTTPException
from pydantic import ValidationError

from app.config import settings
from app.errors import PipeScanError
from app.models.api import BearingRequest, BearingResponse, InvertRequest
from app.models.signature import PipeEstimate, SignaturePointSet
from app.services.eiia import disambiguate_bearing
from app.services.pipeline import InversionPipeline

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post("/invert", response_model=PipeEstimate)
def invert(request: InvertRequest):
    """
    Invert signature points to the pipe's cross section

    Args:
        request: InvertRequest with points and optional overrides and bearings

    Returns:
        PipeEstimate: ellipse, obliquity, radius and, when bearings are given, candidates
    """
    overrides = {
        "eiia_max_iterations": request.max_iterations,
        "eiia_rms_threshold_m": request.rms_threshold_m,
        "eiia_stability_epsilon_m": request.stability_epsilon_m,
        "eiia_refine": request.refine,
    }
    resolved = settings.model_copy(update={k: v for k, v in overrides.items() if v is not None})
    try:
        logger.info(f"Received inversion request with {len(request.points)} points")
        pts = SignaturePointSet(points=request.points)
        return InversionPipeline(resolved).invert(pts, request.detecting_bearing, request.map_bearing)
    except (PipeScanError, ValidationError) as e:
        logger.warning(f"Inversion rejected: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error processing inversion request: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Internal server error: {str(e)}")


@router.post("/bearing", response_model=BearingResponse)
async def bearing(request: BearingRequest):
    """
    Choose between the two candidate pipe bearings using the mapped one

    Returns:
        BearingResponse: both candidates, the chosen bearing and the tie flag
    """
    try:
        choice = disambiguate_bearing(request.detecting_bearing, math.radians(request.alpha_deg), request.map_bearing)
        return BearingResponse(candidates=choice.candidates, chosen=choice.chosen, tie=choice.tie)
    except Exception as e:
        logger.error(f"Error processing bearing request: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Internal server error: {str(e)}")
