"""
API routes for the magnetic tunneling service
"""

import logging
import os

from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from src.core.config import settings
from src.core.errors import PreconditionError, TunnelingError
from src.models.schemas import (
    DeGennesConstants, DomainConfig, DomainSummary, HealthResponse, PredictionRequest, PredictionResponse,
    RunConfig
)
from src.services.pipeline import PipelineService
from src.services.splitting import SplittingCalculator

logger = logging.getLogger(__name__)

# Create router
router = APIRouter()

# Default pipeline; its constants are shared by every request
pipeline = PipelineService()


def _served_domain(domain: DomainConfig) -> DomainConfig:
    """Sampled curves are read from the curves directory only"""
    if domain.path is None:
        return domain
    base = os.path.realpath(settings.CURVES_DIR)
    for candidate in (domain.path, os.path.join(base, domain.path)):
        real = os.path.realpath(candidate)
        if os.path.commonpath([real, base]) == base and os.path.isfile(real):
            return domain.model_copy(update={"path": real})
    raise PreconditionError(f"curve file {domain.path!r} is not in {settings.CURVES_DIR}")


def _domain_pipeline(domain: DomainConfig) -> PipelineService:
    config = RunConfig(domain=_served_domain(domain), degennes=pipeline.config.degennes,
                       geometry=pipeline.config.geometry)
    return PipelineService(config, constants=pipeline.constants())


def _raise_http(e: TunnelingError, action: str):
    logger.error(f"Error {action}: {str(e)}")
    raise HTTPException(status_code=e.http_status, detail=str(e))


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Get system health status"""
    try:
        status = pipeline.get_system_status()

        return HealthResponse(
            status=status["status"],
            version="1.0.0",
            components=status.get("components", {})
        )
    except Exception as e:
        logger.error(f"Error checking health: {str(e)}")
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/constants", response_model=DeGennesConstants)
async def get_constants():
    """de Gennes constants on the configured grid (computed once)"""
    try:
        return await run_in_threadpool(pipeline.constants)
    except TunnelingError as e:
        _raise_http(e, "computing constants")


@router.post("/geometry", response_model=DomainSummary)
async def analyze_domain(domain: DomainConfig):
    """
    Wells, actions and prefactors of a domain

    Example request:
    {"kind": "ellipse", "a": 2.0, "b": 1.0}
    """
    try:
        return await run_in_threadpool(lambda: _domain_pipeline(domain).domain_summary())
    except TunnelingError as e:
        _raise_http(e, "analyzing domain")
    except ValueError as e:
        logger.error(f"Error reading curve: {str(e)}")
        raise HTTPException(status_code=422, detail=str(e))


@router.post("/prediction", response_model=PredictionResponse)
async def predict_gap(request: PredictionRequest):
    """Predicted gap over an h grid"""

    def compute() -> PredictionResponse:
        inputs = _domain_pipeline(request.domain).splitting_inputs(alpha0=request.alpha0)
        prediction = SplittingCalculator(inputs).predict(
            request.hgrid.values(), request.normalization, with_flux=request.with_flux
        )
        return PredictionResponse(
            h=prediction.h.tolist(),
            gap_formula=prediction.gap_formula.tolist(),
            envelope=prediction.envelope.tolist(),
            phase_mod_2pi=prediction.phase_mod_2pi.tolist(),
            S=inputs.S,
            alpha0=inputs.alpha0,
            normalization=prediction.normalization,
            dominant_arc=prediction.dominant_arc,
        )

    try:
        return await run_in_threadpool(compute)
    except TunnelingError as e:
        _raise_http(e, "predicting gap")
    except ValueError as e:
        logger.error(f"Error reading curve: {str(e)}")
        raise HTTPException(status_code=422, detail=str(e))
