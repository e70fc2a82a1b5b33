"""
Limiting-risk API endpoints.
"""

import logging

import numpy as np
from fastapi import APIRouter, Request
from fastapi.concurrency import run_in_threadpool

from ...core.asymptotics import mp_law_risk, optimal_lambda_asymptotic, optimal_limiting_risk
from ...models.request import MpLawRiskRequest, RiskCurveRequest
from ...models.response import MpLawRiskResponse, RiskCurveResponse
from ...services.experiment_service import experiment_service
from ...services.io_service import resolve_preset

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post(
    "/risk/mp-law",
    response_model=MpLawRiskResponse,
    summary="Closed-form limiting risk",
    description="Limiting predictive risk when the whitened test covariance has a point-mass spectrum",
)
async def get_mp_law_risk(request_data: MpLawRiskRequest) -> MpLawRiskResponse:
    optimal_lambda = optimal_lambda_asymptotic(request_data.gamma, request_data.sigma2)
    return MpLawRiskResponse(
        risk=mp_law_risk(request_data.lam, request_data.gamma, request_data.sigma2, request_data.rho),
        optimal_lambda=optimal_lambda,
        optimal_risk=optimal_limiting_risk(request_data.gamma, request_data.sigma2, request_data.rho),
    )


@router.post(
    "/risk/curve",
    response_model=RiskCurveResponse,
    summary="Limiting-risk curve",
    description="Limiting risk over a λ grid for every n_new of a configuration or preset",
)
async def get_risk_curve(request_data: RiskCurveRequest, request: Request) -> RiskCurveResponse:
    config = request_data.config or resolve_preset(request_data.preset)
    if request_data.lambda_grid is not None:
        grid = request_data.lambda_grid
    else:
        grid = np.linspace(request_data.lambda_min, request_data.lambda_max, request_data.points).tolist()

    points = await run_in_threadpool(experiment_service.risk_curve, config, grid)
    failed = sum(1 for point in points if point.error is not None)
    logger.info(
        "Risk curve computed",
        extra={"request_id": getattr(request.state, "request_id", "unknown"),
               "experiment": config.name, "points": len(points), "failed_points": failed},
    )
    return RiskCurveResponse(points=points, failed_points=failed)
