"""
Experiment API endpoints.
"""

import logging
import time

from fastapi import APIRouter, BackgroundTasks, Request
from fastapi.concurrency import run_in_threadpool

from ...models.request import SimulateRequest
from ...models.response import SimulateResponse
from ...services.cache_service import cache_service
from ...services.experiment_service import experiment_service
from ...services.io_service import resolve_preset

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post(
    "/experiments/simulate",
    response_model=SimulateResponse,
    summary="Run the simulation harness",
    description="Estimate the hyper-covariance over repeated runs and compare new-task risks with the limit",
)
async def simulate(
    request_data: SimulateRequest,
    background_tasks: BackgroundTasks,
    request: Request,
) -> SimulateResponse:
    """
    Runs are CPU bound and execute in the thread pool. Identical configurations
    give identical results, so finished results are cached by configuration.
    """
    start_time = time.time()
    request_id = getattr(request.state, "request_id", "unknown")
    config = request_data.config or resolve_preset(request_data.preset)

    if request_data.use_cache:
        cached = await cache_service.get(config)
        if cached is not None:
            logger.info("Cache hit", extra={"request_id": request_id, "experiment": config.name})
            return SimulateResponse(
                rows=cached.rows,
                failures=cached.failures,
                cached=True,
                processing_time_ms=int((time.time() - start_time) * 1000),
            )

    result = await run_in_threadpool(experiment_service.run_experiment, config)
    if request_data.use_cache:
        background_tasks.add_task(cache_service.set, config, result)

    processing_time = int((time.time() - start_time) * 1000)
    logger.info(
        "Simulation completed",
        extra={"request_id": request_id, "experiment": config.name, "rows": len(result.rows),
               "failures": len(result.failures), "processing_time_ms": processing_time},
    )
    return SimulateResponse(rows=result.rows, failures=result.failures, cached=False,
                            processing_time_ms=processing_time)
