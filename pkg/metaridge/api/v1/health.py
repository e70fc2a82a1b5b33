"""
Health check API endpoints.
"""

import time
from datetime import datetime, timezone

from fastapi import APIRouter

from ...models.response import HealthCheckResponse
from ...services.cache_service import cache_service
from ...utils.metrics import metrics_manager
from config.settings import settings

router = APIRouter()

START_TIME = time.time()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


@router.get(
    "/health",
    response_model=HealthCheckResponse,
    summary="Health check endpoint",
    description="Check the health status of the service and its cache backend",
)
async def get_health() -> HealthCheckResponse:
    """
    The service is healthy whenever it answers; a missing Redis only means the
    local cache is in use.
    """
    cache_healthy = await cache_service.health_check()
    return HealthCheckResponse(
        status="healthy",
        version=settings.API_VERSION,
        cache_connection=cache_healthy,
        threads=settings.THREADS,
        uptime_seconds=int(time.time() - START_TIME),
        timestamp=_now(),
    )


@router.get(
    "/health/detailed",
    summary="Detailed health information",
    description="Health status together with run, fit and cache statistics",
)
async def get_detailed_health():
    health = await get_health()
    return {
        "health": health.model_dump(),
        "metrics": metrics_manager.get_summary_stats(),
        "cache_stats": await cache_service.get_stats(),
        "configuration": {
            "threads": settings.THREADS,
            "gram_tensor_max_dim": settings.GRAM_TENSOR_MAX_DIM,
            "surrogate_min_dim": settings.SURROGATE_MIN_DIM,
            "cache_ttl": settings.CACHE_TTL,
        },
    }


@router.get(
    "/alive",
    summary="Liveness check",
    description="Check if the service is alive",
)
async def get_liveness():
    return {
        "status": "alive",
        "uptime_seconds": int(time.time() - START_TIME),
        "timestamp": _now(),
    }
