"""
FastAPI application for the meta-ridge risk service.
"""

import logging
import time
import uuid
from contextlib import asynccontextmanager

import uvicorn
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import ValidationError

from .api.v1 import experiments, health, risk
from .exceptions import NUMERICAL_ERRORS, ConfigError, MetaRidgeError
from .models.response import ErrorResponse
from .services.cache_service import cache_service
from .utils.logging import setup_logging
from .utils.metrics import metrics_manager
from config.settings import settings

setup_logging(serve=True)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan management."""
    logger.info("Starting Meta-Ridge Risk API...")
    logger.info(f"API Version: {settings.API_VERSION}")
    logger.info(f"Experiment threads: {settings.THREADS}")

    cache_healthy = await cache_service.health_check()
    logger.info(f"Cache Service: {'✓' if cache_healthy else '✗'}")

    yield

    logger.info("Shutting down Meta-Ridge Risk API...")
    await cache_service.close()


app = FastAPI(
    title=settings.API_TITLE,
    description=settings.API_DESCRIPTION,
    version=settings.API_VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=settings.CORS_METHODS,
    allow_headers=["*"],
)


@app.middleware("http")
async def request_logging_middleware(request: Request, call_next):
    """Log all requests and responses."""
    request_id = str(uuid.uuid4())
    request.state.request_id = request_id

    start_time = time.time()
    client_ip = request.client.host if request.client else "unknown"

    logger.info(
        "Request started",
        extra={
            "request_id": request_id,
            "method": request.method,
            "url": str(request.url),
            "client_ip": client_ip,
        },
    )

    response = await call_next(request)

    process_time = (time.time() - start_time) * 1000
    logger.info(
        "Request completed",
        extra={
            "request_id": request_id,
            "status_code": response.status_code,
            "process_time_ms": round(process_time, 2),
        },
    )

    response.headers["X-Request-ID"] = request_id
    response.headers["X-Process-Time"] = str(round(process_time, 2))

    metrics_manager.record_request(
        method=request.method,
        endpoint=request.url.path,
        status_code=response.status_code,
        response_time=process_time / 1000,
    )
    return response


def _error(request: Request, status_code: int, error: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content=ErrorResponse(
            error=error,
            message=message,
            details=details,
            request_id=getattr(request.state, "request_id", "unknown"),
            timestamp=str(time.time()),
        ).model_dump(),
    )


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    logger.warning(f"Request validation failed: {exc.errors()}")
    return _error(request, 422, "ValidationError", "Request body failed validation",
                  {"errors": jsonable_errors(exc.errors())})


@app.exception_handler(ValidationError)
async def model_validation_exception_handler(request: Request, exc: ValidationError):
    logger.warning(f"Model validation failed: {exc}")
    return _error(request, 422, "ValidationError", str(exc))


@app.exception_handler(ConfigError)
async def config_exception_handler(request: Request, exc: ConfigError):
    logger.warning(f"Configuration error: {exc}")
    return _error(request, 422, "ConfigError", str(exc))


@app.exception_handler(MetaRidgeError)
async def numerical_exception_handler(request: Request, exc: MetaRidgeError):
    level = logging.ERROR if isinstance(exc, NUMERICAL_ERRORS) else logging.WARNING
    logger.log(level, f"{type(exc).__name__}: {exc}", extra={"request_id": getattr(request.state, "request_id", None)})
    return _error(request, 500, type(exc).__name__, str(exc))


@app.exception_handler(HTTPException)
async def http_exception_handler(request: Request, exc: HTTPException):
    logger.warning(f"HTTP exception: {exc.status_code} - {exc.detail}")
    return _error(request, exc.status_code, "HTTPException", str(exc.detail))


@app.exception_handler(Exception)
async def general_exception_handler(request: Request, exc: Exception):
    logger.error(f"Unhandled exception: {exc}", exc_info=True)
    return _error(request, 500, "InternalServerError", "An internal server error occurred")


def jsonable_errors(errors) -> list:
    """Validation error entries reduced to JSON-safe fields."""
    return [{"loc": [str(part) for part in err.get("loc", ())], "msg": str(err.get("msg", "")),
             "type": str(err.get("type", ""))} for err in errors]


app.include_router(health.router, prefix="/v1", tags=["Health"])
app.include_router(risk.router, prefix="/v1", tags=["Risk"])
app.include_router(experiments.router, prefix="/v1", tags=["Experiments"])


@app.get("/", include_in_schema=False)
async def root():
    return {
        "service": "Meta-Ridge Risk API",
        "version": settings.API_VERSION,
        "status": "running",
        "docs": "/docs",
        "health": "/v1/health",
    }


if settings.ENABLE_METRICS:
    @app.get("/metrics", include_in_schema=False)
    async def metrics():
        """Prometheus metrics endpoint."""
        from prometheus_client import CONTENT_TYPE_LATEST

        return Response(content=metrics_manager.export(), media_type=CONTENT_TYPE_LATEST)


def run_server(host: str = None, port: int = None, reload: bool = False):
    uvicorn.run(
        "metaridge.main:app",
        host=host or settings.HOST,
        port=port or settings.PORT,
        workers=settings.WORKERS,
        reload=reload,
        log_level=settings.LOG_LEVEL.lower(),
    )


if __name__ == "__main__":
    run_server(reload=settings.LOG_LEVEL == "DEBUG")
