"""
Response models for the FastAPI endpoints.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .results import RiskCurvePoint, RunFailure, SummaryRow


class ErrorResponse(BaseModel):
    """Error body returned by every failing endpoint."""
    error: str = Field(..., description="Error type")
    message: str = Field(..., description="Error message")
    details: Optional[Dict[str, Any]] = Field(None, description="Additional error details")
    request_id: Optional[str] = Field(None, description="Request identifier")
    timestamp: str = Field(..., description="Error timestamp")

    model_config = {
        "json_schema_extra": {
            "example": {
                "error": "NoConvergenceError",
                "message": "Stieltjes fixed point did not converge in 10000 iterations",
                "request_id": "3f0c2b7e-8a8e-4a44-9c55-0d2b1f5f9a10",
                "timestamp": "1760700000.0",
            }
        }
    }


class HealthCheckResponse(BaseModel):
    status: str = Field(..., description="Service status")
    version: str = Field(..., description="API version")
    cache_connection: bool = Field(..., description="Cache backend reachable")
    threads: int = Field(..., description="Concurrent experiment runs allowed")
    uptime_seconds: int = Field(..., description="Service uptime in seconds")
    timestamp: str = Field(..., description="Check timestamp")


class MpLawRiskResponse(BaseModel):
    risk: float = Field(..., description="Limiting risk r(λ, γ)")
    optimal_lambda: float = Field(..., description="Risk-minimizing λ = γσ²")
    optimal_risk: float = Field(..., description="Limiting risk at the optimal λ")


class RiskCurveResponse(BaseModel):
    points: List[RiskCurvePoint] = Field(default_factory=list)
    failed_points: int = Field(0, description="Grid points whose solver failed")


class SimulateResponse(BaseModel):
    rows: List[SummaryRow] = Field(default_factory=list)
    failures: List[RunFailure] = Field(default_factory=list)
    cached: bool = Field(False, description="Whether the result was served from the cache")
    processing_time_ms: int = Field(..., description="Wall time spent answering the request")
