"""
Request models for the FastAPI endpoints.
"""

from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from .config import ExperimentConfig


class MpLawRiskRequest(BaseModel):
    """Closed-form limiting risk for Λ = ϱI."""
    lam: float = Field(..., gt=0.0, alias="lambda", description="Ridge parameter λ")
    gamma: float = Field(..., gt=0.0, description="Aspect ratio p/n of the new task")
    sigma2: float = Field(..., ge=0.0, description="Noise variance σ²")
    rho: float = Field(1.0, gt=0.0, description="Point-mass location ϱ of the spectral law")

    model_config = {
        "populate_by_name": True,
        "json_schema_extra": {"example": {"lambda": 3.0, "gamma": 2.0, "sigma2": 1.5, "rho": 1.0}},
    }


class _ConfigSource(BaseModel):
    """Either an inline experiment configuration or the name of a preset."""
    config: Optional[ExperimentConfig] = Field(None, description="Inline experiment configuration")
    preset: Optional[str] = Field(None, description="Name of a shipped preset")

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.config is None) == (self.preset is None):
            raise ValueError("provide exactly one of 'config' or 'preset'")
        return self


class RiskCurveRequest(_ConfigSource):
    """Limiting-risk curve over an explicit or evenly spaced λ grid."""
    lambda_grid: Optional[List[float]] = Field(None, description="Explicit ascending λ grid")
    lambda_min: Optional[float] = Field(None, gt=0.0)
    lambda_max: Optional[float] = Field(None, gt=0.0)
    points: int = Field(40, ge=1, le=2000)

    @model_validator(mode="after")
    def _grid_given(self):
        if self.lambda_grid is None and (self.lambda_min is None or self.lambda_max is None):
            raise ValueError("provide lambda_grid or both lambda_min and lambda_max")
        if self.lambda_grid is None and self.lambda_max <= self.lambda_min:
            raise ValueError("lambda_max must exceed lambda_min")
        return self

    model_config = {
        "json_schema_extra": {
            "example": {"preset": "desk-risk-curve", "lambda_min": 0.1, "lambda_max": 10.0, "points": 40}
        }
    }


class SimulateRequest(_ConfigSource):
    """Run the simulation harness."""
    use_cache: bool = Field(True, description="Serve and store results through the result cache")

    model_config = {"json_schema_extra": {"example": {"preset": "desk-risk-curve"}}}
