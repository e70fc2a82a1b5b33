"""
Configuration settings for the metaridge library, CLI and HTTP service.
"""

from typing import List, Optional
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    # API Configuration
    API_VERSION: str = Field("1.0.0", description="API version")
    API_TITLE: str = Field("Meta-Ridge Risk API", description="API title")
    API_DESCRIPTION: str = Field(
        "Hyper-covariance estimation and predictive-risk evaluation for meta-learning with generalized ridge regression",
        description="API description",
    )

    # Server Configuration
    HOST: str = Field("0.0.0.0", description="Server host")
    PORT: int = Field(8080, description="Server port")
    WORKERS: int = Field(1, description="Number of worker processes")

    # Execution Configuration
    THREADS: int = Field(1, ge=1, description="Maximum number of experiment runs executed concurrently")

    # Numerical Defaults
    EIG_FLOOR: float = Field(1e-8, ge=0.0, description="Eigenvalue floor used by SPD projections")
    GRAD_TOL: float = Field(1e-8, gt=0.0, description="Default Frobenius-norm gradient tolerance for descent")
    MAX_ITER: int = Field(2000, ge=1, description="Default iteration cap for descent")
    GRAM_TENSOR_MAX_DIM: int = Field(
        48, ge=0, description="Largest dimension p for which the MoM Gram tensor is precomputed"
    )
    FIXED_POINT_TOL: float = Field(1e-12, gt=0.0, description="Stieltjes fixed-point residual tolerance")
    FIXED_POINT_MAX_ITER: int = Field(10000, ge=1, description="Stieltjes fixed-point iteration cap")
    SURROGATE_MIN_DIM: int = Field(1000, ge=1, description="Smallest surrogate dimension for limiting-risk estimates")

    # Cache Configuration
    CACHE_TTL: int = Field(3600, description="Cache TTL in seconds")
    REDIS_URL: Optional[str] = Field(None, description="Redis URL for caching")

    # Logging Configuration
    LOG_LEVEL: str = Field("INFO", description="Logging level")
    LOG_FORMAT: str = Field("text", description="Logging format (json/text)")
    LOG_FILE: Optional[str] = Field(None, description="Log file path")

    # Security Configuration
    CORS_ORIGINS: List[str] = Field(["*"], description="CORS allowed origins")
    CORS_METHODS: List[str] = Field(["GET", "POST"], description="CORS allowed methods")

    # Monitoring Configuration
    ENABLE_METRICS: bool = Field(True, description="Enable Prometheus metrics")

    model_config = {
        "env_file": ".env",
        "env_prefix": "METARIDGE_",
        "case_sensitive": True,
    }


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get application settings."""
    return settings
