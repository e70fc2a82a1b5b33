"""
Result records produced by the experiment service.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

SUMMARY_COLUMNS = [
    "n_new", "risk_identity", "risk_estimated", "risk_limit", "diff_pct", "frob_err", "run_count", "seed",
]
EXACT_COLUMNS = ["risk_identity_exact", "risk_estimated_exact"]
RISK_CURVE_COLUMNS = ["lambda", "n_new", "gamma", "risk", "iterations", "residual", "error"]
C_SWEEP_COLUMNS = ["c", "n_new", "lambda", "risk_estimated", "risk_estimated_exact", "run_count"]


def difference_percentage(risk_estimated: float, risk_limit: float) -> float:
    return 100.0 * (risk_estimated - risk_limit) / risk_limit


class SummaryRow(BaseModel):
    """Risks averaged over the successful runs for one new-task size."""
    n_new: int = Field(..., description="Sample size of the new task")
    risk_identity: float = Field(..., description="Risk of standard ridge, weight I")
    risk_estimated: float = Field(..., description="Risk of generalized ridge with the estimated weight")
    risk_limit: float = Field(..., description="Limiting risk r(λ, γ)")
    diff_pct: float = Field(..., description="100·(risk_estimated − risk_limit)/risk_limit")
    frob_err: Optional[float] = Field(None, description="Mean ‖Ω̂ − Ω‖_F when Ω is known")
    run_count: int = Field(..., ge=0, description="Number of successful runs")
    seed: int = Field(..., description="Master seed")
    risk_identity_exact: Optional[float] = Field(None, description="Exact plug-in risk with weight I")
    risk_estimated_exact: Optional[float] = Field(None, description="Exact plug-in risk with the estimated weight")

    @model_validator(mode="before")
    @classmethod
    def _derive_diff_pct(cls, values):
        if isinstance(values, dict) and values.get("diff_pct") is None and "risk_limit" in values:
            values = dict(values)
            values["diff_pct"] = difference_percentage(values["risk_estimated"], values["risk_limit"])
        return values


class RunFailure(BaseModel):
    run: int
    n_new: Optional[int] = None
    error_type: str
    message: str


class ExperimentResult(BaseModel):
    rows: List[SummaryRow] = Field(default_factory=list)
    failures: List[RunFailure] = Field(default_factory=list)
    design_hashes: Dict[int, List[str]] = Field(
        default_factory=dict, description="SHA-256 of each new-task design, per run, in n_new order"
    )


class RiskCurvePoint(BaseModel):
    lam: float = Field(..., alias="lambda")
    n_new: int
    gamma: float
    risk: Optional[float] = None
    iterations: Optional[int] = None
    residual: Optional[float] = None
    error: Optional[str] = None

    model_config = {"populate_by_name": True}


class CSweepRow(BaseModel):
    c: float
    n_new: int
    lam: float = Field(..., alias="lambda")
    risk_estimated: float
    risk_estimated_exact: Optional[float] = None
    run_count: int

    model_config = {"populate_by_name": True}
