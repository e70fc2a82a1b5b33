"""
Experiment configuration models.

Tagged variants are pydantic discriminated unions keyed on ``kind`` so that a
flat ``omega.kind = tridiagonal`` line in a config file selects the variant.
"""

from fractions import Fraction
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator


# Hyper-covariance Ω

class TridiagonalOmega(BaseModel):
    kind: Literal["tridiagonal"] = "tridiagonal"
    a: float = Field(16.0, description="Diagonal value")
    b: float = Field(5.0, description="First off-diagonal value")

    @model_validator(mode="after")
    def _positive_definite(self):
        if self.a <= 2 * abs(self.b):
            raise ValueError(f"tridiagonal Omega needs a > 2|b| (got a={self.a}, b={self.b})")
        return self


class IdentityOmega(BaseModel):
    kind: Literal["identity"] = "identity"


class PowerLawOmega(BaseModel):
    kind: Literal["power_law"] = "power_law"
    exponent: float = Field(..., ge=0.0, description="Eigenvalues decay as j^(-exponent)")
    basis_seed: int = Field(0, description="Seed of the random orthogonal basis")


class ExplicitOmega(BaseModel):
    kind: Literal["explicit"] = "explicit"
    matrix: List[List[float]] = Field(..., description="Dense p×p SPD matrix")


OmegaSpec = Annotated[
    Union[TridiagonalOmega, IdentityOmega, PowerLawOmega, ExplicitOmega],
    Field(discriminator="kind"),
]


# Design covariance Σ

class IdentitySigma(BaseModel):
    kind: Literal["identity"] = "identity"


class ScaledInverseOmegaSigma(BaseModel):
    kind: Literal["scaled_inverse_omega"] = "scaled_inverse_omega"
    rho: float = Field(1.0, gt=0.0, description="Σ = ρ Ω⁻¹")


class PowerOfOmegaSigma(BaseModel):
    kind: Literal["power_of_omega"] = "power_of_omega"
    kappa: float = Field(..., description="Σ = Ω^(-κ)")


class BlockDiagSigma(BaseModel):
    kind: Literal["block_diag"] = "block_diag"
    c: float = Field(..., gt=0.0, description="First diagonal entry")
    d: float = Field(..., gt=0.0, description="Remaining diagonal entries")


class PowerLawSigma(BaseModel):
    kind: Literal["power_law"] = "power_law"
    exponent: float = Field(..., ge=0.0)
    basis_seed: int = Field(0)


class ExplicitSigma(BaseModel):
    kind: Literal["explicit"] = "explicit"
    matrix: List[List[float]]


SigmaSpec = Annotated[
    Union[
        IdentitySigma,
        ScaledInverseOmegaSigma,
        PowerOfOmegaSigma,
        BlockDiagSigma,
        PowerLawSigma,
        ExplicitSigma,
    ],
    Field(discriminator="kind"),
]


# Ridge parameter rule

class FixedLambda(BaseModel):
    kind: Literal["fixed"] = "fixed"
    value: float = Field(..., gt=0.0)

    def resolve(self, p: int, n_new: int, sigma2: float) -> float:
        return self.value


class ScaledOptimalLambda(BaseModel):
    kind: Literal["scaled_optimal"] = "scaled_optimal"
    c: float = Field(1.0, gt=0.0, description="λ = c·pσ²/n_new")

    def resolve(self, p: int, n_new: int, sigma2: float) -> float:
        return self.c * p * sigma2 / n_new


LambdaRule = Annotated[Union[FixedLambda, ScaledOptimalLambda], Field(discriminator="kind")]


# Ω estimators

class OracleOmegaEstimator(BaseModel):
    kind: Literal["oracle_omega"] = "oracle_omega"


class IdentityEstimator(BaseModel):
    kind: Literal["identity"] = "identity"


class MomRgdEstimator(BaseModel):
    kind: Literal["mom_rgd"] = "mom_rgd"


class MomL1Estimator(BaseModel):
    kind: Literal["mom_l1"] = "mom_l1"


class MleEstimator(BaseModel):
    kind: Literal["mle"] = "mle"


class CorrelationSplitEstimator(BaseModel):
    kind: Literal["correlation_split"] = "correlation_split"
    full_rank_count: int = Field(..., ge=1, description="Number L₀ of leading full-rank tasks")


class CorrelationFullRankEstimator(BaseModel):
    kind: Literal["correlation_full_rank"] = "correlation_full_rank"


EstimatorSpec = Annotated[
    Union[
        OracleOmegaEstimator,
        IdentityEstimator,
        MomRgdEstimator,
        MomL1Estimator,
        MleEstimator,
        CorrelationSplitEstimator,
        CorrelationFullRankEstimator,
    ],
    Field(discriminator="kind"),
]


# Descent initialization

class IdentityInit(BaseModel):
    kind: Literal["identity"] = "identity"


class RandomSpdInit(BaseModel):
    kind: Literal["random_spd"] = "random_spd"
    seed: int = 0


class MomOutputInit(BaseModel):
    kind: Literal["mom_output"] = "mom_output"


InitSpec = Annotated[Union[IdentityInit, RandomSpdInit, MomOutputInit], Field(discriminator="kind")]


ScheduleItem = Union[int, Tuple[int, int]]


class ExperimentConfig(BaseModel):
    """Full description of one simulation study."""

    name: str = Field("experiment", description="Label recorded in logs")
    p: int = Field(..., ge=1, description="Dimension")
    n_schedule: List[ScheduleItem] = Field(..., description="Per-task sizes, or (value, count) pairs")
    L: int = Field(..., ge=1, description="Number of training tasks")
    n_new: List[int] = Field(..., description="Sample sizes of the new task; one summary row each")
    runs: int = Field(50, ge=1)
    omega: OmegaSpec = Field(default_factory=TridiagonalOmega)
    sigma_train: SigmaSpec = Field(default_factory=IdentitySigma)
    sigma_test: SigmaSpec = Field(default_factory=IdentitySigma)
    sigma2: float = Field(1.0, ge=0.0)
    sigma2_mode: Literal["known", "dicker"] = "known"
    lambda_rule: LambdaRule
    estimator: EstimatorSpec = Field(default_factory=MomRgdEstimator)
    init: InitSpec = Field(default_factory=IdentityInit)
    lambda_tilde: float = Field(0.0, ge=0.0)
    fit_max_iter: int = Field(2000, ge=1)
    fit_grad_tol: float = Field(1e-8, gt=0.0)
    risk_mode: Literal["empirical", "exact", "both"] = "empirical"
    limit_mode: Literal["surrogate", "analytic"] = "surrogate"
    surrogate_dims: Optional[Tuple[int, int]] = None
    surrogate_min_dim: Optional[int] = Field(None, ge=1)
    m_test: int = Field(200, ge=1)
    entry_law: Literal["gaussian", "rademacher"] = "gaussian"
    seed: int = 0

    @field_validator("n_new", mode="before")
    @classmethod
    def _listify_n_new(cls, value):
        if isinstance(value, int):
            return [value]
        return value

    @field_validator("n_new")
    @classmethod
    def _positive_n_new(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("n_new must hold at least one positive integer")
        return value

    @field_validator("n_schedule", mode="before")
    @classmethod
    def _parse_schedule(cls, value):
        if isinstance(value, (int, str)):
            value = [value]
        items = []
        for item in value:
            if isinstance(item, str):
                if "*" in item:
                    size, count = item.split("*", 1)
                    items.append((int(size), int(count)))
                else:
                    items.append(int(item))
            elif isinstance(item, (list, tuple)):
                items.append(tuple(item))
            else:
                items.append(item)
        return items

    @model_validator(mode="after")
    def _check_consistency(self):
        sizes = self.task_sizes
        if len(sizes) == 1 and self.L > 1:
            sizes = sizes * self.L
            self.n_schedule = [(sizes[0], self.L)]
        if len(sizes) != self.L:
            raise ValueError(f"n_schedule describes {len(sizes)} tasks but L = {self.L}")
        if any(n < 1 for n in sizes):
            raise ValueError("task sizes must be positive")
        if self.surrogate_dims is not None:
            if len(self.n_new) != 1:
                raise ValueError("surrogate_dims applies to a single n_new; use surrogate_min_dim otherwise")
            p_sur, n_sur = self.surrogate_dims
            if p_sur < 1 or n_sur < 1 or Fraction(p_sur, n_sur) != Fraction(self.p, self.n_new[0]):
                raise ValueError(
                    f"surrogate ratio {p_sur}/{n_sur} must equal p/n_new = {self.p}/{self.n_new[0]}"
                )
        if isinstance(self.estimator, CorrelationSplitEstimator) and self.estimator.full_rank_count >= self.L:
            raise ValueError("correlation_split needs full_rank_count < L")
        return self

    @property
    def task_sizes(self) -> List[int]:
        sizes: List[int] = []
        for item in self.n_schedule:
            if isinstance(item, tuple):
                size, count = item
                sizes.extend([int(size)] * int(count))
            else:
                sizes.append(int(item))
        return sizes

    def lambda_for(self, n_new: int) -> float:
        return self.lambda_rule.resolve(self.p, n_new, self.sigma2)


# Named presets. Desk-scale ones run in minutes; full-scale ones are for manual runs.
PRESETS: Dict[str, dict] = {
    "desk-consistency": {
        "name": "desk-consistency",
        "p": 32, "n_schedule": [(24, 3200)], "L": 3200, "n_new": [12, 24, 48], "runs": 10,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
        "estimator": {"kind": "mom_rgd"},
    },
    "desk-change-l": {
        "name": "desk-change-l",
        "p": 32, "n_schedule": [(24, 800)], "L": 800, "n_new": [24], "runs": 10,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    },
    "desk-risk-curve": {
        "name": "desk-risk-curve",
        "p": 64, "n_schedule": [(32, 1)], "L": 1, "n_new": [32], "runs": 1,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "sigma_test": {"kind": "scaled_inverse_omega", "rho": 1.0},
        "sigma2": 1.5,
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
        "estimator": {"kind": "oracle_omega"},
    },
    "full-change-l": {
        "name": "full-change-l",
        "p": 128, "n_schedule": [(100, 10000)], "L": 10000, "n_new": [100], "runs": 50,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    },
    "full-change-n-new": {
        "name": "full-change-n-new",
        "p": 128, "n_schedule": [(50, 10000)], "L": 10000, "n_new": [25, 50, 75, 100, 125, 150], "runs": 50,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    },
    "full-mixed-sizes": {
        "name": "full-mixed-sizes",
        "p": 128, "n_schedule": [(150, 200), (50, 9800)], "L": 10000,
        "n_new": [25, 50, 75, 100, 125, 150], "runs": 50,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    },
    "full-l1": {
        "name": "full-l1",
        "p": 128, "n_schedule": [(50, 1000)], "L": 1000, "n_new": [25, 50, 75, 100, 125, 150], "runs": 50,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
        "estimator": {"kind": "mom_l1"}, "lambda_tilde": 0.0004,
    },
    "full-power-law-omega": {
        "name": "full-power-law-omega",
        "p": 128, "n_schedule": [(50, 10000)], "L": 10000, "n_new": [25, 50, 75, 100, 125, 150], "runs": 50,
        "omega": {"kind": "power_law", "exponent": 0.25, "basis_seed": 0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    },
    "full-power-law-sigma": {
        "name": "full-power-law-sigma",
        "p": 128, "n_schedule": [(50, 10000)], "L": 10000, "n_new": [25, 50, 75, 100, 125, 150], "runs": 50,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "sigma_train": {"kind": "power_law", "exponent": 0.25, "basis_seed": 0},
        "sigma_test": {"kind": "power_law", "exponent": 0.25, "basis_seed": 0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    },
    "full-c-sweep": {
        "name": "full-c-sweep",
        "p": 128, "n_schedule": [(50, 1000)], "L": 1000, "n_new": [25, 50, 75, 100, 125, 150], "runs": 50,
        "omega": {"kind": "tridiagonal", "a": 16.0, "b": 5.0},
        "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
        "estimator": {"kind": "mom_l1"}, "lambda_tilde": 0.0004,
    },
}

C_SWEEP_GRID = [0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2]
