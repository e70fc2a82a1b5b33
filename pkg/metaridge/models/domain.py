"""
Numeric domain types shared by the core modules.

These are plain dataclasses over numpy arrays; the serializable experiment
records live in ``config.py`` and ``results.py``.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import DimensionMismatchError


@dataclass(frozen=True)
class Task:
    """One regression task: design X (n×p), response y (n) and optional true coefficients."""
    X: np.ndarray
    y: np.ndarray
    beta_true: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionMismatchError(f"design must be a non-empty n×p matrix, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise DimensionMismatchError(f"response length {y.shape[0]} does not match n = {X.shape[0]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.beta_true is not None:
            beta = np.asarray(self.beta_true, dtype=float).reshape(-1)
            if beta.shape[0] != X.shape[1]:
                raise DimensionMismatchError(f"beta_true length {beta.shape[0]} does not match p = {X.shape[1]}")
            object.__setattr__(self, "beta_true", beta)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class MetaDataset:
    """Ordered training tasks sharing dimension p, noise variance σ² and (optionally) the true Ω."""
    tasks: Tuple[Task, ...]
    sigma2: float
    omega_true: Optional[np.ndarray] = None

    def __post_init__(self):
        tasks = tuple(self.tasks)
        if not tasks:
            raise DimensionMismatchError("a meta dataset needs at least one task")
        dims = {t.p for t in tasks}
        if len(dims) != 1:
            raise DimensionMismatchError(f"tasks disagree on p: {sorted(dims)}")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be non-negative, got {self.sigma2}")
        object.__setattr__(self, "tasks", tasks)

    @property
    def p(self) -> int:
        return self.tasks[0].p

    @property
    def L(self) -> int:
        return len(self.tasks)

    def subset(self, start: int, stop: Optional[int] = None) -> "MetaDataset":
        return MetaDataset(self.tasks[start:stop], self.sigma2, self.omega_true)

    def with_sigma2(self, sigma2: float) -> "MetaDataset":
        return MetaDataset(self.tasks, sigma2, self.omega_true)


@dataclass(frozen=True)
class RidgeFit:
    """Generalized ridge coefficients β for ridge parameter λ and a labelled weight A."""
    beta: np.ndarray
    lam: float
    weight_label: str


@dataclass
class FitOptions:
    """Knobs of the (proximal) Riemannian gradient descent.

    ``step=None`` starts the line search at 1/smooth_bound; ``smooth_bound=None``
    estimates the bound by power iteration where a quadratic model exists.
    """
    init: Optional[np.ndarray] = None
    step: Optional[float] = None
    max_iter: int = 2000
    grad_tol: float = 1e-8
    tol: float = 0.0
    lambda_tilde: float = 0.0
    smooth_bound: Optional[float] = None
    eig_floor: float = 1e-8
    max_halvings: int = 50

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.lambda_tilde < 0:
            raise ValueError(f"lambda_tilde must be non-negative, got {self.lambda_tilde}")
        if self.smooth_bound is not None and self.smooth_bound <= 0:
            raise ValueError(f"smooth_bound must be positive, got {self.smooth_bound}")
        if self.eig_floor < 0:
            raise ValueError(f"eig_floor must be non-negative, got {self.eig_floor}")


@dataclass
class FitReport:
    """Outcome of a descent run."""
    omega_hat: np.ndarray
    iterations: int
    final_grad_norm: float
    objective_trace: List[float] = field(default_factory=list)
    converged: bool = False
    step_trace: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class CorrelationFit:
    """Two-stage estimate Ω̂_w = Ŵ^{1/2} Θ̂ Ŵ^{1/2}."""
    omega_hat: np.ndarray
    theta_hat: np.ndarray
    weight: np.ndarray
    report: Optional[FitReport] = None


@dataclass(frozen=True)
class RiskBreakdown:
    """Predictive risk split into noise, bias and the two variance terms."""
    noise: float
    bias: float
    variance_correction: float
    variance: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "total", self.noise + self.bias + self.variance_correction + self.variance
        )

    def as_dict(self) -> dict:
        return {
            "noise": self.noise,
            "bias": self.bias,
            "variance_correction": self.variance_correction,
            "variance": self.variance,
            "total": self.total,
        }


@dataclass(frozen=True)
class StieltjesEval:
    """Stieltjes transforms at z = −λ and their derivatives, with solver diagnostics."""
    s: float
    s_prime: float
    v: float
    v_prime: float
    lam: float
    gamma: float
    iterations: int = 0
    residual: float = 0.0

