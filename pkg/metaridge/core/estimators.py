"""
Generalized ridge regression and hyper-covariance estimators.

The method-of-moments objective is quadratic in Ω̃, so it is evaluated from
per-task sufficient statistics (``MomentStatistics``) instead of the n×n
residuals. All Ω̃ fits share one descent engine: a gradient step mapped back
to the SPD cone through the second-order retraction, an optional
off-diagonal soft-threshold, and Armijo backtracking on the true objective.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from config.settings import settings
from ..exceptions import (
    DimensionMismatchError,
    NonPositiveLambdaError,
    NotSpdError,
    SingularError,
    StepFailureError,
)
from ..models.domain import CorrelationFit, FitOptions, FitReport, MetaDataset, RidgeFit, Task
from .spd import (
    min_eigenvalue,
    project_eig_floor,
    random_symmetric,
    retract_second_order,
    spd_inv_sqrt,
    symmetrize,
    validate_spd,
)

logger = logging.getLogger(__name__)

ARMIJO_FRACTION = 1e-4
MAX_TRIAL_STEP = 1e12


# Generalized ridge

def generalized_ridge(X, y, lam: float, A, weight_label: str = "A") -> RidgeFit:
    """Solve (XᵀX + nλA⁻¹)β = Xᵀy by Cholesky.

    Equivalent to minimizing (1/n)‖y − Xβ‖² + λβᵀA⁻¹β.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"design {X.shape} and response {y.shape} are incompatible")
    if lam < 0:
        raise NonPositiveLambdaError(f"ridge parameter must be non-negative, got {lam}")
    n, p = X.shape
    A = validate_spd(A, "weight")
    if A.shape[0] != p:
        raise DimensionMismatchError(f"weight is {A.shape[0]}×{A.shape[0]} but p = {p}")

    system = X.T @ X
    if lam > 0:
        system = system + n * lam * linalg.cho_solve(linalg.cho_factor(A), np.eye(p))
    try:
        factor = linalg.cho_factor(symmetrize(system))
    except linalg.LinAlgError as exc:
        raise SingularError("ridge system is singular; λ = 0 needs a full column rank design") from exc
    rhs = X.T @ y
    beta = linalg.cho_solve(factor, rhs)
    if not np.all(np.isfinite(beta)):
        raise SingularError("ridge solution is not finite")
    return RidgeFit(beta=beta, lam=float(lam), weight_label=weight_label)


# Method-of-moments sufficient statistics

@dataclass
class MomentStatistics:
    """Sufficient statistics of f(Ω̃) = (1/L)Σ‖Y_ℓ − XΩ̃Xᵀ/p − σ²I‖²_F.

    With A_ℓ = XᵀX and B_ℓ = Xᵀ(Y_ℓ − σ²I)X the objective is
    (1/L)[Σc_ℓ − (2/p)⟨Ω̃, ΣB_ℓ⟩ + (1/p²)⟨Ω̃, ΣA_ℓΩ̃A_ℓ⟩].
    """
    grams: np.ndarray
    target_sum: np.ndarray
    constant_sum: float
    p: int
    L: int
    sigma2: float
    tensor: Optional[np.ndarray] = None

    @classmethod
    def from_dataset(
        cls, data: MetaDataset, sigma2: Optional[float] = None, with_tensor: Optional[bool] = None
    ) -> "MomentStatistics":
        sigma2 = data.sigma2 if sigma2 is None else sigma2
        p, L = data.p, data.L
        grams = np.empty((L, p, p))
        target = np.zeros((p, p))
        constant = 0.0
        for i, task in enumerate(data.tasks):
            A = task.X.T @ task.X
            z = task.X.T @ task.y
            yy = float(task.y @ task.y)
            grams[i] = A
            target += np.outer(z, z) - sigma2 * A
            constant += yy ** 2 - 2 * sigma2 * yy + task.n * sigma2 ** 2
        return cls._build(grams, target, constant, p, L, sigma2, with_tensor)

    @classmethod
    def from_moments(
        cls, designs: Sequence[np.ndarray], moments: Sequence[np.ndarray], sigma2: float,
        with_tensor: Optional[bool] = None,
    ) -> "MomentStatistics":
        """Statistics from explicit n×n second-moment targets Y_ℓ in place of y yᵀ."""
        if len(designs) != len(moments) or not designs:
            raise DimensionMismatchError("need one moment matrix per design")
        p = np.shape(designs[0])[1]
        L = len(designs)
        grams = np.empty((L, p, p))
        target = np.zeros((p, p))
        constant = 0.0
        for i, (X, Y) in enumerate(zip(designs, moments)):
            X = np.asarray(X, dtype=float)
            Y = np.asarray(Y, dtype=float)
            if X.shape[1] != p or Y.shape != (X.shape[0], X.shape[0]):
                raise DimensionMismatchError(f"task {i}: design {X.shape} and moment {Y.shape} disagree")
            residual = Y - sigma2 * np.eye(X.shape[0])
            grams[i] = X.T @ X
            target += X.T @ residual @ X
            constant += float(np.sum(residual ** 2))
        return cls._build(grams, target, constant, p, L, sigma2, with_tensor)

    @classmethod
    def _build(cls, grams, target, constant, p, L, sigma2, with_tensor) -> "MomentStatistics":
        if with_tensor is None:
            with_tensor = p <= settings.GRAM_TENSOR_MAX_DIM
        tensor = None
        if with_tensor:
            flat = grams.reshape(L, p * p)
            tensor = (flat.T @ flat).reshape(p, p, p, p)
        return cls(grams, symmetrize(target), float(constant), p, L, float(sigma2), tensor)

    def congruence(self, root: np.ndarray) -> "MomentStatistics":
        """Statistics of the designs X·root (root symmetric), e.g. X Ŵ^{1/2}."""
        grams = root @ self.grams @ root
        target = root @ self.target_sum @ root
        return self._build(grams, target, self.constant_sum, self.p, self.L, self.sigma2,
                           self.tensor is not None)

    def apply(self, delta: np.ndarray) -> np.ndarray:
        """S(Δ) = Σ_ℓ A_ℓ Δ A_ℓ."""
        if self.tensor is not None:
            return symmetrize(np.einsum("ijkl,jk->il", self.tensor, delta))
        return symmetrize(np.sum(self.grams @ delta @ self.grams, axis=0))

    def check(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (self.p, self.p):
            raise DimensionMismatchError(f"Omega has shape {omega.shape}, expected ({self.p}, {self.p})")
        return omega

    def value(self, omega: np.ndarray) -> float:
        omega = self.check(omega)
        p = self.p
        quad = float(np.sum(omega * self.apply(omega)))
        f = self.constant_sum - 2.0 / p * float(np.sum(omega * self.target_sum)) + quad / p ** 2
        return max(f, 0.0) / self.L

    def gradient(self, omega: np.ndarray) -> np.ndarray:
        omega = self.check(omega)
        p = self.p
        return -2.0 / (p * self.L) * (self.target_sum - self.apply(omega) / p)

    def change(self, omega: np.ndarray, candidate: np.ndarray, grad: np.ndarray) -> float:
        """Exact f(candidate) − f(omega), free of cancellation."""
        delta = candidate - omega
        return float(np.sum(grad * delta)) + float(np.sum(delta * self.apply(delta))) / (self.p ** 2 * self.L)

    def smooth_bound(self) -> float:
        return estimate_smooth_bound(self)


def estimate_smooth_bound(stats: MomentStatistics, iterations: int = 50, margin: float = 1.1) -> float:
    """Power-iteration estimate of the operator norm of the Hessian (2/(p²L))S, times ``margin``."""
    p = stats.p
    xi = np.eye(p) / np.sqrt(p)
    scale = 2.0 / (p ** 2 * stats.L)
    estimate = 0.0
    for _ in range(iterations):
        image = scale * stats.apply(xi)
        norm = np.linalg.norm(image)
        if norm == 0.0:
            break
        estimate = float(np.sum(xi * image))
        xi = image / norm
    return margin * max(estimate, np.finfo(float).tiny)


def _residual_terms(omega: np.ndarray, data: MetaDataset, sigma2: float) -> Iterable[Tuple[Task, np.ndarray]]:
    p = data.p
    for task in data.tasks:
        R = np.outer(task.y, task.y) - task.X @ omega @ task.X.T / p - sigma2 * np.eye(task.n)
        yield task, R


def _check_omega(omega, p: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (p, p):
        raise DimensionMismatchError(f"Omega has shape {omega.shape}, expected ({p}, {p})")
    return omega


def mom_objective(omega, data: Union[MetaDataset, MomentStatistics]) -> float:
    """f(Ω̃) = (1/L)Σ‖y yᵀ − XΩ̃Xᵀ/p − σ²I‖²_F."""
    if isinstance(data, MomentStatistics):
        return data.value(omega)
    omega = _check_omega(omega, data.p)
    total = sum(float(np.sum(R ** 2)) for _, R in _residual_terms(omega, data, data.sigma2))
    return total / data.L


def mom_gradient(omega, data: Union[MetaDataset, MomentStatistics]) -> np.ndarray:
    """Gradient −(2/(pL))Σ XᵀRX of the moment objective."""
    if isinstance(data, MomentStatistics):
        return data.gradient(omega)
    omega = _check_omega(omega, data.p)
    grad = np.zeros_like(omega)
    for task, R in _residual_terms(omega, data, data.sigma2):
        grad += task.X.T @ R @ task.X
    return symmetrize(-2.0 / (data.p * data.L) * grad)


def offdiag_l1(M: np.ndarray) -> float:
    """Σ_{i≠j}|M_ij| over ordered pairs."""
    M = np.asarray(M, dtype=float)
    return float(np.sum(np.abs(M)) - np.sum(np.abs(np.diag(M))))


def l1_objective(omega, data: Union[MetaDataset, MomentStatistics], lambda_tilde: float) -> float:
    if lambda_tilde < 0:
        raise ValueError(f"lambda_tilde must be non-negative, got {lambda_tilde}")
    return mom_objective(omega, data) + lambda_tilde * offdiag_l1(omega)


def soft_threshold(M, tau: float) -> np.ndarray:
    """Entrywise prox of τ|·|; entries with |m| ≤ τ map to 0."""
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def _soft_threshold_offdiag(M: np.ndarray, tau: float) -> np.ndarray:
    out = soft_threshold(M, tau)
    np.fill_diagonal(out, np.diag(M))
    return out


# Gaussian likelihood

class _MleObjective:
    """Negative log-likelihood of the Gaussian random-effects model."""

    def __init__(self, data: MetaDataset, sigma2: float):
        if sigma2 < 0:
            raise ValueError(f"sigma2 must be non-negative, got {sigma2}")
        self.data = data
        self.sigma2 = sigma2
        self.p = data.p

    def _factor(self, task: Task, omega: np.ndarray):
        S = self.sigma2 * np.eye(task.n) + task.X @ omega @ task.X.T / self.p
        try:
            return linalg.cho_factor(symmetrize(S), lower=True)
        except linalg.LinAlgError as exc:
            raise NotSpdError("marginal covariance σ²I + XΩXᵀ/p is not positive definite") from exc

    def value(self, omega: np.ndarray) -> float:
        omega = _check_omega(omega, self.p)
        total = 0.0
        for task in self.data.tasks:
            factor = self._factor(task, omega)
            logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
            total += logdet + float(task.y @ linalg.cho_solve(factor, task.y))
        return 0.5 * total

    def gradient(self, omega: np.ndarray) -> np.ndarray:
        omega = _check_omega(omega, self.p)
        grad = np.zeros_like(omega)
        for task in self.data.tasks:
            factor = self._factor(task, omega)
            S_inv_X = linalg.cho_solve(factor, task.X)
            u = task.X.T @ linalg.cho_solve(factor, task.y)
            grad += task.X.T @ S_inv_X - np.outer(u, u)
        return symmetrize(grad / (2.0 * self.p))

    def change(self, omega: np.ndarray, candidate: np.ndarray, grad: np.ndarray) -> float:
        return self.value(candidate) - self.value(omega)

    def smooth_bound(self) -> Optional[float]:
        return None


def mle_negloglik(omega, sigma2: float, data: MetaDataset) -> float:
    """½Σ_ℓ[log det S_ℓ + yᵀS_ℓ⁻¹y] with S_ℓ = σ²I + XΩXᵀ/p (constant dropped)."""
    return _MleObjective(data, sigma2).value(omega)


def mle_gradient(omega, sigma2: float, data: MetaDataset) -> np.ndarray:
    """(1/(2p))Σ_ℓ Xᵀ(S⁻¹ − S⁻¹yyᵀS⁻¹)X."""
    return _MleObjective(data, sigma2).gradient(omega)


# Descent engine

def _initial_point(opts: FitOptions, p: int, unit_diag: bool) -> np.ndarray:
    if opts.init is None:
        return np.eye(p)
    init = validate_spd(_check_omega(opts.init, p), "initial point")
    if unit_diag:
        init = _unit_diagonal(init, opts.eig_floor)
    return init


def _unit_diagonal(M: np.ndarray, eig_floor: float) -> np.ndarray:
    M = symmetrize(M).copy()
    np.fill_diagonal(M, 1.0)
    if min_eigenvalue(M) < eig_floor:
        M = project_eig_floor(M, eig_floor)
        d = 1.0 / np.sqrt(np.diag(M))
        M = symmetrize(M * np.outer(d, d))
    return M


def _trial_point(
    omega: np.ndarray, grad: np.ndarray, step: float, penalty: float, unit_diag: bool, eig_floor: float
) -> Tuple[np.ndarray, np.ndarray]:
    target = omega - step * grad
    if penalty > 0:
        target = _soft_threshold_offdiag(target, step * penalty)
    eta = symmetrize(target) - omega
    candidate = retract_second_order(omega, eta)
    if unit_diag:
        candidate = _unit_diagonal(candidate, eig_floor)
    elif min_eigenvalue(candidate) < eig_floor:
        candidate = project_eig_floor(candidate, eig_floor)
    return candidate, eta


def _descend(objective, opts: FitOptions, penalty: float = 0.0, unit_diag: bool = False,
             label: str = "rgd") -> FitReport:
    """Shared (proximal) Riemannian gradient descent with Armijo backtracking."""
    p = objective.p
    started = time.perf_counter()
    omega = _initial_point(opts, p, unit_diag)

    bound = opts.smooth_bound if opts.smooth_bound is not None else objective.smooth_bound()
    if opts.step is not None:
        first_step = opts.step
    elif bound is not None:
        first_step = 1.0 / bound
    else:
        first_step = 1.0

    h = objective.value(omega) + penalty * offdiag_l1(omega)
    objective_trace = [h]
    step_trace = []
    grad = objective.gradient(omega)
    if unit_diag:
        np.fill_diagonal(grad, 0.0)
    grad_norm = float(np.linalg.norm(grad))
    step = first_step
    converged = False
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        if penalty == 0 and grad_norm < opts.grad_tol:
            converged = True
            iterations -= 1
            break

        trial = first_step if iterations == 1 else min(2.0 * step, MAX_TRIAL_STEP)
        accepted = None
        best_change = np.inf
        for _ in range(opts.max_halvings + 1):
            candidate, eta = _trial_point(omega, grad, trial, penalty, unit_diag, opts.eig_floor)
            change = objective.change(omega, candidate, grad)
            if penalty > 0:
                change += penalty * (offdiag_l1(candidate) - offdiag_l1(omega))
            best_change = min(best_change, change)
            if change <= -ARMIJO_FRACTION * float(np.sum(eta ** 2)) / trial:
                accepted = (candidate, eta, change)
                break
            trial /= 2.0

        if accepted is None:
            if abs(best_change) <= 1e-12 * max(1.0, abs(h)):
                logger.debug("Descent stalled at rounding level", extra={"estimator": label, "iteration": iterations})
                converged = penalty > 0 or grad_norm < 1e3 * opts.grad_tol
                break
            raise StepFailureError(
                f"{label}: no acceptable step after {opts.max_halvings} halvings at iteration {iterations}"
            )

        omega, eta, change = accepted
        step = trial
        h += change
        objective_trace.append(h)
        step_trace.append(step)
        grad = objective.gradient(omega)
        if unit_diag:
            np.fill_diagonal(grad, 0.0)
        grad_norm = float(np.linalg.norm(grad))

        if penalty > 0 and float(np.linalg.norm(eta)) / step < opts.grad_tol:
            converged = True
            break
        if opts.tol > 0 and -change < opts.tol:
            converged = True
            break

    logger.debug(
        "Descent finished",
        extra={
            "estimator": label,
            "iterations": iterations,
            "grad_norm": grad_norm,
            "objective": h,
            "converged": converged,
            "elapsed": time.perf_counter() - started,
        },
    )
    return FitReport(
        omega_hat=omega,
        iterations=iterations,
        final_grad_norm=grad_norm,
        objective_trace=objective_trace,
        converged=converged,
        step_trace=step_trace,
    )


def _as_statistics(data: Union[MetaDataset, MomentStatistics]) -> MomentStatistics:
    return data if isinstance(data, MomentStatistics) else MomentStatistics.from_dataset(data)


def fit_mom_rgd(data: Union[MetaDataset, MomentStatistics], opts: Optional[FitOptions] = None) -> FitReport:
    """Method-of-moments Ω̂ by Riemannian gradient descent."""
    return _descend(_as_statistics(data), opts or FitOptions(), label="mom_rgd")


def fit_l1_prox_rgd(data: Union[MetaDataset, MomentStatistics], opts: FitOptions) -> FitReport:
    """L1-penalized moment estimator by proximal Riemannian gradient descent.

    The off-diagonal soft-threshold is applied at step·λ̃, i.e. λ̃/L̃ at the
    default step 1/L̃.
    """
    return _descend(_as_statistics(data), opts, penalty=opts.lambda_tilde, label="mom_l1")


def fit_mle_rgd(data: MetaDataset, sigma2: float, opts: Optional[FitOptions] = None) -> FitReport:
    """Riemannian descent on the negative log-likelihood.

    The likelihood is not geodesically convex, so this finds a stationary
    point that depends on the initialization.
    """
    return _descend(_MleObjective(data, sigma2), opts or FitOptions(), label="mle")


# σ² estimation

def dicker_sigma2(X, y, sigma, clamp: bool = False) -> float:
    """Dicker's moment estimator of σ² for a design with known row covariance Σ.

    Small samples may give a negative estimate; it is returned as-is unless
    ``clamp`` is set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, p = X.shape
    if y.shape[0] != n:
        raise DimensionMismatchError(f"response length {y.shape[0]} does not match n = {n}")
    sigma = validate_spd(sigma, "Sigma", check_condition=False)
    if sigma.shape[0] != p:
        raise DimensionMismatchError(f"Sigma is {sigma.shape[0]}×{sigma.shape[0]} but p = {p}")
    projected = spd_inv_sqrt(sigma) @ (X.T @ y)
    estimate = ((p + n + 1) / (n * (n + 1))) * float(y @ y) - float(projected @ projected) / (n * (n + 1))
    if estimate < 0:
        logger.warning("Negative noise-variance estimate", extra={"sigma2_hat": estimate, "clamped": clamp})
        if clamp:
            return 0.0
    return estimate


def estimate_sigma2_holdout(data: MetaDataset, sigma, index: int = 0) -> Tuple[float, MetaDataset]:
    """Estimate σ² on one held-out task; return the estimate and the remaining tasks carrying it."""
    if data.L < 2:
        raise DimensionMismatchError("holding out a task needs at least two tasks")
    held = data.tasks[index]
    estimate = dicker_sigma2(held.X, held.y, sigma, clamp=True)
    rest = data.tasks[:index] + data.tasks[index + 1:]
    return estimate, MetaDataset(rest, estimate, data.omega_true)


# Correlation-based estimators (noiseless full-rank regime)

def left_inverse_apply(X, y) -> np.ndarray:
    """z = (XᵀX)⁻¹Xᵀy for a full column rank design."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] < X.shape[1]:
        raise SingularError(f"design with n = {X.shape[0]} < p = {X.shape[1]} has no left inverse")
    z, _, rank, _ = linalg.lstsq(X, y)
    if rank < X.shape[1]:
        raise SingularError(f"design has rank {rank} < p = {X.shape[1]}")
    return z


def diag_weight(tasks_fullrank: Sequence[Task]) -> np.ndarray:
    """Ŵ = diag((p/L₀)Σ z zᵀ) from full column rank tasks."""
    if not tasks_fullrank:
        raise DimensionMismatchError("diagonal weight needs at least one full-rank task")
    p = tasks_fullrank[0].p
    squares = np.zeros(p)
    for task in tasks_fullrank:
        squares += left_inverse_apply(task.X, task.y) ** 2
    w = p * squares / len(tasks_fullrank)
    if np.any(w <= 0):
        raise NotSpdError("estimated diagonal weight has non-positive entries")
    return np.diag(w)


def fit_correlation_fullrank(tasks: Sequence[Task], lambda_tilde: float,
                             eig_floor: Optional[float] = None) -> CorrelationFit:
    """Closed-form correlation estimator when every task is full rank and noiseless.

    Θ̂_ij = soft(p·M_ij, λ̃p²/2) off the diagonal, with M the average of
    Ŵ^{-1/2} z zᵀ Ŵ^{-1/2}; the diagonal is 1.
    """
    if lambda_tilde < 0:
        raise ValueError(f"lambda_tilde must be non-negative, got {lambda_tilde}")
    eig_floor = settings.EIG_FLOOR if eig_floor is None else eig_floor
    weight = diag_weight(tasks)
    p = weight.shape[0]
    scale = 1.0 / np.sqrt(np.diag(weight))
    moment = np.zeros((p, p))
    for task in tasks:
        u = scale * left_inverse_apply(task.X, task.y)
        moment += np.outer(u, u)
    moment /= len(tasks)
    theta = soft_threshold(p * moment, lambda_tilde * p ** 2 / 2.0)
    theta = _unit_diagonal(theta, eig_floor)
    root = np.sqrt(np.diag(weight))
    omega_hat = symmetrize(theta * np.outer(root, root))
    return CorrelationFit(omega_hat=omega_hat, theta_hat=theta, weight=weight)


def fit_correlation_split(data: MetaDataset, full_rank_count: int, lambda_tilde: float,
                          opts: Optional[FitOptions] = None) -> CorrelationFit:
    """Ŵ from the first L₀ full-rank tasks, Θ̂ by proximal descent on the rest."""
    if full_rank_count < 1:
        raise ValueError(f"full_rank_count must be positive, got {full_rank_count}")
    if full_rank_count >= data.L:
        raise DimensionMismatchError(
            f"full_rank_count = {full_rank_count} leaves no tasks for the correlation fit (L = {data.L})"
        )
    weight = diag_weight(data.tasks[:full_rank_count])
    root = np.diag(np.sqrt(np.diag(weight)))
    stats = MomentStatistics.from_dataset(data.subset(full_rank_count)).congruence(root)

    opts = opts or FitOptions()
    fit_opts = FitOptions(
        init=None,
        step=opts.step,
        max_iter=opts.max_iter,
        grad_tol=opts.grad_tol,
        tol=opts.tol,
        lambda_tilde=lambda_tilde,
        smooth_bound=opts.smooth_bound,
        eig_floor=opts.eig_floor,
        max_halvings=opts.max_halvings,
    )
    report = _descend(stats, fit_opts, penalty=lambda_tilde, unit_diag=True, label="correlation_split")
    theta = report.omega_hat
    omega_hat = symmetrize(root @ theta @ root)
    return CorrelationFit(omega_hat=omega_hat, theta_hat=theta, weight=weight, report=report)


# Finite-difference oracle

def gradient_check(
    value_fn: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    omega: np.ndarray,
    rng: np.random.Generator,
    directions: int = 20,
    t: float = 1e-5,
) -> np.ndarray:
    """Relative errors of ⟨grad, Ξ⟩ against central differences along retraction curves.

    Each error is |fd − ⟨g, Ξ⟩| / (‖g‖_F‖Ξ‖_F) for a random unit symmetric Ξ.
    """
    omega = validate_spd(omega, "base point")
    grad = grad_fn(omega)
    grad_norm = float(np.linalg.norm(grad))
    errors = np.empty(directions)
    for k in range(directions):
        xi = random_symmetric(omega.shape[0], rng)
        forward = value_fn(retract_second_order(omega, t * xi))
        backward = value_fn(retract_second_order(omega, -t * xi))
        fd = (forward - backward) / (2 * t)
        analytic = float(np.sum(grad * xi))
        errors[k] = abs(fd - analytic) / max(grad_norm * float(np.linalg.norm(xi)), np.finfo(float).tiny)
    return errors
