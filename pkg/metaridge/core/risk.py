"""
Finite-sample predictive risk of generalized ridge regression.

Every resolvent is taken on a λ-shifted symmetric matrix, so singular sample
covariances (n < p) are fine. ``plugin_risk_direct`` evaluates the same
quantities through (Σ̂ + λW⁻¹)⁻¹ and serves as a cross-check.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..exceptions import DimensionMismatchError, NonPositiveLambdaError
from ..models.domain import RiskBreakdown
from .spd import check_same_dim, spd_sqrt, symmetrize, validate_spd

logger = logging.getLogger(__name__)


def _check_inputs(lam: float, n_test: int, sigma2: float):
    if lam <= 0:
        raise NonPositiveLambdaError(f"ridge parameter must be positive, got {lam}")
    if n_test < 1:
        raise ValueError(f"n_test must be positive, got {n_test}")
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")


def _inverse_root_pair(W: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(W)
    return (V * np.sqrt(w)) @ V.T, (V / np.sqrt(w)) @ V.T


def oracle_risk_exact(omega, sigma_test, sigma_hat_test, sigma2: float, lam: float, n_test: int) -> RiskBreakdown:
    """Exact conditional risk of the fit weighted by the true Ω.

    With Λ = Ω^{1/2}ΣΩ^{1/2} and Λ̃ = Ω^{1/2}Σ̂Ω^{1/2}:
    bias (λ²/p)tr(Λ(Λ̃+λ)⁻²), correction −(λσ²/n)tr(Λ(Λ̃+λ)⁻²),
    variance (σ²/n)tr(Λ(Λ̃+λ)⁻¹).
    """
    _check_inputs(lam, n_test, sigma2)
    p = check_same_dim(omega, sigma_test, sigma_hat_test)
    omega = validate_spd(omega, "Omega")
    sigma_test = validate_spd(sigma_test, "Sigma", check_condition=False)
    sigma_hat_test = symmetrize(sigma_hat_test)

    root = spd_sqrt(omega)
    population = symmetrize(root @ sigma_test @ root)
    sample = symmetrize(root @ sigma_hat_test @ root)
    w, U = np.linalg.eigh(sample)
    diag_pop = np.einsum("ij,jk,ki->i", U.T, population, U)
    t1 = float(np.mean(diag_pop / (w + lam)))
    t2 = float(np.mean(diag_pop / (w + lam) ** 2))
    ratio = p / n_test
    return RiskBreakdown(
        noise=float(sigma2),
        bias=lam ** 2 * t2,
        variance_correction=-lam * sigma2 * ratio * t2,
        variance=sigma2 * ratio * t1,
    )


def plugin_risk_exact(coef_cov, weight, sigma_test, sigma_hat_test, sigma2: float, lam: float,
                      n_test: int) -> RiskBreakdown:
    """Exact conditional risk of the fit weighted by ``weight`` when β̄ ~ N(0, coef_cov/p).

    ``coef_cov`` differing from the training Ω gives the out-of-distribution risk.
    """
    _check_inputs(lam, n_test, sigma2)
    p = check_same_dim(coef_cov, weight, sigma_test, sigma_hat_test)
    coef_cov = validate_spd(coef_cov, "coefficient covariance", check_condition=False)
    weight = validate_spd(weight, "weight")
    sigma_test = validate_spd(sigma_test, "Sigma", check_condition=False)
    sigma_hat_test = symmetrize(sigma_hat_test)

    rw, rwi = _inverse_root_pair(weight)
    population = symmetrize(rw @ sigma_test @ rw)
    sample = symmetrize(rw @ sigma_hat_test @ rw)
    psi = symmetrize(rwi @ coef_cov @ rwi)
    w, U = np.linalg.eigh(sample)
    r = 1.0 / (w + lam)
    C = U.T @ population @ U
    P = U.T @ psi @ U
    c_diag = np.diag(C)
    return RiskBreakdown(
        noise=float(sigma2),
        bias=lam ** 2 / p * float(np.sum(C * P * np.outer(r, r))),
        variance_correction=-lam * sigma2 / n_test * float(np.sum(c_diag * r ** 2)),
        variance=sigma2 / n_test * float(np.sum(c_diag * r)),
    )


def plugin_risk_direct(coef_cov, weight, sigma_test, sigma_hat_test, sigma2: float, lam: float,
                       n_test: int) -> RiskBreakdown:
    """Same breakdown as ``plugin_risk_exact`` through B = (Σ̂ + λW⁻¹)⁻¹."""
    _check_inputs(lam, n_test, sigma2)
    p = check_same_dim(coef_cov, weight, sigma_test, sigma_hat_test)
    weight = validate_spd(weight, "weight")
    W_inv = np.linalg.inv(weight)
    B = np.linalg.inv(symmetrize(np.asarray(sigma_hat_test, dtype=float) + lam * W_inv))
    sigma_test = np.asarray(sigma_test, dtype=float)
    left = W_inv @ B
    bias = lam ** 2 / p * float(np.trace(left @ sigma_test @ left.T @ np.asarray(coef_cov, dtype=float)))
    return RiskBreakdown(
        noise=float(sigma2),
        bias=bias,
        variance_correction=-lam * sigma2 / n_test * float(np.trace(sigma_test @ B @ W_inv @ B)),
        variance=sigma2 / n_test * float(np.trace(sigma_test @ B)),
    )


def conditional_risk(beta_hat, beta_bar, sigma_test, sigma2: float) -> float:
    """σ² + (β̄ − β̂)ᵀΣ(β̄ − β̂)."""
    beta_hat = np.asarray(beta_hat, dtype=float).reshape(-1)
    beta_bar = np.asarray(beta_bar, dtype=float).reshape(-1)
    sigma_test = np.asarray(sigma_test, dtype=float)
    if beta_hat.shape != beta_bar.shape or sigma_test.shape != (beta_bar.size, beta_bar.size):
        raise DimensionMismatchError(
            f"shapes disagree: beta_hat {beta_hat.shape}, beta_bar {beta_bar.shape}, Sigma {sigma_test.shape}"
        )
    diff = beta_bar - beta_hat
    return float(sigma2 + diff @ sigma_test @ diff)


def empirical_risk(beta_hat, beta_bar, sigma_test, sigma2: float, m_test: int, rng: np.random.Generator,
                   sigma_root: Optional[np.ndarray] = None) -> float:
    """Monte-Carlo risk (1/m)Σ(xᵀβ̂ − y)² over fresh test draws x ~ N(0, Σ), y = xᵀβ̄ + ε."""
    if m_test < 1:
        raise ValueError(f"m_test must be positive, got {m_test}")
    beta_hat = np.asarray(beta_hat, dtype=float).reshape(-1)
    beta_bar = np.asarray(beta_bar, dtype=float).reshape(-1)
    if sigma_root is None:
        sigma_root = spd_sqrt(sigma_test)
    X = rng.standard_normal((m_test, beta_bar.size)) @ sigma_root
    y = X @ beta_bar + np.sqrt(sigma2) * rng.standard_normal(m_test)
    return float(np.mean((X @ beta_hat - y) ** 2))


def risk_gradient(Q, coef_cov, sigma_test, sigma_hat_test, sigma2: float, lam: float,
                  n_test: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of R(Q | X) in the weight Q: (affine-invariant Riemannian, Euclidean).

    Both vanish at Q = cΩ when λ = c·pσ²/n and coef_cov = Ω.
    """
    _check_inputs(lam, n_test, sigma2)
    p = check_same_dim(Q, coef_cov, sigma_test, sigma_hat_test)
    Q = validate_spd(Q, "weight")
    upsilon = np.asarray(coef_cov, dtype=float)
    sigma_test = np.asarray(sigma_test, dtype=float)
    sigma_hat = np.asarray(sigma_hat_test, dtype=float)

    P = np.linalg.inv(Q)
    B = np.linalg.inv(symmetrize(sigma_hat + lam * P))
    M = sigma_hat @ upsilon @ sigma_hat / p + sigma2 * sigma_hat / n_test
    K = M @ B @ sigma_test + sigma_test @ B @ M
    K -= (sigma_hat @ upsilon @ sigma_test + sigma_test @ upsilon @ sigma_hat) / p
    riemannian = lam * symmetrize(B @ K @ B)
    euclidean = lam * symmetrize(P @ B @ K @ B @ P)
    return riemannian, euclidean
