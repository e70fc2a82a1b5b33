"""
Limiting risk of generalized ridge regression in the proportional regime p/n → γ.

Stieltjes transforms are evaluated on the negative real axis only, at z = −λ.
``s`` is the transform of the p-dimensional spectrum of Λ̃ and ``v`` the
companion transform of the n-dimensional Gram spectrum.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from config.settings import settings
from ..exceptions import DegenerateDenominatorError, NoConvergenceError, NonPositiveLambdaError
from ..models.config import (
    BlockDiagSigma,
    ExperimentConfig,
    IdentityOmega,
    IdentitySigma,
    PowerOfOmegaSigma,
    ScaledInverseOmegaSigma,
    TridiagonalOmega,
)
from ..models.domain import StieltjesEval
from .random_effects import realize_omega, realize_sigma
from .spd import spd_sqrt, symmetrize

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-11


def _check_lambda(lam: float):
    if lam <= 0:
        raise NonPositiveLambdaError(f"λ must be positive, got {lam}")


# Spectral laws

class SpectralLaw:
    """Population spectral distribution H; ``expect`` integrates a vectorized function against it."""

    def expect(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        return self.expect(lambda t: t)


@dataclass(frozen=True)
class PointMass(SpectralLaw):
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError(f"point mass must sit at a positive value, got {self.value}")

    def expect(self, fn):
        return float(fn(np.asarray(self.value)))


@dataclass(frozen=True)
class EmpiricalEigs(SpectralLaw):
    eigs: Tuple[float, ...]

    def __post_init__(self):
        eigs = tuple(float(e) for e in self.eigs)
        if not eigs or min(eigs) <= 0:
            raise ValueError("empirical spectrum needs at least one eigenvalue, all positive")
        object.__setattr__(self, "eigs", eigs)

    def expect(self, fn):
        return float(np.mean(fn(np.asarray(self.eigs))))


@dataclass(frozen=True)
class ShiftedArcsine(SpectralLaw):
    """Arcsine law on [center − halfwidth, center + halfwidth].

    Integrated in θ with x = center + halfwidth·sin θ, which removes the
    inverse-square-root endpoint singularities.
    """
    center: float
    halfwidth: float

    def __post_init__(self):
        if not 0 <= self.halfwidth < self.center:
            raise ValueError(
                f"support must stay away from 0: need 0 ≤ halfwidth < center, got {self.halfwidth}, {self.center}"
            )

    def _point(self, theta):
        return self.center + self.halfwidth * np.sin(theta)

    def expect(self, fn):
        if self.halfwidth == 0:
            return float(fn(np.asarray(self.center)))
        value, _ = integrate.quad(
            lambda theta: float(fn(self._point(theta))), -np.pi / 2, np.pi / 2,
            epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
        )
        return value / np.pi


@dataclass(frozen=True)
class PowerTransformedArcsine(ShiftedArcsine):
    """Law of x^(1−κ) for x arcsine-distributed; the spectrum of Ω^{1−κ} for tridiagonal Ω."""
    kappa: float = 0.0

    def _point(self, theta):
        return (self.center + self.halfwidth * np.sin(theta)) ** (1.0 - self.kappa)

    def expect(self, fn):
        if self.halfwidth == 0:
            return float(fn(np.asarray(self.center ** (1.0 - self.kappa))))
        return super().expect(fn)


def spectral_law_for(config: ExperimentConfig, p: Optional[int] = None) -> SpectralLaw:
    """Limiting spectral law of Λ = Ω^{1/2}Σ_testΩ^{1/2} for a configuration.

    Families with a known limit map to it; anything else falls back to the
    eigenvalues of Λ at dimension ``p``.
    """
    omega, sigma = config.omega, config.sigma_test
    if isinstance(sigma, ScaledInverseOmegaSigma):
        return PointMass(sigma.rho)
    if isinstance(omega, IdentityOmega) and isinstance(sigma, IdentitySigma):
        return PointMass(1.0)
    if isinstance(omega, TridiagonalOmega):
        width = 2 * abs(omega.b)
        if isinstance(sigma, IdentitySigma):
            return ShiftedArcsine(omega.a, width)
        if isinstance(sigma, PowerOfOmegaSigma):
            return PowerTransformedArcsine(omega.a, width, sigma.kappa)
        if isinstance(sigma, BlockDiagSigma):
            return ShiftedArcsine(omega.a * sigma.d, width * sigma.d)
    p = p or config.p
    omega_m = realize_omega(omega, p)
    root = spd_sqrt(omega_m)
    population = symmetrize(root @ realize_sigma(sigma, omega_m) @ root)
    return EmpiricalEigs(tuple(np.linalg.eigvalsh(population)))


# Stieltjes transforms

def stieltjes_from_eigs(eigs: Sequence[float], lam: float) -> Tuple[float, float]:
    """Trace-of-resolvent estimates s = mean 1/(μ+λ), s′ = mean 1/(μ+λ)², normalized by the eigenvalue count."""
    _check_lambda(lam)
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size == 0:
        raise ValueError("need at least one eigenvalue")
    # rounding can leave tiny negative eigenvalues of a PSD matrix
    eigs = np.maximum(eigs, 0.0)
    r = 1.0 / (eigs + lam)
    return float(np.mean(r)), float(np.mean(r ** 2))


def silverstein_convert(v: float, v_prime: float, lam: float, gamma: float) -> Tuple[float, float]:
    """Companion (v, v′) at z = −λ to (s, s′) through γ(s + z⁻¹) = v + z⁻¹, γ(s′ − z⁻²) = v′ − z⁻²."""
    _check_lambda(lam)
    if gamma <= 0:
        raise ValueError(f"γ must be positive, got {gamma}")
    s = (v - 1.0 / lam) / gamma + 1.0 / lam
    s_prime = (v_prime - 1.0 / lam ** 2) / gamma + 1.0 / lam ** 2
    return s, s_prime


def silverstein_invert(s: float, s_prime: float, lam: float, gamma: float) -> Tuple[float, float]:
    _check_lambda(lam)
    if gamma <= 0:
        raise ValueError(f"γ must be positive, got {gamma}")
    v = gamma * (s - 1.0 / lam) + 1.0 / lam
    v_prime = gamma * (s_prime - 1.0 / lam ** 2) + 1.0 / lam ** 2
    return v, v_prime


def fixed_point_stieltjes(law: SpectralLaw, gamma: float, lam: float,
                          max_iter: Optional[int] = None, tol: Optional[float] = None) -> StieltjesEval:
    """Solve v = 1/(λ + γ∫t/(1+vt)dH(t)) from v = 0, then v′ and the conversion to (s, s′).

    The update is damped by ½ whenever its step grows.
    """
    _check_lambda(lam)
    if gamma <= 0:
        raise ValueError(f"γ must be positive, got {gamma}")
    max_iter = settings.FIXED_POINT_MAX_ITER if max_iter is None else max_iter
    tol = settings.FIXED_POINT_TOL if tol is None else tol
    if max_iter < 0 or tol < 0:
        raise ValueError(f"max_iter and tol must be non-negative, got {max_iter} and {tol}")

    v = 0.0
    previous = math.inf
    residual = math.inf
    damping = 1.0
    for iteration in range(1, max_iter + 1):
        update = 1.0 / (lam + gamma * law.expect(lambda t: t / (1.0 + v * t)))
        residual = abs(update - v)
        if residual > previous:
            damping = 0.5
        v = v + damping * (update - v)
        previous = residual
        if residual < tol * max(1.0, abs(v)):
            break
    else:
        raise NoConvergenceError(
            f"fixed point did not converge in {max_iter} iterations (residual {residual:.3e}, γ={gamma}, λ={lam})"
        )

    curvature = law.expect(lambda t: t ** 2 / (1.0 + t * v) ** 2)
    v_prime = 1.0 / (1.0 / v ** 2 - gamma * curvature)
    s, s_prime = silverstein_convert(v, v_prime, lam, gamma)
    return StieltjesEval(s=s, s_prime=s_prime, v=v, v_prime=v_prime, lam=lam, gamma=gamma,
                         iterations=iteration, residual=residual)


# Limiting risk

def limiting_risk_from_transform(s: float, s_prime: float, lam: float, gamma: float, sigma2: float) -> float:
    """r = σ²/D + (λ/γ − σ²)(γλs − γλ²s′)/D² with D = λγs + 1 − γ."""
    _check_lambda(lam)
    denominator = lam * gamma * s + 1.0 - gamma
    if abs(denominator) < 1e-14:
        raise DegenerateDenominatorError(f"λγs + 1 − γ vanished at λ={lam}, γ={gamma}")
    numerator = gamma * lam * s - gamma * lam ** 2 * s_prime
    return sigma2 / denominator + (lam / gamma - sigma2) * numerator / denominator ** 2


def limiting_risk(evaluation: StieltjesEval, sigma2: float) -> float:
    return limiting_risk_from_transform(evaluation.s, evaluation.s_prime, evaluation.lam, evaluation.gamma, sigma2)


def mp_law_stieltjes(lam: float, gamma: float, rho: float = 1.0) -> Tuple[float, float]:
    """Closed-form m(−λ) and m′(−λ) for a point-mass population spectrum at ρ.

    Written as m = 2/(a + R) with a = ρ − ργ + λ and R = √(a² + 4ργλ) to
    avoid cancellation for large λ.
    """
    _check_lambda(lam)
    if gamma <= 0 or rho <= 0:
        raise ValueError(f"γ and ρ must be positive, got γ={gamma}, ρ={rho}")
    a = rho - rho * gamma + lam
    root = math.sqrt(a * a + 4 * rho * gamma * lam)
    m = 2.0 / (a + root)
    m_prime = 2.0 * (1.0 + (a + 2 * rho * gamma) / root) / (a + root) ** 2
    return m, m_prime


def mp_law_risk(lam: float, gamma: float, sigma2: float, rho: float = 1.0) -> float:
    """Limiting risk for Σ_test = ρΩ⁻¹: σ² + ρ[γσ²m + λ(λ − γσ²)m′]."""
    m, m_prime = mp_law_stieltjes(lam, gamma, rho)
    return sigma2 + rho * (gamma * sigma2 * m + lam * (lam - gamma * sigma2) * m_prime)


def optimal_limiting_risk(gamma: float, sigma2: float, rho: float = 1.0) -> float:
    """Value of ``mp_law_risk`` at its minimizer λ = γσ²."""
    shift = (gamma - 1.0) / gamma
    return (sigma2 / 2 + rho * shift / 2
            + rho / 2 * math.sqrt((sigma2 / rho - shift) ** 2 + 4 * sigma2 / rho))


def optimal_lambda_asymptotic(gamma: float, sigma2: float) -> float:
    return gamma * sigma2


def optimal_lambda_finite(p: int, n: int, sigma2: float, c: float = 1.0) -> float:
    """λ = c·pσ²/n, the ridge parameter paired with the weight cΩ."""
    if p < 1 or n < 1:
        raise ValueError(f"p and n must be positive, got p={p}, n={n}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    return c * p * sigma2 / n


def analytic_limiting_risk(law: SpectralLaw, lam: float, gamma: float, sigma2: float) -> Tuple[float, StieltjesEval]:
    """Limiting risk for a law, by closed form for point masses and by the fixed point otherwise."""
    evaluation = fixed_point_stieltjes(law, gamma, lam)
    if isinstance(law, PointMass):
        return mp_law_risk(lam, gamma, sigma2, law.value), evaluation
    return limiting_risk(evaluation, sigma2), evaluation
