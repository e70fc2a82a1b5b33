"""
Covariance families and samplers for the random-effects linear model.

Each task draws coefficients β̄ ~ N(0, Ω/p), a design X = Z Σ^{1/2} with iid
unit-variance entries in Z, and responses y = Xβ̄ + ε with ε ~ N(0, σ²I).
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import DimensionMismatchError, NotSpdError
from ..models.config import (
    BlockDiagSigma,
    ExplicitOmega,
    ExplicitSigma,
    IdentityOmega,
    IdentitySigma,
    PowerLawOmega,
    PowerLawSigma,
    PowerOfOmegaSigma,
    ScaledInverseOmegaSigma,
    TridiagonalOmega,
)
from ..models.domain import MetaDataset, Task
from .spd import check_same_dim, spd_function, spd_sqrt, symmetrize, validate_spd

logger = logging.getLogger(__name__)

ENTRY_LAWS = ("gaussian", "rademacher")


def build_tridiagonal(p: int, a: float, b: float) -> np.ndarray:
    """Tridiagonal Toeplitz matrix with eigenvalues a + 2b·cos(kπ/(p+1)), k = 1..p."""
    if p < 1:
        raise DimensionMismatchError(f"p must be positive, got {p}")
    if a <= 2 * abs(b):
        raise NotSpdError(f"tridiagonal matrix needs a > 2|b| (got a={a}, b={b})")
    off = np.full(p - 1, float(b))
    return np.diag(np.full(p, float(a))) + np.diag(off, 1) + np.diag(off, -1)


def tridiagonal_eigenvalues(p: int, a: float, b: float) -> np.ndarray:
    k = np.arange(1, p + 1)
    return a + 2 * b * np.cos(k * np.pi / (p + 1))


def haar_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian matrix with sign-fixed R diagonal."""
    G = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def build_power_law(p: int, exponent: float, basis_seed: int) -> np.ndarray:
    """SPD matrix with eigenvalues j^(-exponent), j = 1..p, in a seeded random basis."""
    if exponent < 0:
        raise ValueError(f"exponent must be non-negative, got {exponent}")
    eigs = np.arange(1, p + 1, dtype=float) ** (-exponent)
    if exponent == 0:
        return np.eye(p)
    U = haar_orthogonal(p, np.random.default_rng(basis_seed))
    return symmetrize((U * eigs) @ U.T)


def realize_omega(spec, p: int) -> np.ndarray:
    """Concrete Ω for an OmegaSpec."""
    if isinstance(spec, TridiagonalOmega):
        return build_tridiagonal(p, spec.a, spec.b)
    if isinstance(spec, IdentityOmega):
        return np.eye(p)
    if isinstance(spec, PowerLawOmega):
        return build_power_law(p, spec.exponent, spec.basis_seed)
    if isinstance(spec, ExplicitOmega):
        M = np.asarray(spec.matrix, dtype=float)
        if M.shape != (p, p):
            raise DimensionMismatchError(f"explicit Omega has shape {M.shape}, expected ({p}, {p})")
        return validate_spd(M, "Omega")
    raise TypeError(f"unsupported Omega spec {spec!r}")


def realize_sigma(spec, omega: np.ndarray) -> np.ndarray:
    """Concrete design covariance Σ for a SigmaSpec, given Ω."""
    omega = np.asarray(omega, dtype=float)
    p = omega.shape[0]
    if isinstance(spec, IdentitySigma):
        return np.eye(p)
    if isinstance(spec, ScaledInverseOmegaSigma):
        return spd_function(omega, lambda w: spec.rho / w, "Omega")
    if isinstance(spec, PowerOfOmegaSigma):
        return spd_function(omega, lambda w: w ** (-spec.kappa), "Omega")
    if isinstance(spec, BlockDiagSigma):
        diag = np.full(p, spec.d)
        diag[0] = spec.c
        return np.diag(diag)
    if isinstance(spec, PowerLawSigma):
        return build_power_law(p, spec.exponent, spec.basis_seed)
    if isinstance(spec, ExplicitSigma):
        M = np.asarray(spec.matrix, dtype=float)
        check_same_dim(M, omega)
        return validate_spd(M, "Sigma")
    raise TypeError(f"unsupported Sigma spec {spec!r}")


def expand_schedule(schedule: Sequence[Union[int, Tuple[int, int]]]) -> List[int]:
    """Expand ``[(150, 200), (50, 9800)]``-style schedules into per-task sizes."""
    sizes: List[int] = []
    for item in schedule:
        if isinstance(item, (tuple, list)):
            size, count = item
            if count < 0:
                raise ValueError(f"schedule count must be non-negative, got {count}")
            sizes.extend([int(size)] * int(count))
        else:
            sizes.append(int(item))
    if any(n < 1 for n in sizes):
        raise ValueError("task sizes must be positive")
    return sizes


def draw_entries(shape: Tuple[int, int], rng: np.random.Generator, entry_law: str = "gaussian") -> np.ndarray:
    """Matrix of iid zero-mean unit-variance entries."""
    if entry_law == "gaussian":
        return rng.standard_normal(shape)
    if entry_law == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    raise ValueError(f"unknown entry law {entry_law!r}; expected one of {ENTRY_LAWS}")


def sample_design(
    sigma_root: np.ndarray,
    n: int,
    rng: np.random.Generator,
    entry_law: str = "gaussian",
) -> np.ndarray:
    p = sigma_root.shape[0]
    return draw_entries((n, p), rng, entry_law) @ sigma_root


def sample_coefficients(omega_root: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """β̄ ~ N(0, Ω/p) from a precomputed Ω^{1/2}."""
    p = omega_root.shape[0]
    return omega_root @ rng.standard_normal(p) / np.sqrt(p)


def sample_task(
    omega: np.ndarray,
    sigma: np.ndarray,
    sigma2: float,
    n: int,
    rng: np.random.Generator,
    entry_law: str = "gaussian",
    omega_root: Optional[np.ndarray] = None,
    sigma_root: Optional[np.ndarray] = None,
) -> Task:
    """Draw one task of size n; the square roots may be passed in to avoid recomputing them."""
    check_same_dim(omega, sigma)
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")
    if omega_root is None:
        omega_root = spd_sqrt(omega)
    if sigma_root is None:
        sigma_root = spd_sqrt(sigma)
    beta = sample_coefficients(omega_root, rng)
    X = sample_design(sigma_root, n, rng, entry_law)
    noise = np.sqrt(sigma2) * rng.standard_normal(n)
    return Task(X=X, y=X @ beta + noise, beta_true=beta)


def sample_meta_dataset(
    L: int,
    n_schedule: Sequence[Union[int, Tuple[int, int]]],
    omega: np.ndarray,
    sigma: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
    entry_law: str = "gaussian",
) -> MetaDataset:
    """Draw L independent tasks sharing Ω, Σ and σ²."""
    sizes = expand_schedule(n_schedule)
    if len(sizes) != L:
        raise DimensionMismatchError(f"schedule describes {len(sizes)} tasks but L = {L}")
    omega_root = spd_sqrt(omega)
    sigma_root = spd_sqrt(sigma)
    tasks = tuple(
        sample_task(omega, sigma, sigma2, n, rng, entry_law, omega_root, sigma_root) for n in sizes
    )
    logger.debug("Sampled meta dataset", extra={"L": L, "p": omega.shape[0], "total_n": sum(sizes)})
    return MetaDataset(tasks=tasks, sigma2=sigma2, omega_true=np.asarray(omega, dtype=float))


def sample_covariance(X: np.ndarray) -> np.ndarray:
    """Σ̂ = XᵀX / n."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionMismatchError(f"design must be a non-empty n×p matrix, got shape {X.shape}")
    return symmetrize(X.T @ X / X.shape[0])
