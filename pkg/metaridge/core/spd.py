"""Primitives of the SPD manifold.

Matrix functions go through the symmetric eigendecomposition; definiteness is
certified by a Cholesky factorization. Every function is pure and returns new
arrays.
"""

from typing import Callable

import numpy as np

from ..exceptions import DimensionMismatchError, NotSpdError

SYMMETRY_TOL = 1e-12
MAX_CONDITION = 1e12


def symmetrize(M) -> np.ndarray:
    """Return the symmetric part ½(M + Mᵀ) of a square matrix (or a stack of them)."""
    M = np.asarray(M, dtype=float)
    return (M + np.swapaxes(M, -1, -2)) / 2


def is_symmetric(M, tol: float = SYMMETRY_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        return True
    return bool(np.max(np.abs(M - M.T)) <= tol * scale)


def _require_square(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {M.shape}")
    return M


def check_same_dim(*mats: np.ndarray) -> int:
    """Raise DimensionMismatchError unless all matrices are square of one size."""
    dims = {np.shape(m) for m in mats}
    if len(dims) != 1:
        raise DimensionMismatchError(f"matrix shapes differ: {sorted(dims)}")
    shape = dims.pop()
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionMismatchError(f"expected square matrices, got shape {shape}")
    return shape[0]


def validate_spd(Q, name: str = "matrix", check_condition: bool = True) -> np.ndarray:
    """Return the symmetric part of ``Q`` after certifying it is SPD.

    Raises NotSpdError when ``Q`` is not symmetric to SYMMETRY_TOL, when its
    Cholesky factorization fails, or when its condition number exceeds
    MAX_CONDITION.
    """
    Q = _require_square(Q, name)
    if not np.all(np.isfinite(Q)):
        raise NotSpdError(f"{name} has non-finite entries")
    if not is_symmetric(Q):
        raise NotSpdError(f"{name} is not symmetric")
    Q = symmetrize(Q)
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as exc:
        raise NotSpdError(f"{name} is not positive definite") from exc
    if check_condition:
        w = np.linalg.eigvalsh(Q)
        if w[0] <= 0 or w[-1] / w[0] > MAX_CONDITION:
            raise NotSpdError(f"{name} is numerically singular (condition number {w[-1] / max(w[0], 1e-300):.3e})")
    return Q


def _eig_positive(Q: np.ndarray, name: str):
    w, V = np.linalg.eigh(symmetrize(Q))
    if w[0] <= 0:
        raise NotSpdError(f"{name} has non-positive eigenvalue {w[0]:.3e}")
    return w, V


def spd_function(Q, fn: Callable[[np.ndarray], np.ndarray], name: str = "matrix") -> np.ndarray:
    """Apply a scalar function to the spectrum of an SPD matrix.

    ``Q`` must pass validate_spd, condition bound included.
    """
    Q = validate_spd(Q, name)
    w, V = _eig_positive(Q, name)
    return symmetrize((V * fn(w)) @ V.T)


def spd_sqrt(Q) -> np.ndarray:
    """Principal square root S with S·S = Q."""
    return spd_function(Q, np.sqrt)


def spd_inv_sqrt(Q) -> np.ndarray:
    return spd_function(Q, lambda w: 1.0 / np.sqrt(w))


def spd_power(Q, t: float) -> np.ndarray:
    return spd_function(Q, lambda w: w ** t)


def spd_log(Q) -> np.ndarray:
    return spd_function(Q, np.log)


def sym_expm(Xi) -> np.ndarray:
    """Matrix exponential of a symmetric matrix."""
    Xi = _require_square(Xi, "tangent vector")
    w, V = np.linalg.eigh(symmetrize(Xi))
    return symmetrize((V * np.exp(w)) @ V.T)


def retract_second_order(Q, Xi) -> np.ndarray:
    """Second-order retraction P_Q(Ξ) = Q + Ξ + ½ Ξ Q⁻¹ Ξ.

    The result is SPD for every symmetric Ξ: it equals
    ½Q + ½(Q + Ξ) Q⁻¹ (Q + Ξ).
    """
    check_same_dim(Q, Xi)
    Q = np.asarray(Q, dtype=float)
    Xi = np.asarray(Xi, dtype=float)
    return symmetrize(Q + Xi + Xi @ np.linalg.solve(Q, Xi) / 2)


def retract_exp(Q, Xi) -> np.ndarray:
    """Exponential-map retraction Q^{1/2} exp(Q^{-1/2} Ξ Q^{-1/2}) Q^{1/2}."""
    check_same_dim(Q, Xi)
    w, V = _eig_positive(np.asarray(Q, dtype=float), "base point")
    root = (V * np.sqrt(w)) @ V.T
    inv_root = (V / np.sqrt(w)) @ V.T
    return symmetrize(root @ sym_expm(symmetrize(inv_root @ Xi @ inv_root)) @ root)


def affine_metric(Q, A, B) -> float:
    """Affine-invariant inner product g_Q(A, B) = tr(A Q⁻¹ B Q⁻¹)."""
    check_same_dim(Q, A, B)
    Q = validate_spd(Q, "base point", check_condition=False)
    QiA = np.linalg.solve(Q, A)
    QiB = np.linalg.solve(Q, B)
    return float(np.sum(QiA * QiB.T))


def riemannian_norm(Q, Xi) -> float:
    return float(np.sqrt(max(affine_metric(Q, Xi, Xi), 0.0)))


def geodesic(A, B, t: float) -> np.ndarray:
    """Point γ_{A,B}(t) = A^{1/2}(A^{-1/2} B A^{-1/2})^t A^{1/2} of the affine-invariant geodesic."""
    check_same_dim(A, B)
    A = validate_spd(A, "A", check_condition=False)
    B = validate_spd(B, "B", check_condition=False)
    w, V = _eig_positive(A, "A")
    root = (V * np.sqrt(w)) @ V.T
    inv_root = (V / np.sqrt(w)) @ V.T
    inner = spd_power(symmetrize(inv_root @ B @ inv_root), t)
    return symmetrize(root @ inner @ root)


def project_eig_floor(M, floor: float) -> np.ndarray:
    """Clip the spectrum of a symmetric matrix from below at ``floor``."""
    w, V = np.linalg.eigh(symmetrize(M))
    return symmetrize((V * np.maximum(w, floor)) @ V.T)


def min_eigenvalue(M) -> float:
    return float(np.linalg.eigvalsh(symmetrize(M))[0])


def random_spd(p: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random well-conditioned SPD matrix GGᵀ/p + ½I, multiplied by ``scale``."""
    G = rng.standard_normal((p, p))
    return scale * symmetrize(G @ G.T / p + 0.5 * np.eye(p))


def random_symmetric(p: int, rng: np.random.Generator, unit: bool = True) -> np.ndarray:
    """Random symmetric direction, normalized to unit Frobenius norm by default."""
    Xi = symmetrize(rng.standard_normal((p, p)))
    if unit:
        Xi /= np.linalg.norm(Xi)
    return Xi
