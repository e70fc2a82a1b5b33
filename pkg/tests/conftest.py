"""
Shared fixtures for the metaridge test suite.
"""

import numpy as np
import pytest

from metaridge.core.estimators import MomentStatistics, gradient_check, mle_gradient, mle_negloglik
from metaridge.core.random_effects import build_tridiagonal, sample_meta_dataset
from metaridge.core.spd import random_spd
from metaridge.models.config import ExperimentConfig

GRADIENT_GATE = 1e-5


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_dataset():
    """Eight-dimensional tasks of size five drawn around a tridiagonal Ω."""
    omega = build_tridiagonal(8, 4.0, 1.0)
    return sample_meta_dataset(4, [(5, 4)], omega, np.eye(8), 0.5, np.random.default_rng(7))


@pytest.fixture
def exact_moment_stats():
    """One task with X = [2I; I] and targets equal to the model second moment at Ω₀."""
    p = 4
    X = np.vstack([2 * np.eye(p), np.eye(p)])
    omega0 = build_tridiagonal(p, 2.0, 0.5)
    sigma2 = 0.3
    Y = X @ omega0 @ X.T / p + sigma2 * np.eye(X.shape[0])
    return MomentStatistics.from_moments([X], [Y], sigma2), omega0


@pytest.fixture
def small_config():
    return ExperimentConfig(
        name="small",
        p=8,
        n_schedule=6,
        L=20,
        n_new=[4, 8],
        runs=3,
        omega={"kind": "tridiagonal", "a": 4.0, "b": 1.0},
        sigma2=0.5,
        lambda_rule={"kind": "scaled_optimal", "c": 1.0},
        estimator={"kind": "mom_rgd"},
        fit_max_iter=300,
        surrogate_min_dim=64,
        m_test=50,
        seed=11,
    )


@pytest.fixture(scope="session")
def gradient_gate():
    """Fit tests depend on this: the MoM and MLE gradients must match finite differences first."""
    rng = np.random.default_rng(2024)
    p, L = 8, 4
    omega = random_spd(p, rng)
    data = sample_meta_dataset(L, [(5, L)], omega, np.eye(p), 1.0, rng)
    base = random_spd(p, rng)
    stats = MomentStatistics.from_dataset(data)

    mom_errors = gradient_check(stats.value, stats.gradient, base, rng, directions=20)
    mle_errors = gradient_check(
        lambda O: mle_negloglik(O, data.sigma2, data), lambda O: mle_gradient(O, data.sigma2, data), base, rng,
        directions=20,
    )
    worst = max(mom_errors.max(), mle_errors.max())
    if worst >= GRADIENT_GATE:
        pytest.fail(f"gradient gate failed: max relative error {worst:.3e}")
    return worst
