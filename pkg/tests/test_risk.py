"""
Tests for exact, plug-in and Monte-Carlo predictive risk.
"""

import numpy as np
import pytest

from metaridge.core.asymptotics import mp_law_risk
from metaridge.core.estimators import generalized_ridge
from metaridge.core.random_effects import build_tridiagonal, sample_coefficients, sample_design
from metaridge.core.risk import (
    conditional_risk,
    empirical_risk,
    oracle_risk_exact,
    plugin_risk_direct,
    plugin_risk_exact,
    risk_gradient,
)
from metaridge.core.spd import (
    affine_metric,
    random_spd,
    random_symmetric,
    retract_second_order,
    spd_sqrt,
)
from metaridge.exceptions import DimensionMismatchError, NonPositiveLambdaError


def _sample_cov(p, n, sigma, rng):
    X = sample_design(spd_sqrt(sigma), n, rng)
    return X.T @ X / n


@pytest.fixture
def risk_inputs(rng):
    p, n = 6, 4
    omega = random_spd(p, rng)
    sigma = random_spd(p, rng)
    return omega, sigma, _sample_cov(p, n, sigma, rng), n


class TestOracleRisk:

    def test_scalar_spectrum(self):
        p, lam, sigma2 = 4, 0.5, 1.0
        risk = oracle_risk_exact(np.eye(p), np.eye(p), np.eye(p), sigma2, lam, p)
        assert risk.bias == pytest.approx(lam ** 2 / (1 + lam) ** 2)
        assert risk.variance == pytest.approx(sigma2 / (1 + lam))
        assert risk.variance_correction == pytest.approx(-lam * sigma2 / (1 + lam) ** 2)
        assert risk.noise == sigma2

    def test_total_is_sum_of_terms(self, risk_inputs):
        omega, sigma, sigma_hat, n = risk_inputs
        risk = oracle_risk_exact(omega, sigma, sigma_hat, 0.7, 1.3, n)
        parts = risk.noise + risk.bias + risk.variance_correction + risk.variance
        assert risk.total == pytest.approx(parts, rel=1e-12)
        assert risk.bias >= 0 and risk.variance >= 0
        assert risk.as_dict()["total"] == risk.total

    def test_large_lambda_limit(self, risk_inputs):
        omega, sigma, sigma_hat, n = risk_inputs
        p = omega.shape[0]
        risk = oracle_risk_exact(omega, sigma, sigma_hat, 0.7, 1e6, n)
        assert risk.bias == pytest.approx(np.trace(sigma @ omega) / p, rel=1e-4)
        assert abs(risk.variance) < 1e-5
        assert abs(risk.variance_correction) < 1e-5

    def test_combined_bias_terms(self, risk_inputs):
        omega, sigma, sigma_hat, n = risk_inputs
        p, lam, sigma2 = omega.shape[0], 0.9, 0.4
        risk = oracle_risk_exact(omega, sigma, sigma_hat, sigma2, lam, n)
        root = spd_sqrt(omega)
        population = root @ sigma @ root
        resolvent = np.linalg.inv(root @ sigma_hat @ root + lam * np.eye(p))
        combined = (lam ** 2 - lam * p * sigma2 / n) * np.trace(population @ resolvent @ resolvent) / p
        assert risk.bias + risk.variance_correction == pytest.approx(combined, rel=1e-10)

    def test_rejects_non_positive_lambda(self, risk_inputs):
        omega, sigma, sigma_hat, n = risk_inputs
        with pytest.raises(NonPositiveLambdaError):
            oracle_risk_exact(omega, sigma, sigma_hat, 1.0, 0.0, n)

    @pytest.mark.slow
    def test_large_dimension_approaches_limit(self):
        p, n, sigma2, lam = 1000, 500, 1.5, 3.0
        rng = np.random.default_rng(1000)
        omega = build_tridiagonal(p, 16.0, 5.0)
        sigma = np.linalg.inv(omega)
        sigma = (sigma + sigma.T) / 2
        risk = oracle_risk_exact(omega, sigma, _sample_cov(p, n, sigma, rng), sigma2, lam, n)
        assert risk.total == pytest.approx(mp_law_risk(lam, 2.0, sigma2, 1.0), rel=0.03)


class TestPluginRisk:

    def test_true_weight_matches_oracle(self, risk_inputs):
        omega, sigma, sigma_hat, n = risk_inputs
        oracle = oracle_risk_exact(omega, sigma, sigma_hat, 0.5, 0.8, n)
        plugin = plugin_risk_exact(omega, omega, sigma, sigma_hat, 0.5, 0.8, n)
        for key, value in oracle.as_dict().items():
            assert plugin.as_dict()[key] == pytest.approx(value, rel=1e-10, abs=1e-14)

    def test_direct_formula_agrees(self, risk_inputs, rng):
        omega, sigma, sigma_hat, n = risk_inputs
        weight = random_spd(omega.shape[0], rng)
        upsilon = random_spd(omega.shape[0], rng)
        exact = plugin_risk_exact(upsilon, weight, sigma, sigma_hat, 0.5, 0.8, n)
        direct = plugin_risk_direct(upsilon, weight, sigma, sigma_hat, 0.5, 0.8, n)
        for key, value in exact.as_dict().items():
            assert direct.as_dict()[key] == pytest.approx(value, rel=1e-9, abs=1e-13)

    def test_matches_monte_carlo_ridge(self):
        p, n, sigma2, lam, draws = 6, 5, 0.5, 0.4, 4000
        rng = np.random.default_rng(21)
        omega = build_tridiagonal(p, 3.0, 1.0)
        X = rng.standard_normal((n, p))
        root = spd_sqrt(omega)
        risks = np.empty(draws)
        for k in range(draws):
            beta = sample_coefficients(root, rng)
            y = X @ beta + np.sqrt(sigma2) * rng.standard_normal(n)
            fit = generalized_ridge(X, y, lam, np.eye(p))
            risks[k] = conditional_risk(fit.beta, beta, np.eye(p), sigma2)
        exact = plugin_risk_exact(omega, np.eye(p), np.eye(p), X.T @ X / n, sigma2, lam, n)
        stderr = risks.std() / np.sqrt(draws)
        assert abs(risks.mean() - exact.total) < 4 * stderr

    def test_out_of_distribution_gap_is_linear(self, risk_inputs, rng):
        omega, sigma, sigma_hat, n = risk_inputs
        weight = random_spd(omega.shape[0], rng)
        base = plugin_risk_exact(omega, weight, sigma, sigma_hat, 0.5, 0.8, n).total
        gaps = [
            abs(plugin_risk_exact(omega + t * np.eye(omega.shape[0]), weight, sigma, sigma_hat, 0.5, 0.8, n).total
                - base)
            for t in (1e-1, 1e-2, 1e-3)
        ]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] == pytest.approx(gaps[1] / 10, rel=1e-5)


class TestOptimalWeight:
    """With λ = pσ²/n the true Ω minimizes the plug-in risk over SPD weights."""

    @pytest.fixture
    def setting(self):
        p, n, sigma2 = 16, 12, 1.0
        rng = np.random.default_rng(316)
        omega = build_tridiagonal(p, 4.0, 1.0)
        sigma = random_spd(p, rng)
        return omega, sigma, _sample_cov(p, n, sigma, rng), sigma2, p * sigma2 / n, n, rng

    def test_perturbations_do_not_improve(self, setting):
        omega, sigma, sigma_hat, sigma2, lam, n, rng = setting
        best = plugin_risk_exact(omega, omega, sigma, sigma_hat, sigma2, lam, n).total
        for eps in (0.1, 0.5):
            for _ in range(50):
                Q = retract_second_order(omega, eps * random_symmetric(omega.shape[0], rng))
                assert best <= plugin_risk_exact(omega, Q, sigma, sigma_hat, sigma2, lam, n).total + 1e-10

    def test_gradient_vanishes_at_optimum(self, setting):
        omega, sigma, sigma_hat, sigma2, lam, n, _ = setting
        riemannian, euclidean = risk_gradient(omega, omega, sigma, sigma_hat, sigma2, lam, n)
        assert np.linalg.norm(riemannian) < 1e-8
        assert np.linalg.norm(euclidean) < 1e-8

    def test_gradient_vanishes_for_scaled_weight(self, setting):
        omega, sigma, sigma_hat, sigma2, _, n, _ = setting
        c = 1.7
        lam = c * omega.shape[0] * sigma2 / n
        riemannian, _ = risk_gradient(c * omega, omega, sigma, sigma_hat, sigma2, lam, n)
        assert np.linalg.norm(riemannian) < 1e-8


class TestRiskGradient:

    def test_euclidean_matches_finite_differences(self, risk_inputs, rng):
        omega, sigma, sigma_hat, n = risk_inputs
        Q = random_spd(omega.shape[0], rng)
        _, euclidean = risk_gradient(Q, omega, sigma, sigma_hat, 0.5, 0.8, n)
        t = 1e-5
        for _ in range(10):
            xi = random_symmetric(omega.shape[0], rng)
            forward = plugin_risk_exact(omega, Q + t * xi, sigma, sigma_hat, 0.5, 0.8, n).total
            backward = plugin_risk_exact(omega, Q - t * xi, sigma, sigma_hat, 0.5, 0.8, n).total
            fd = (forward - backward) / (2 * t)
            assert fd == pytest.approx(np.sum(euclidean * xi), abs=1e-6 * max(1.0, np.linalg.norm(euclidean)))

    def test_riemannian_is_metric_dual(self, risk_inputs, rng):
        omega, sigma, sigma_hat, n = risk_inputs
        Q = random_spd(omega.shape[0], rng)
        riemannian, euclidean = risk_gradient(Q, omega, sigma, sigma_hat, 0.5, 0.8, n)
        xi = random_symmetric(omega.shape[0], rng)
        assert affine_metric(Q, riemannian, xi) == pytest.approx(float(np.sum(euclidean * xi)), rel=1e-8)


class TestRealizedRisk:

    def test_exact_fit_costs_noise(self, rng):
        beta = rng.standard_normal(3)
        assert conditional_risk(beta, beta, random_spd(3, rng), 0.4) == pytest.approx(0.4)

    def test_identity_covariance(self):
        assert conditional_risk([1.0, 0.0], [0.0, 2.0], np.eye(2), 0.5) == pytest.approx(5.5)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            conditional_risk([1.0, 0.0], [1.0, 0.0, 0.0], np.eye(3), 0.5)

    def test_noiseless_exact_fit_is_zero(self, rng):
        beta = rng.standard_normal(4)
        assert empirical_risk(beta, beta, np.eye(4), 0.0, 200, rng) == 0.0

    @pytest.mark.parametrize("m_test,bands", [(100_000, 3), (200, 5)])
    def test_converges_to_conditional_risk(self, m_test, bands):
        rng = np.random.default_rng(m_test)
        p = 8
        sigma = random_spd(p, rng)
        beta_bar = rng.standard_normal(p) / np.sqrt(p)
        beta_hat = beta_bar + 0.3 * rng.standard_normal(p) / np.sqrt(p)
        target = conditional_risk(beta_hat, beta_bar, sigma, 1.0)
        estimate = empirical_risk(beta_hat, beta_bar, sigma, 1.0, m_test, rng)
        stderr = target * np.sqrt(2.0 / m_test)
        assert abs(estimate - target) < bands * stderr

    def test_rejects_empty_test_set(self, rng):
        with pytest.raises(ValueError):
            empirical_risk(np.zeros(2), np.zeros(2), np.eye(2), 1.0, 0, rng)
