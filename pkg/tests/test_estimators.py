"""
Tests for the ridge solver, the Ω̂ estimators and σ² estimation.
"""

import numpy as np
import pytest

from metaridge.core.estimators import (
    MomentStatistics,
    diag_weight,
    dicker_sigma2,
    estimate_sigma2_holdout,
    estimate_smooth_bound,
    fit_correlation_fullrank,
    fit_correlation_split,
    fit_l1_prox_rgd,
    fit_mle_rgd,
    fit_mom_rgd,
    generalized_ridge,
    gradient_check,
    l1_objective,
    left_inverse_apply,
    mle_gradient,
    mle_negloglik,
    mom_gradient,
    mom_objective,
    offdiag_l1,
    soft_threshold,
)
from metaridge.core.random_effects import build_tridiagonal, sample_meta_dataset
from metaridge.core.spd import geodesic, random_spd
from metaridge.exceptions import DimensionMismatchError, NonPositiveLambdaError, SingularError
from metaridge.models.domain import FitOptions, MetaDataset, Task


def _scalar_dataset(x=2.0, y=3.0, sigma2=1.0):
    return MetaDataset((Task(X=[[x]], y=[y]),), sigma2)


class TestGradientGate:
    """Run first: every fit test below relies on these gradients."""

    def test_gate(self, gradient_gate):
        assert gradient_gate < 1e-5

    def test_mom_dataset_gradient(self, small_dataset, rng):
        base = random_spd(small_dataset.p, rng)
        errors = gradient_check(
            lambda O: mom_objective(O, small_dataset), lambda O: mom_gradient(O, small_dataset), base, rng
        )
        assert errors.max() < 1e-5

    def test_mle_gradient_at_truth(self, small_dataset, rng):
        omega = small_dataset.omega_true
        errors = gradient_check(
            lambda O: mle_negloglik(O, 0.5, small_dataset), lambda O: mle_gradient(O, 0.5, small_dataset), omega, rng
        )
        assert errors.max() < 1e-5


class TestGeneralizedRidge:

    def test_scalar(self):
        fit = generalized_ridge([[1.0]], [1.0], 1.0, [[1.0]])
        assert fit.beta[0] == pytest.approx(0.5)

    def test_identity_weight_matches_ridge(self, rng):
        X = rng.standard_normal((10, 4))
        y = rng.standard_normal(10)
        fit = generalized_ridge(X, y, 0.3, np.eye(4))
        expected = np.linalg.solve(X.T @ X + 10 * 0.3 * np.eye(4), X.T @ y)
        np.testing.assert_allclose(fit.beta, expected, atol=1e-12)

    def test_weight_enters_as_inverse(self, rng):
        X = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        A = random_spd(3, rng)
        fit = generalized_ridge(X, y, 0.7, A, weight_label="omega_hat")
        expected = np.linalg.solve(X.T @ X + 6 * 0.7 * np.linalg.inv(A), X.T @ y)
        np.testing.assert_allclose(fit.beta, expected, atol=1e-10)
        assert fit.weight_label == "omega_hat"

    def test_zero_lambda_needs_full_rank(self):
        with pytest.raises(SingularError):
            generalized_ridge(np.ones((1, 2)), [1.0], 0.0, np.eye(2))

    def test_zero_lambda_least_squares(self, rng):
        X = rng.standard_normal((8, 3))
        y = rng.standard_normal(8)
        fit = generalized_ridge(X, y, 0.0, np.eye(3))
        np.testing.assert_allclose(fit.beta, np.linalg.lstsq(X, y, rcond=None)[0], atol=1e-10)

    def test_negative_lambda(self):
        with pytest.raises(NonPositiveLambdaError):
            generalized_ridge([[1.0]], [1.0], -1.0, [[1.0]])

    def test_weight_dimension(self):
        with pytest.raises(DimensionMismatchError):
            generalized_ridge(np.eye(2), [1.0, 2.0], 1.0, np.eye(3))


class TestMomentObjective:

    def test_scalar_value_and_gradient(self):
        data = _scalar_dataset()
        assert mom_objective([[1.0]], data) == pytest.approx(16.0)
        np.testing.assert_allclose(mom_gradient([[1.0]], data), [[-32.0]])

    def test_statistics_agree_with_residuals(self, small_dataset, rng):
        stats = MomentStatistics.from_dataset(small_dataset)
        omega = random_spd(small_dataset.p, rng)
        assert stats.value(omega) == pytest.approx(mom_objective(omega, small_dataset), rel=1e-10)
        np.testing.assert_allclose(stats.gradient(omega), mom_gradient(omega, small_dataset), rtol=1e-9, atol=1e-12)

    def test_tensor_and_direct_paths_agree(self, small_dataset, rng):
        with_tensor = MomentStatistics.from_dataset(small_dataset, with_tensor=True)
        direct = MomentStatistics.from_dataset(small_dataset, with_tensor=False)
        delta = random_spd(small_dataset.p, rng)
        np.testing.assert_allclose(with_tensor.apply(delta), direct.apply(delta), rtol=1e-10)

    def test_change_is_exact(self, small_dataset, rng):
        stats = MomentStatistics.from_dataset(small_dataset)
        a, b = random_spd(small_dataset.p, rng), random_spd(small_dataset.p, rng)
        change = stats.change(a, b, stats.gradient(a))
        assert change == pytest.approx(stats.value(b) - stats.value(a), rel=1e-8)

    def test_zero_at_exact_moments(self, exact_moment_stats):
        stats, omega0 = exact_moment_stats
        assert stats.value(omega0) == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(stats.gradient(omega0), 0.0, atol=1e-11)

    def test_smooth_bound_for_scaled_identity_grams(self, exact_moment_stats):
        stats, _ = exact_moment_stats
        assert estimate_smooth_bound(stats) == pytest.approx(1.1 * 2 * 25 / 16)

    def test_dimension_mismatch(self, small_dataset):
        with pytest.raises(DimensionMismatchError):
            mom_objective(np.eye(3), small_dataset)

    def test_l1_objective(self, small_dataset):
        omega = np.eye(small_dataset.p)
        omega[0, 1] = omega[1, 0] = -0.3
        omega[1, 2] = omega[2, 1] = 0.3
        assert offdiag_l1(omega) == pytest.approx(1.2)
        assert l1_objective(omega, small_dataset, 1.0) == pytest.approx(mom_objective(omega, small_dataset) + 1.2)

    def test_soft_threshold(self):
        np.testing.assert_array_equal(soft_threshold([3.0, -0.5, 1.0, -4.0], 1.0), [2.0, 0.0, 0.0, -3.0])


class TestGeodesicConvexity:
    """In the certified regime the moment objective is convex along affine-invariant geodesics."""

    def test_certified_regime(self):
        rng = np.random.default_rng(3)
        p, L = 4, 3
        data = sample_meta_dataset(L, [(2, L)], np.eye(p), np.eye(p), 0.5, rng)
        c = max(p * float(t.y @ t.y) / np.linalg.eigvalsh(t.X @ t.X.T)[0] for t in data.tasks)
        stats = MomentStatistics.from_dataset(data)
        for _ in range(50):
            A = c * np.eye(p) + random_spd(p, rng)
            B = c * np.eye(p) + random_spd(p, rng)
            t = rng.uniform()
            chord = (1 - t) * stats.value(A) + t * stats.value(B)
            assert stats.value(geodesic(A, B, t)) <= chord * (1 + 1e-9) + 1e-12


class TestMomentFit:

    def test_recovers_exact_moments(self, gradient_gate, exact_moment_stats):
        stats, omega0 = exact_moment_stats
        report = fit_mom_rgd(stats, FitOptions(grad_tol=1e-10))
        assert report.converged
        np.testing.assert_allclose(report.omega_hat, omega0, atol=1e-6)

    def test_objective_is_monotone(self, gradient_gate, small_dataset):
        report = fit_mom_rgd(small_dataset, FitOptions(max_iter=200))
        trace = np.array(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-10 * max(1.0, trace[0]))
        assert trace[-1] < trace[0]
        assert len(report.step_trace) == len(trace) - 1

    def test_output_is_spd(self, gradient_gate, small_dataset):
        report = fit_mom_rgd(small_dataset, FitOptions(max_iter=200))
        assert np.linalg.eigvalsh(report.omega_hat)[0] > 0
        np.testing.assert_array_equal(report.omega_hat, report.omega_hat.T)

    def test_starts_at_initial_point(self, gradient_gate, exact_moment_stats):
        stats, omega0 = exact_moment_stats
        report = fit_mom_rgd(stats, FitOptions(init=omega0))
        assert report.iterations == 0
        assert report.converged

    @pytest.mark.slow
    def test_error_shrinks_with_more_tasks(self, gradient_gate):
        p, n = 32, 24
        omega = build_tridiagonal(p, 4.0, 1.0)
        medians = []
        for L in (200, 800, 3200):
            errors = []
            for seed in range(10):
                data = sample_meta_dataset(L, [(n, L)], omega, np.eye(p), 1.0, np.random.default_rng([L, seed]))
                report = fit_mom_rgd(data, FitOptions(max_iter=2000))
                errors.append(np.linalg.norm(report.omega_hat - omega))
            medians.append(np.median(errors))
        assert medians[1] <= 0.8 * medians[0]
        assert medians[2] <= 0.8 * medians[1]

    @pytest.mark.slow
    def test_insensitive_to_initialization(self, gradient_gate):
        p, L = 16, 256
        omega = build_tridiagonal(p, 4.0, 0.5)
        data = sample_meta_dataset(L, [(24, L)], omega, np.eye(p), 0.5, np.random.default_rng(8))
        stats = MomentStatistics.from_dataset(data)
        opts = dict(max_iter=20_000, grad_tol=1e-10)
        inits = [None] + [random_spd(p, np.random.default_rng(seed), scale=3.0) for seed in (1, 2)]
        fits = [fit_mom_rgd(stats, FitOptions(init=init, **opts)).omega_hat for init in inits]
        tolerance = 1e-3 * np.linalg.norm(omega)
        for i in range(3):
            for j in range(i + 1, 3):
                assert np.linalg.norm(fits[i] - fits[j]) < tolerance

    @pytest.mark.slow
    def test_likelihood_refinement_of_the_moment_fit(self, gradient_gate):
        p, L, n = 8, 64, 6
        omega = build_tridiagonal(p, 4.0, 1.0)
        at_moments, at_random = [], []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            data = sample_meta_dataset(L, [(n, L)], omega, np.eye(p), 0.5, rng)
            start = fit_mom_rgd(data, FitOptions(max_iter=500)).omega_hat
            trace = fit_mle_rgd(data, 0.5, FitOptions(init=start, max_iter=300)).objective_trace
            # Armijo steps never raise the negative log-likelihood
            assert all(after <= before for before, after in zip(trace, trace[1:]))
            at_moments.append(mle_negloglik(start, 0.5, data))
            at_random.append(mle_negloglik(random_spd(p, rng, scale=5.0), 0.5, data))
        assert np.median(at_moments) < np.median(at_random)


class TestL1Fit:

    def test_zero_penalty_matches_moment_fit(self, gradient_gate, small_dataset):
        opts = FitOptions(max_iter=100)
        np.testing.assert_array_equal(
            fit_l1_prox_rgd(small_dataset, opts).omega_hat, fit_mom_rgd(small_dataset, opts).omega_hat
        )

    def test_large_penalty_keeps_diagonal(self, gradient_gate, small_dataset):
        report = fit_l1_prox_rgd(small_dataset, FitOptions(lambda_tilde=1e6, max_iter=200))
        off = report.omega_hat - np.diag(np.diag(report.omega_hat))
        np.testing.assert_array_equal(off, 0.0)

    def test_penalized_objective_decreases(self, gradient_gate, small_dataset):
        report = fit_l1_prox_rgd(small_dataset, FitOptions(lambda_tilde=0.05, max_iter=300))
        trace = np.array(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-10 * max(1.0, trace[0]))
        assert trace[-1] == pytest.approx(l1_objective(report.omega_hat, small_dataset, 0.05), rel=1e-6)


class TestMleFit:

    def test_scalar_value_and_gradient(self):
        data = _scalar_dataset(x=1.0, y=0.0, sigma2=1.0)
        assert mle_negloglik([[1.0]], 1.0, data) == pytest.approx(0.5 * np.log(2.0))
        np.testing.assert_allclose(mle_gradient([[1.0]], 1.0, data), [[0.25]])

    def test_likelihood_decreases(self, gradient_gate, small_dataset):
        report = fit_mle_rgd(small_dataset, 0.5, FitOptions(max_iter=100))
        trace = np.array(report.objective_trace)
        assert trace[-1] < trace[0]
        assert np.all(np.diff(trace) <= 1e-8 * max(1.0, abs(trace[0])))
        assert np.linalg.eigvalsh(report.omega_hat)[0] > 0


class TestNoiseVariance:

    def test_dicker_hand_example(self):
        assert dicker_sigma2([[1.0, 0.0]], [1.0], np.eye(2)) == pytest.approx(1.5)

    def test_negative_estimate_is_kept_unless_clamped(self):
        X = np.array([[1.0], [1.0]])
        y = np.array([1.0, 1.0])
        # ((1 + 2 + 1)/6)·‖y‖² − ‖Xᵀy‖²/6
        assert dicker_sigma2(X, y, np.eye(1)) == pytest.approx(2 / 3)
        assert dicker_sigma2(X, 3 * y, np.eye(1)) == pytest.approx(6.0)
        X2 = np.array([[3.0], [3.0]])
        value = dicker_sigma2(X2, y, np.eye(1))
        assert value == pytest.approx(8 / 6 - 36 / 6)
        assert dicker_sigma2(X2, y, np.eye(1), clamp=True) == 0.0

    def test_holdout_removes_first_task(self, small_dataset):
        estimate, rest = estimate_sigma2_holdout(small_dataset, np.eye(small_dataset.p))
        assert rest.L == small_dataset.L - 1
        assert rest.sigma2 == estimate >= 0.0
        assert rest.tasks[0] is small_dataset.tasks[1]

    def test_holdout_needs_two_tasks(self):
        with pytest.raises(DimensionMismatchError):
            estimate_sigma2_holdout(_scalar_dataset(), np.eye(1))

    @pytest.mark.slow
    def test_dicker_is_unbiased(self):
        rng = np.random.default_rng(17)
        p, n = 64, 256
        data = sample_meta_dataset(200, [(n, 200)], np.eye(p), np.eye(p), 1.0, rng)
        estimates = [dicker_sigma2(t.X, t.y, np.eye(p)) for t in data.tasks]
        assert np.mean(estimates) == pytest.approx(1.0, abs=0.05)


class TestCorrelationEstimators:

    def test_left_inverse(self):
        np.testing.assert_allclose(left_inverse_apply(np.eye(2), [1.0, 2.0]), [1.0, 2.0])

    def test_left_inverse_needs_rows(self):
        with pytest.raises(SingularError):
            left_inverse_apply(np.ones((1, 2)), [1.0])

    def test_diag_weight(self):
        weight = diag_weight([Task(X=np.eye(2), y=[1.0, 2.0])])
        np.testing.assert_allclose(weight, np.diag([2.0, 8.0]))

    def test_fullrank_unit_diagonal(self):
        omega = build_tridiagonal(6, 2.0, 0.8)
        data = sample_meta_dataset(100, [(12, 100)], omega, np.eye(6), 0.0, np.random.default_rng(4))
        fit = fit_correlation_fullrank(data.tasks, 0.0)
        np.testing.assert_allclose(np.diag(fit.theta_hat), 1.0)
        np.testing.assert_allclose(np.diag(fit.omega_hat), np.diag(fit.weight))
        assert np.linalg.eigvalsh(fit.theta_hat)[0] > 0
        assert fit.report is None

    def test_fullrank_recovers_sparsity(self):
        p = 16
        omega = build_tridiagonal(p, 2.0, 0.8)
        band = np.abs(np.subtract.outer(np.arange(p), np.arange(p))) <= 1
        errors = []
        for L in (200, 800):
            data = sample_meta_dataset(L, [(32, L)], omega, np.eye(p), 0.0, np.random.default_rng(L + 1))
            tau = 3 * np.sqrt(np.log(p) / L)
            fit = fit_correlation_fullrank(data.tasks, 2 * tau / p ** 2)
            np.testing.assert_array_equal(fit.theta_hat[~band], 0.0)
            errors.append(np.linalg.norm(fit.omega_hat - omega))
        assert errors[1] < errors[0]

    def test_split_fit(self, gradient_gate):
        omega = build_tridiagonal(6, 2.0, 0.8)
        data = sample_meta_dataset(220, [(12, 20), (4, 200)], omega, np.eye(6), 0.0, np.random.default_rng(6))
        fit = fit_correlation_split(data, 20, 0.001, FitOptions(max_iter=200))
        np.testing.assert_allclose(np.diag(fit.theta_hat), 1.0)
        np.testing.assert_allclose(np.diag(fit.omega_hat), np.diag(fit.weight))
        assert np.linalg.eigvalsh(fit.omega_hat)[0] > 0
        trace = np.array(fit.report.objective_trace)
        assert trace[-1] <= trace[0]

    def test_split_needs_remaining_tasks(self, small_dataset):
        with pytest.raises(DimensionMismatchError):
            fit_correlation_split(small_dataset, small_dataset.L, 0.0)

    def test_split_rejects_rank_deficient_prefix(self, small_dataset):
        with pytest.raises(SingularError):
            fit_correlation_split(small_dataset, 1, 0.0)
