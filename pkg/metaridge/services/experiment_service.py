"""
Simulation harness: data generation, Ω̂ estimation, new-task prediction and
risk comparison, plus the surrogate limiting risk and the λ / c sweeps.

Runs are independent. Each one draws from counter-based child streams of the
master seed keyed by (run, stream, sub-index), so the data of a run does not
depend on the estimator, on the number of runs or on thread scheduling.
"""

import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from ..core.asymptotics import (
    PointMass,
    analytic_limiting_risk,
    fixed_point_stieltjes,
    limiting_risk,
    limiting_risk_from_transform,
    mp_law_risk,
    spectral_law_for,
    stieltjes_from_eigs,
)
from ..core.estimators import (
    MomentStatistics,
    estimate_sigma2_holdout,
    fit_correlation_fullrank,
    fit_correlation_split,
    fit_l1_prox_rgd,
    fit_mle_rgd,
    fit_mom_rgd,
    generalized_ridge,
)
from ..core.random_effects import (
    realize_omega,
    realize_sigma,
    sample_design,
    sample_meta_dataset,
    sample_task,
)
from ..core.risk import empirical_risk, plugin_risk_exact
from ..core.spd import random_spd, spd_sqrt, symmetrize
from ..exceptions import NUMERICAL_ERRORS, ConfigError, NonPositiveLambdaError
from ..models.config import (
    CorrelationFullRankEstimator,
    CorrelationSplitEstimator,
    ExperimentConfig,
    ExplicitOmega,
    ExplicitSigma,
    IdentityEstimator,
    MleEstimator,
    MomL1Estimator,
    MomOutputInit,
    MomRgdEstimator,
    OracleOmegaEstimator,
    RandomSpdInit,
)
from ..models.domain import FitOptions, MetaDataset, Task
from ..models.results import (
    CSweepRow,
    ExperimentResult,
    RiskCurvePoint,
    RunFailure,
    SummaryRow,
    difference_percentage,
)
from ..utils.metrics import metrics_manager

logger = logging.getLogger(__name__)

# child-stream identifiers
TRAIN, TEST, EVAL, INIT, SURROGATE = range(5)

# an estimated σ̂² of zero gives λ = 0 in the scaled rule
EVALUATION_ERRORS = NUMERICAL_ERRORS + (NonPositiveLambdaError,)


def child_rng(seed: int, run: int, stream: int, sub: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run, stream, sub)))


def design_hash(X: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(X, dtype=float).tobytes()).hexdigest()


def surrogate_dimensions(p: int, n_new: int, min_dim: int) -> Tuple[int, int]:
    """Smallest (p̃, ñ) with p̃/ñ = p/n_new exactly and p̃ ≥ min_dim."""
    g = math.gcd(p, n_new)
    base_p, base_n = p // g, n_new // g
    k = max(1, -(-min_dim // base_p))
    p_sur, n_sur = k * base_p, k * base_n
    if Fraction(p_sur, n_sur) != Fraction(p, n_new):
        raise ConfigError(f"surrogate ratio {p_sur}/{n_sur} differs from {p}/{n_new}")
    return p_sur, n_sur


@dataclass
class _Setup:
    omega: np.ndarray
    sigma_train: np.ndarray
    sigma_test: np.ndarray
    sigma_test_root: np.ndarray
    omega_root: np.ndarray


@dataclass
class _RunState:
    """Everything a run needs to evaluate risks for any λ."""
    run: int
    omega_hat: np.ndarray
    sigma2: float
    frob_err: float
    tests: List[Task] = field(default_factory=list)
    hashes: List[str] = field(default_factory=list)


class ExperimentService:
    """Runs simulation studies described by an ExperimentConfig."""

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.THREADS

    # setup

    def _setup(self, config: ExperimentConfig) -> _Setup:
        omega = realize_omega(config.omega, config.p)
        sigma_train = realize_sigma(config.sigma_train, omega)
        sigma_test = realize_sigma(config.sigma_test, omega)
        return _Setup(omega, sigma_train, sigma_test, spd_sqrt(sigma_test), spd_sqrt(omega))

    def _fit_options(self, config: ExperimentConfig, run: int, data: MetaDataset) -> FitOptions:
        init = None
        if isinstance(config.init, RandomSpdInit):
            rng = np.random.default_rng(np.random.SeedSequence(config.init.seed, spawn_key=(run, INIT)))
            init = random_spd(config.p, rng)
        elif isinstance(config.init, MomOutputInit):
            init = fit_mom_rgd(data, FitOptions(max_iter=config.fit_max_iter, grad_tol=config.fit_grad_tol)).omega_hat
        return FitOptions(
            init=init,
            max_iter=config.fit_max_iter,
            grad_tol=config.fit_grad_tol,
            lambda_tilde=config.lambda_tilde,
            eig_floor=settings.EIG_FLOOR,
        )

    def _estimate_omega(self, config: ExperimentConfig, run: int, data: MetaDataset, setup: _Setup) -> np.ndarray:
        estimator = config.estimator
        if isinstance(estimator, OracleOmegaEstimator):
            return setup.omega
        if isinstance(estimator, IdentityEstimator):
            return np.eye(config.p)

        label = estimator.kind
        started = time.perf_counter()
        iterations = 0
        try:
            if isinstance(estimator, CorrelationFullRankEstimator):
                omega_hat = fit_correlation_fullrank(data.tasks, config.lambda_tilde).omega_hat
            elif isinstance(estimator, CorrelationSplitEstimator):
                fit = fit_correlation_split(
                    data, estimator.full_rank_count, config.lambda_tilde, self._fit_options(config, run, data)
                )
                omega_hat, iterations = fit.omega_hat, fit.report.iterations
            else:
                opts = self._fit_options(config, run, data)
                if isinstance(estimator, MomRgdEstimator):
                    report = fit_mom_rgd(MomentStatistics.from_dataset(data), opts)
                elif isinstance(estimator, MomL1Estimator):
                    report = fit_l1_prox_rgd(MomentStatistics.from_dataset(data), opts)
                elif isinstance(estimator, MleEstimator):
                    report = fit_mle_rgd(data, data.sigma2, opts)
                else:
                    raise ConfigError(f"unsupported estimator {label!r}")
                omega_hat, iterations = report.omega_hat, report.iterations
        except NUMERICAL_ERRORS:
            metrics_manager.record_fit(label, time.perf_counter() - started, success=False)
            raise
        metrics_manager.record_fit(label, time.perf_counter() - started, iterations)
        return omega_hat

    # runs

    def _prepare_run(self, config: ExperimentConfig, run: int, setup: _Setup) -> _RunState:
        data = sample_meta_dataset(
            config.L, config.n_schedule, setup.omega, setup.sigma_train, config.sigma2,
            child_rng(config.seed, run, TRAIN), config.entry_law,
        )
        sigma2 = config.sigma2
        if config.sigma2_mode == "dicker":
            sigma2, data = estimate_sigma2_holdout(data, setup.sigma_train)

        omega_hat = self._estimate_omega(config, run, data, setup)
        state = _RunState(
            run=run,
            omega_hat=omega_hat,
            sigma2=sigma2,
            frob_err=float(np.linalg.norm(omega_hat - setup.omega)),
        )
        for k, n_new in enumerate(config.n_new):
            task = sample_task(
                setup.omega, setup.sigma_test, config.sigma2, n_new, child_rng(config.seed, run, TEST, k),
                config.entry_law, setup.omega_root, setup.sigma_test_root,
            )
            state.tests.append(task)
            state.hashes.append(design_hash(task.X))
        return state

    def _evaluate(self, config: ExperimentConfig, setup: _Setup, state: _RunState, k: int,
                  lam: float) -> Dict[str, Optional[float]]:
        task = state.tests[k]
        beta_identity = generalized_ridge(task.X, task.y, lam, np.eye(config.p), "identity").beta
        beta_estimated = generalized_ridge(task.X, task.y, lam, state.omega_hat, config.estimator.kind).beta

        out: Dict[str, Optional[float]] = {}
        if config.risk_mode in ("empirical", "both"):
            # common random numbers: both fits see the same test draws
            out["identity"] = empirical_risk(
                beta_identity, task.beta_true, setup.sigma_test, config.sigma2, config.m_test,
                child_rng(config.seed, state.run, EVAL, k), setup.sigma_test_root,
            )
            out["estimated"] = empirical_risk(
                beta_estimated, task.beta_true, setup.sigma_test, config.sigma2, config.m_test,
                child_rng(config.seed, state.run, EVAL, k), setup.sigma_test_root,
            )
        if config.risk_mode in ("exact", "both"):
            sigma_hat = symmetrize(task.X.T @ task.X / task.n)
            exact_identity = plugin_risk_exact(
                setup.omega, np.eye(config.p), setup.sigma_test, sigma_hat, config.sigma2, lam, task.n
            ).total
            exact_estimated = plugin_risk_exact(
                setup.omega, state.omega_hat, setup.sigma_test, sigma_hat, config.sigma2, lam, task.n
            ).total
            if config.risk_mode == "exact":
                out["identity"], out["estimated"] = exact_identity, exact_estimated
            else:
                out["identity_exact"], out["estimated_exact"] = exact_identity, exact_estimated
        return out

    def _execute(self, config: ExperimentConfig, setup: _Setup, run: int):
        """Prepare one run and evaluate it at the configured λ; never raises numerical errors."""
        try:
            state = self._prepare_run(config, run, setup)
        except NUMERICAL_ERRORS as exc:
            logger.warning(
                "Run failed",
                extra={"experiment": config.name, "run": run, "error_type": type(exc).__name__, "error": str(exc)},
            )
            metrics_manager.record_run(config.estimator.kind, "failed")
            return None, [RunFailure(run=run, error_type=type(exc).__name__, message=str(exc))], []

        evaluations: List[Optional[Dict[str, Optional[float]]]] = []
        failures: List[RunFailure] = []
        for k, n_new in enumerate(config.n_new):
            lam = config.lambda_rule.resolve(config.p, n_new, state.sigma2)
            try:
                values = self._evaluate(config, setup, state, k, lam)
            except EVALUATION_ERRORS as exc:
                evaluations.append(None)
                failures.append(RunFailure(run=run, n_new=n_new, error_type=type(exc).__name__, message=str(exc)))
            else:
                values["lambda"] = lam
                evaluations.append(values)
        metrics_manager.record_run(config.estimator.kind, "failed" if failures else "ok")
        return (state, evaluations), failures, state.hashes

    def _map_runs(self, fn, runs: int) -> list:
        if self.threads <= 1 or runs <= 1:
            return [fn(run) for run in range(runs)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, range(runs)))

    def limit_for(self, config: ExperimentConfig, n_new: int, lam: float) -> float:
        """Limiting risk at (λ, γ = p/n_new) by surrogate simulation or analytically."""
        if config.limit_mode == "surrogate":
            return self.surrogate_limiting_risk(config, lam, n_new)
        gamma = config.p / n_new
        risk, _ = analytic_limiting_risk(spectral_law_for(config), lam, gamma, config.sigma2)
        return risk

    def run_experiment(self, config: ExperimentConfig) -> ExperimentResult:
        """Algorithm loop: simulate every run, then average risks per n_new over successful runs."""
        started = time.perf_counter()
        setup = self._setup(config)
        logger.info(
            "Starting experiment",
            extra={"experiment": config.name, "runs": config.runs, "estimator": config.estimator.kind,
                   "p": config.p, "L": config.L, "threads": self.threads},
        )
        outcomes = self._map_runs(lambda run: self._execute(config, setup, run), config.runs)

        result = ExperimentResult()
        for run, (payload, failures, hashes) in enumerate(outcomes):
            result.failures.extend(failures)
            if hashes:
                result.design_hashes[run] = hashes

        for k, n_new in enumerate(config.n_new):
            collected: Dict[str, List[float]] = {}
            frob: List[float] = []
            for payload, _, _ in outcomes:
                if payload is None:
                    continue
                state, evaluations = payload
                if evaluations[k] is None:
                    continue
                for key, value in evaluations[k].items():
                    collected.setdefault(key, []).append(value)
                frob.append(state.frob_err)
            run_count = len(frob)
            if run_count == 0:
                logger.warning("No successful runs", extra={"experiment": config.name, "n_new": n_new})
                continue
            # the limit is taken at the λ the runs used; with σ̂² that is their mean λ̂
            risk_limit = self.limit_for(config, n_new, float(np.mean(collected["lambda"])))
            risk_estimated = float(np.mean(collected["estimated"]))
            row = SummaryRow(
                n_new=n_new,
                risk_identity=float(np.mean(collected["identity"])),
                risk_estimated=risk_estimated,
                risk_limit=risk_limit,
                diff_pct=difference_percentage(risk_estimated, risk_limit),
                frob_err=float(np.mean(frob)),
                run_count=run_count,
                seed=config.seed,
                risk_identity_exact=_mean_or_none(collected.get("identity_exact")),
                risk_estimated_exact=_mean_or_none(collected.get("estimated_exact")),
            )
            result.rows.append(row)
            logger.info(
                "Summary row",
                extra={"experiment": config.name, "n_new": n_new, "risk_estimated": row.risk_estimated,
                       "risk_limit": row.risk_limit, "diff_pct": row.diff_pct, "run_count": run_count},
            )

        logger.info(
            "Experiment finished",
            extra={"experiment": config.name, "failures": len(result.failures),
                   "elapsed": time.perf_counter() - started},
        )
        return result

    # limits and sweeps

    def surrogate_limiting_risk(self, config: ExperimentConfig, lam: float, n_new: Optional[int] = None,
                                replicate: int = 0) -> float:
        """Limiting risk estimated from one large surrogate draw with the same aspect ratio.

        The eigenvalues of Ω̃^{1/2}Σ̂Ω̃^{1/2} at the surrogate size give ŝ and ŝ′.
        """
        n_new = n_new or config.n_new[0]
        if config.surrogate_dims is not None:
            p_sur, n_sur = config.surrogate_dims
        elif isinstance(config.omega, ExplicitOmega) or isinstance(config.sigma_test, ExplicitSigma):
            p_sur, n_sur = config.p, n_new
        else:
            min_dim = config.surrogate_min_dim or settings.SURROGATE_MIN_DIM
            p_sur, n_sur = surrogate_dimensions(config.p, n_new, min_dim)
        if Fraction(p_sur, n_sur) != Fraction(config.p, n_new):
            raise ConfigError(f"surrogate ratio {p_sur}/{n_sur} must equal {config.p}/{n_new}")

        omega = realize_omega(config.omega, p_sur)
        sigma = realize_sigma(config.sigma_test, omega)
        rng = child_rng(config.seed, replicate, SURROGATE, n_new)
        X = sample_design(spd_sqrt(sigma), n_sur, rng, config.entry_law)
        root = spd_sqrt(omega)
        sample = symmetrize(root @ (X.T @ X / n_sur) @ root)
        s, s_prime = stieltjes_from_eigs(np.linalg.eigvalsh(sample), lam)
        risk = limiting_risk_from_transform(s, s_prime, lam, p_sur / n_sur, config.sigma2)
        logger.debug("Surrogate limiting risk", extra={"p_sur": p_sur, "n_sur": n_sur, "lambda": lam, "risk": risk})
        return risk

    def risk_curve(self, config: ExperimentConfig, lambda_grid: Sequence[float]) -> List[RiskCurvePoint]:
        """Limiting risk over a λ grid for every configured n_new.

        Point-mass laws use the closed form; other laws use the fixed-point solver.
        Solver failures are reported in the row instead of aborting the curve.
        """
        grid = [float(x) for x in lambda_grid]
        if not grid or any(x <= 0 for x in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("λ grid must be positive and strictly ascending")
        law = spectral_law_for(config)
        points: List[RiskCurvePoint] = []
        for n_new in config.n_new:
            gamma = config.p / n_new
            for lam in grid:
                try:
                    if isinstance(law, PointMass):
                        points.append(RiskCurvePoint(
                            lam=lam, n_new=n_new, gamma=gamma,
                            risk=mp_law_risk(lam, gamma, config.sigma2, law.value), iterations=0, residual=0.0,
                        ))
                    else:
                        evaluation = fixed_point_stieltjes(law, gamma, lam)
                        points.append(RiskCurvePoint(
                            lam=lam, n_new=n_new, gamma=gamma, risk=limiting_risk(evaluation, config.sigma2),
                            iterations=evaluation.iterations, residual=evaluation.residual,
                        ))
                except NUMERICAL_ERRORS as exc:
                    logger.warning("Risk curve point failed", extra={"lambda": lam, "n_new": n_new, "error": str(exc)})
                    points.append(RiskCurvePoint(lam=lam, n_new=n_new, gamma=gamma,
                                                 error=f"{type(exc).__name__}: {exc}"))
        return points

    def c_sweep(self, config: ExperimentConfig, c_grid: Sequence[float]) -> List[CSweepRow]:
        """Risk of the estimated weight at λ = c·pσ²/n_new for each c, reusing one fit per run.

        Each run uses its own noise variance, so with estimated σ̂² the row reports the mean λ of its runs.
        """
        grid = [float(c) for c in c_grid]
        if not grid or any(c <= 0 for c in grid):
            raise ConfigError("c grid must be positive")
        setup = self._setup(config)

        def prepare(run: int):
            try:
                return self._prepare_run(config, run, setup)
            except NUMERICAL_ERRORS as exc:
                logger.warning("Run failed", extra={"run": run, "error": str(exc)})
                return None

        states = [s for s in self._map_runs(prepare, config.runs) if s is not None]
        rows: List[CSweepRow] = []
        for c in grid:
            for k, n_new in enumerate(config.n_new):
                estimated: List[float] = []
                exact: List[float] = []
                lams: List[float] = []
                for state in states:
                    lam = c * config.p * state.sigma2 / n_new
                    try:
                        values = self._evaluate(config, setup, state, k, lam)
                    except EVALUATION_ERRORS:
                        continue
                    lams.append(lam)
                    estimated.append(values["estimated"])
                    if "estimated_exact" in values:
                        exact.append(values["estimated_exact"])
                if not estimated:
                    continue
                rows.append(CSweepRow(
                    c=c,
                    n_new=n_new,
                    lam=float(np.mean(lams)),
                    risk_estimated=float(np.mean(estimated)),
                    risk_estimated_exact=_mean_or_none(exact),
                    run_count=len(estimated),
                ))
        return rows


def _mean_or_none(values: Optional[List[float]]) -> Optional[float]:
    if not values:
        return None
    return float(np.mean(values))


# Global experiment service instance
experiment_service = ExperimentService()
