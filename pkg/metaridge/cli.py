"""
Command-line interface: ``python -m metaridge <command>``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np

from config.settings import settings
from .core.estimators import (
    MomentStatistics,
    estimate_sigma2_holdout,
    fit_correlation_fullrank,
    fit_correlation_split,
    fit_l1_prox_rgd,
    fit_mle_rgd,
    fit_mom_rgd,
    gradient_check,
    mle_gradient,
    mle_negloglik,
)
from .core.random_effects import sample_meta_dataset
from .core.spd import random_spd
from .exceptions import NUMERICAL_ERRORS, ConfigError, MetaRidgeError
from .models.config import C_SWEEP_GRID, PRESETS, ExperimentConfig
from .models.domain import FitOptions
from .models.results import C_SWEEP_COLUMNS, RISK_CURVE_COLUMNS
from .services.experiment_service import ExperimentService
from .services.io_service import emit, load_config, read_task_archive, resolve_preset, write_matrix, write_table
from .utils.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

GRADIENT_GATE = 1e-5


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_config_source(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="Experiment config file (key = value lines)")
    source.add_argument("--preset", choices=sorted(PRESETS), help="Named preset")


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    return load_config(args.config) if args.config else resolve_preset(args.preset)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaridge",
        # otherwise "--l" of gradcheck reads as an abbreviation of --log-level
        allow_abbrev=False,
        description="Hyper-covariance estimation and predictive-risk evaluation for meta-learned generalized ridge",
    )
    parser.add_argument("--log-level", default=None, help="Override METARIDGE_LOG_LEVEL")
    parser.add_argument("--log-format", choices=["text", "json"], default=None, help="Override METARIDGE_LOG_FORMAT")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="Run the simulation harness and write summary rows")
    _add_config_source(p_sim)
    p_sim.add_argument("--out", default=None, help="Output file (stdout when omitted)")
    p_sim.add_argument("--format", choices=["csv", "json"], default="csv")

    p_curve = sub.add_parser("risk-curve", help="Limiting risk over an evenly spaced λ grid")
    _add_config_source(p_curve)
    p_curve.add_argument("--lambda-min", type=float, required=True)
    p_curve.add_argument("--lambda-max", type=float, required=True)
    p_curve.add_argument("--points", type=int, default=40)
    p_curve.add_argument("--out", default=None)
    p_curve.add_argument("--format", choices=["csv", "json"], default="csv")

    p_sweep = sub.add_parser("c-sweep", help="Risk of the estimated weight at λ = c·pσ²/n_new")
    _add_config_source(p_sweep)
    p_sweep.add_argument("--c-grid", type=_float_list, default=None,
                         help="Comma-separated multipliers (default 0.8,0.85,...,1.2)")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--format", choices=["csv", "json"], default="csv")

    p_est = sub.add_parser("estimate", help="Estimate Ω̂ from a task archive and write it as a text matrix")
    p_est.add_argument("--tasks", required=True, help="Task archive: 'p L', then per task 'n' and n rows of x, y")
    p_est.add_argument("--method", choices=["mom", "mom-l1", "mle", "corr"], default="mom")
    p_est.add_argument("--sigma2", default="0",
                       help="Noise variance, or 'dicker' to estimate it on the first task (Σ = I)")
    p_est.add_argument("--lambda-tilde", type=float, default=0.0, help="Off-diagonal L1 weight")
    p_est.add_argument("--full-rank-count", type=int, default=None,
                       help="Leading full-rank tasks for the diagonal weight (corr); all tasks when omitted")
    p_est.add_argument("--max-iter", type=int, default=settings.MAX_ITER)
    p_est.add_argument("--out", default=None)

    p_grad = sub.add_parser("gradcheck", help="Finite-difference check of the MoM and MLE gradients")
    p_grad.add_argument("--p", type=int, default=8)
    p_grad.add_argument("--l", type=int, default=4)
    p_grad.add_argument("--n", type=int, default=None, help="Task size (default p // 2 + 1)")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--directions", type=int, default=20)

    p_serve = sub.add_parser("serve", help="Run the HTTP service")
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--reload", action="store_true")

    sub.add_parser("presets", help="List named presets")
    return parser


# Commands

def cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    result = ExperimentService().run_experiment(config)
    emit(result, fmt=args.format, path=args.out)
    for failure in result.failures:
        logger.warning("Recorded failure", extra=failure.model_dump())
    if not result.rows and result.failures:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_risk_curve(args: argparse.Namespace) -> int:
    if args.lambda_min <= 0 or args.lambda_max <= args.lambda_min or args.points < 1:
        raise ConfigError("need 0 < lambda-min < lambda-max and points ≥ 1")
    config = _resolve_config(args)
    grid = np.linspace(args.lambda_min, args.lambda_max, args.points)
    points = ExperimentService().risk_curve(config, grid)
    write_table(points, RISK_CURVE_COLUMNS, fmt=args.format, path=args.out)
    return EXIT_OK if any(point.error is None for point in points) else EXIT_NUMERICAL


def cmd_c_sweep(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    rows = ExperimentService().c_sweep(config, args.c_grid or C_SWEEP_GRID)
    write_table(rows, C_SWEEP_COLUMNS, fmt=args.format, path=args.out)
    return EXIT_OK if rows else EXIT_NUMERICAL


def _parse_sigma2(text: str):
    if text == "dicker":
        return text
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(f"--sigma2 must be a number or 'dicker', got {text!r}") from exc
    if value < 0:
        raise ConfigError(f"--sigma2 must be non-negative, got {value}")
    return value


def cmd_estimate(args: argparse.Namespace) -> int:
    sigma2 = _parse_sigma2(args.sigma2)
    data = read_task_archive(args.tasks)
    if sigma2 == "dicker":
        sigma2, data = estimate_sigma2_holdout(data, np.eye(data.p))
        logger.info("Estimated noise variance", extra={"sigma2_hat": sigma2})
    data = data.with_sigma2(sigma2)
    opts = FitOptions(max_iter=args.max_iter, grad_tol=settings.GRAD_TOL, lambda_tilde=args.lambda_tilde,
                      eig_floor=settings.EIG_FLOOR)

    if args.method == "mom":
        report = fit_mom_rgd(data, opts)
        omega_hat = report.omega_hat
    elif args.method == "mom-l1":
        report = fit_l1_prox_rgd(data, opts)
        omega_hat = report.omega_hat
    elif args.method == "mle":
        report = fit_mle_rgd(data, sigma2, opts)
        omega_hat = report.omega_hat
    else:
        if args.full_rank_count is None or args.full_rank_count >= data.L:
            fit = fit_correlation_fullrank(data.tasks, args.lambda_tilde)
        else:
            fit = fit_correlation_split(data, args.full_rank_count, args.lambda_tilde, opts)
        omega_hat, report = fit.omega_hat, fit.report

    if report is not None:
        logger.info(
            "Estimate finished",
            extra={"method": args.method, "iterations": report.iterations,
                   "final_grad_norm": report.final_grad_norm, "converged": report.converged},
        )
    write_matrix(omega_hat, path=args.out)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    if args.p < 1 or args.l < 1:
        raise ConfigError("--p and --l must be positive")
    n = args.n or args.p // 2 + 1
    rng = np.random.default_rng(args.seed)
    omega = random_spd(args.p, rng)
    data = sample_meta_dataset(args.l, [(n, args.l)], omega, np.eye(args.p), 1.0, rng)
    base = random_spd(args.p, rng)

    stats = MomentStatistics.from_dataset(data)

    def mle_value(O):
        return mle_negloglik(O, data.sigma2, data)

    def mle_grad(O):
        return mle_gradient(O, data.sigma2, data)

    errors = {
        "mom": float(np.max(gradient_check(stats.value, stats.gradient, base, rng, args.directions))),
        "mle": float(np.max(gradient_check(mle_value, mle_grad, base, rng, args.directions))),
    }
    for name, error in errors.items():
        print(f"{name} max_relative_error {error:.3e}")
    return EXIT_OK if max(errors.values()) < GRADIENT_GATE else EXIT_NUMERICAL


def cmd_serve(args: argparse.Namespace) -> int:
    from .main import run_server

    run_server(host=args.host, port=args.port, reload=args.reload)
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        preset = PRESETS[name]
        print(f"{name}\tp={preset['p']}\tL={preset['L']}\truns={preset.get('runs', 50)}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "risk-curve": cmd_risk_curve,
    "c-sweep": cmd_c_sweep,
    "estimate": cmd_estimate,
    "gradcheck": cmd_gradcheck,
    "serve": cmd_serve,
    "presets": cmd_presets,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, args.log_format)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}")
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        logger.error(f"Numerical failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL
    except (MetaRidgeError, ValueError, OSError) as exc:
        logger.error(f"Invalid input: {type(exc).__name__}: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
