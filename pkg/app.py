"""
Quantized Power Codebook Designer - command-line entry point
Designs, sweeps, verifies and evaluates quantized transmit-power codebooks
"""

import argparse
import dataclasses
import logging
import sys

from config import get_config
from quantpower import (
    ConfigurationError,
    ConvergenceError,
    InfeasibleConstraintError,
    QuantPowerError,
    ResultsHandler,
    RootNotFoundError,
    load_codebook,
    load_config,
)
from quantpower.experiment import (
    METHODS,
    STATUS_OK,
    evaluate_codebook,
    run_boundaries,
    run_sweep,
    sample_sets,
    solve_point,
    verify_codebook,
)
from quantpower.results_handler import to_bits

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="app.py",
        description="Quantized power codebook design for spectrum sharing with limited feedback",
    )
    parser.add_argument(
        "command",
        choices=list(METHODS) + ["sweep", "boundaries", "verify", "evaluate"],
        help="Solver to run, or sweep / boundaries / verify / evaluate",
    )
    parser.add_argument("codebook", nargs="?", help="Codebook JSON file (verify and evaluate)")
    parser.add_argument("--config", help="Experiment JSON file")
    parser.add_argument("--out", default="results", help="Output directory (default: results)")
    parser.add_argument("--seed", type=int, help="Training seed override (evaluation uses seed + 1)")
    parser.add_argument("--workers", type=int, help="Worker processes for sweeps")
    parser.add_argument("--bits-capacity", action="store_true", help="Report capacity in bits instead of nats")
    parser.add_argument("--xlsx", action="store_true", help="Also write results.xlsx")
    parser.add_argument("--profile", choices=["full", "quick"], help="Configuration profile (default: QP_PROFILE)")
    return parser


def _experiment(args, cfg):
    if not args.config:
        raise ConfigurationError(f"'{args.command}' needs --config", field="config")
    experiment = load_config(args.config, cfg)
    if args.seed is not None:
        experiment = dataclasses.replace(experiment, seed=args.seed, eval_seed=args.seed + 1)
    return experiment


def cmd_solve(args, cfg):
    """Single design at the config's P_avg_dB and B"""
    experiment = _experiment(args, cfg)
    training, evaluation = sample_sets(experiment)
    result = solve_point(
        experiment, experiment.P_avg_dB, args.command, experiment.B, training, evaluation, strict=True
    )
    handler = ResultsHandler(args.out)
    handler.write_sweep_csv([result.row], experiment.M, args.bits_capacity)
    handler.write_codebook(result.payload)
    row = to_bits(result.row) if args.bits_capacity else result.row
    unit = "bits" if args.bits_capacity else "nats"
    mu = ", ".join(f"{m:.6g}" for m in result.payload["mu"])
    mu_prime = ", ".join(f"{m:.6g}" for m in result.payload["mu_prime"])
    print(
        f"{args.command}: capacity={row[f'capacity_{unit}']:.6g} {unit} "
        f"(se {row['capacity_se']:.2g}), ATP={row['ATP']:.6g}, lambda={row['lambda']:.6g}, "
        f"mu (= mu'/M)=[{mu}], mu'=[{mu_prime}]"
    )
    if result.row["status"] != STATUS_OK:
        raise ConvergenceError(f"{args.command} did not converge: {result.payload.get('diagnostics')}")
    return EXIT_OK


def cmd_sweep(args, cfg):
    experiment = _experiment(args, cfg)
    workers = args.workers if args.workers is not None else cfg.WORKERS
    results = run_sweep(experiment, workers)
    handler = ResultsHandler(args.out)
    rows = [r.row for r in results]
    handler.write_sweep_csv(rows, experiment.M, args.bits_capacity)
    if args.xlsx:
        handler.write_sweep_xlsx(rows, experiment.M, args.bits_capacity)
    for result in results:
        if not result.row["status"].startswith("error"):
            handler.write_codebook(result.payload)
    failed = [r for r in rows if r["status"] != STATUS_OK]
    print(f"sweep: {len(rows)} rows written to {args.out} ({len(failed)} not ok)")
    return EXIT_OK


def cmd_boundaries(args, cfg):
    experiment = _experiment(args, cfg)
    rows = run_boundaries(experiment)
    out = ResultsHandler(args.out).write_boundaries_csv(rows)
    print(f"boundaries: {len(rows)} points written to {out}")
    return EXIT_OK


def _codebook_arg(args):
    if not args.codebook:
        raise ConfigurationError(f"'{args.command}' needs a codebook file", field="codebook")
    return load_codebook(args.codebook)


def cmd_verify(args, cfg):
    reports = verify_codebook(_codebook_arg(args))
    passed = True
    for band, report in enumerate(reports, start=1):
        if report.passed:
            print(f"✓ band {band}: all codebook properties hold")
        else:
            passed = False
            for violation in report.violations:
                print(f"✗ band {band}: {violation}")
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_evaluate(args, cfg):
    payload = _codebook_arg(args)
    estimate = evaluate_codebook(payload, cfg)
    if args.bits_capacity:
        estimate = estimate.in_bits()
    unit = "bits" if args.bits_capacity else "nats"
    print(f"evaluate: capacity={estimate.value:.10g} {unit} (se {estimate.std_error:.2g}, N={estimate.n_samples})")
    return EXIT_OK


COMMANDS = {
    "sweep": cmd_sweep,
    "boundaries": cmd_boundaries,
    "verify": cmd_verify,
    "evaluate": cmd_evaluate,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = get_config(args.profile)

    # Configure logging
    logging.basicConfig(
        level=getattr(logging, cfg.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    handler = COMMANDS.get(args.command, cmd_solve)
    try:
        return handler(args, cfg)
    except ConfigurationError as e:
        logger.error(f"Configuration error{f' ({e.field})' if e.field else ''}: {str(e)}")
        return EXIT_CONFIG
    except (ConvergenceError, InfeasibleConstraintError, RootNotFoundError) as e:
        logger.error(f"Solver error: {str(e)}")
        return EXIT_SOLVER
    except QuantPowerError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
