#!/usr/bin/env python3
"""Command-line front end: ``python -m app.main <subcommand> --config PATH``."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.benchmarks.registry import build_system
from app.core.config import settings
from app.core.exceptions import EXIT_NUMERICAL_FAILURE, EXIT_OK, PhMorException
from app.embeddings.linear_embedding import build_linear_embedding
from app.embeddings.quadratic_embedding import build_quadratic_embedding
from app.schemas.experiment import ExperimentConfig
from app.schemas.results import CheckResult
from app.services.bench import regularization_for, run_experiment, simulate_fom
from app.services.config_service import load_experiment_config
from app.services.ph_core import InputSignal, power_balance_residual
from app.services.rom import build_gmg_pod_rom
from app.utils.csv_io import export_tables, trajectory_table, write_csv

# Configure logging
logger = logging.getLogger(__name__)


def _output_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    return Path(args.out) if args.out else Path(config.output.directory or settings.DEFAULT_OUTPUT_DIR)


def cmd_simulate_fom(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    sys_ = build_system(config.model)
    u = InputSignal.from_section(config.input, sys_.m)
    traj = simulate_fom(sys_, u, config.time.grid(), config.newton)
    header, body = trajectory_table(traj.times, traj.states, traj.outputs)
    path = write_csv(header, body, _output_dir(args, config) / f"{config.output.prefix}trajectory.csv")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_run_experiment(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    result = run_experiment(config, jobs=args.jobs)
    out = _output_dir(args, config)
    prefix = config.output.prefix
    for name, (header, body) in (("errors", result.error_table()),
                                 ("energy", result.energy_table(list(config.rom.methods)))):
        path = write_csv(header, body, out / f"{prefix}{name}.csv")
        print(f"wrote {path}")
    failed = [row for row in result.rows if row.failed]
    for row in failed:
        print(f"failed {row.method} r={row.r}: {row.failure}")
    return EXIT_OK


def cmd_export_embedding(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    r = args.r if args.r is not None else config.rom.energy_r
    sys_ = build_system(config.model)
    u = InputSignal.from_section(config.input, sys_.m)
    traj = simulate_fom(sys_, u, config.time.grid(), config.newton)
    X = traj.states
    out = _output_dir(args, config)
    prefix = f"{config.output.prefix}r{r}_"

    linear = build_linear_embedding(X, sys_.B, r)
    paths = export_tables(linear.to_tables(), out, prefix=f"{prefix}gmg_pod_")
    rom = build_gmg_pod_rom(sys_, linear, deim=None)
    paths += export_tables(rom.operator_tables(), out, prefix=f"{prefix}gmg_pod_")

    lambda_reg = regularization_for(config.rom, X, sys_.B, r)
    quadratic = build_quadratic_embedding(X, sys_.B, r, config.rom.r_n, lambda_reg)
    paths += export_tables(quadratic.to_tables(), out, prefix=f"{prefix}gmg_qm_")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _power_balance_checks(sys_, rng: np.random.Generator, samples: int) -> List[CheckResult]:
    worst = 0.0
    for _ in range(samples):
        x = sys_.H.x_e + 0.5 * rng.standard_normal(sys_.N)
        u = rng.standard_normal(sys_.m)
        g = sys_.gradient(x)
        scale = abs(sys_.output(x) @ u) + abs(sys_.rhs(x, u) @ g) + abs(sys_.dissipation_rate(x)) + 1e-300
        worst = max(worst, abs(power_balance_residual(sys_, x, u)) / scale)
    return [CheckResult(name=f"power balance at {samples} random states", passed=worst <= 1e-10,
                        value=worst, tolerance=1e-10)]


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    sys_ = build_system(config.model)
    rng = np.random.default_rng(args.seed)
    checks = sys_.structure_checks(rng) + _power_balance_checks(sys_, rng, args.samples)
    for check in checks:
        print(check.describe())
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed")
        return EXIT_NUMERICAL_FAILURE
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phmor",
        description="Structure-preserving model reduction of port-Hamiltonian systems",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser):
        sub.add_argument('--config', required=True, help='Experiment config (JSON)')
        sub.add_argument('--out', default=None, help='Output directory (default: from config)')
        sub.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS, help='Parallel sweep cells')
        sub.add_argument('--seed', type=int, default=0, help='Seed for randomized self-checks')

    add_common(subparsers.add_parser('simulate-fom', help='Simulate the full-order model and write trajectory.csv'))
    add_common(subparsers.add_parser('run-experiment', help='Run the method/order sweep and write errors.csv, energy.csv'))
    export = subparsers.add_parser('export-embedding', help='Write embedding matrices and reduced operators')
    add_common(export)
    export.add_argument('--r', type=int, default=None, help='Reduced order (default: rom.energy_r)')
    validate = subparsers.add_parser('validate', help='Run structural checks on the configured model')
    add_common(validate)
    validate.add_argument('--samples', type=int, default=settings.STRUCTURE_CHECK_SAMPLES,
                          help='Random states for the power balance check')
    return parser


COMMANDS = {
    "simulate-fom": cmd_simulate_fom,
    "run-experiment": cmd_run_experiment,
    "export-embedding": cmd_export_embedding,
    "validate": cmd_validate,
}


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map failures to exit codes

    Returns:
        0 on success, 1 for config errors, 2 for numerical failures, 3 for I/O errors
    """
    logging.basicConfig(level=settings.LOG_LEVEL, format=settings.LOG_FORMAT)
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PhMorException as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"error: {str(e)}", file=sys.stderr)
        return e.exit_code


def main():
    sys.exit(run_cli())


if __name__ == '__main__':
    main()
