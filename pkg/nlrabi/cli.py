"""
Command line entry point.

    nlrabi [--config FILE] [--seed N] [--n-max N] [--out-dir DIR] [--jobs N] <verb> ...

Verbs: sweep, figure <preset>, spectrum, g2tau, trajectory, validate [--check NAME ...].
"""
import argparse

from pathlib import Path

from configparser import ConfigParser

from typing import List, Optional

from nlrabi.log_setup import logger_init, get_logger
from nlrabi.errors import (ConfigError, SolverError, SpectrumError, InsufficientStatisticsError,
                           UndefinedObservableError, EXIT_OK, EXIT_CONFIG_ERROR, EXIT_SOLVER_FAILURE,
                           EXIT_VALIDATION_FAILURE)
from nlrabi.presets import PRESETS, RunOutput, run_figure, sweep_run, spectrum_run, g2tau_run, trajectory_run
from nlrabi.validation import CHECKS, validate
from nlrabi.configurations.config import get_config, apply_overrides, get_int
from nlrabi.project_metadata import NAME, VERSION, DESCRIPTION

logger = get_logger(__name__)

VERBS = ('sweep', 'figure', 'spectrum', 'g2tau', 'trajectory', 'validate')
REPORT_NAME = 'report.json'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=NAME, description=DESCRIPTION)
    parser.add_argument('--version', action='version', version=f'{NAME} {VERSION}')
    parser.add_argument('--config', type=str, default=None, help="INI configuration file")
    parser.add_argument('--seed', type=int, default=None, help="trajectory seed")
    parser.add_argument('--n-max', dest='n_max', type=int, default=None, help="first Fock cutoff")
    parser.add_argument('--out-dir', dest='out_dir', type=str, default=None, help="output directory")
    parser.add_argument('--jobs', type=int, default=None, help="worker processes")

    verbs = parser.add_subparsers(dest='verb', required=True)
    verbs.add_parser('sweep', help="one-parameter sweep from the [SWEEP] section")
    figure = verbs.add_parser('figure', help="figure preset")
    figure.add_argument('preset', choices=sorted(PRESETS), help="preset name")
    verbs.add_parser('spectrum', help="emission spectrum and line assignment of [MODEL]")
    verbs.add_parser('g2tau', help="g2(tau) traces of [MODEL]")
    verbs.add_parser('trajectory', help="quantum-jump trajectories of [MODEL]")
    check = verbs.add_parser('validate', help="validation suite")
    check.add_argument('--check', dest='checks', action='append', choices=list(CHECKS), default=None,
                       help="run only this check; repeatable")
    return parser


def load_config(args: argparse.Namespace) -> ConfigParser:
    """Defaults, then the config file, then NLRABI_* variables, then flags."""
    config = get_config(config_file=args.config)
    return apply_overrides(config, {'NUMERICS': {'seed': args.seed, 'n_max': args.n_max, 'out_dir': args.out_dir,
                                                 'jobs': args.jobs}})


def _report_run(output: RunOutput) -> None:
    logger.info(f'RUN({output.name}) Outputs in {output.out_dir}: {", ".join(f.name for f in output.files)}.')


def _validate(config: ConfigParser, checks: Optional[List[str]]) -> int:
    report = validate(config, checks)
    out = Path(config.get('NUMERICS', 'out_dir')) / 'validate'
    path = report.write(out / REPORT_NAME)
    logger.info(f'RUN(validate) {len(report.checks) - len(report.failed())} of {len(report.checks)} checks passed; '
                f'report in {path}.')
    if not report.passed:
        logger.error(f'RUN(validate) Failed checks: {", ".join(report.failed())}.')
        return EXIT_VALIDATION_FAILURE
    return EXIT_OK


def dispatch(args: argparse.Namespace, config: ConfigParser) -> int:
    """
    This function runs the selected verb.

    Args:
        args: Parsed arguments.
        config: The configuration with flags applied.

    Returns:
        The exit code.
    """
    jobs = get_int(config, 'NUMERICS', 'jobs')
    if args.verb == 'validate':
        return _validate(config, args.checks)
    if args.verb == 'figure':
        output = run_figure(args.preset, config, jobs=jobs)
    elif args.verb == 'sweep':
        output = sweep_run(config, jobs=jobs)
    elif args.verb == 'spectrum':
        output = spectrum_run(config)
    elif args.verb == 'g2tau':
        output = g2tau_run(config)
    else:
        output = trajectory_run(config, jobs=jobs)
    _report_run(output)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    This function parses the command line, starts logging, runs the verb and maps failures to exit codes:
    2 for configuration errors, 3 for solver failures, 4 for failed validation.

    Args:
        argv: Arguments without the program name; sys.argv by default.

    Returns:
        The exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except (ConfigError, FileNotFoundError) as e:
        # Logging is not configured yet.
        print(f'{NAME}: {e}')
        return EXIT_CONFIG_ERROR

    logger_manager = logger_init(config_file=args.config)
    try:
        return dispatch(args, config)
    except (ConfigError, FileNotFoundError) as e:
        logger.error(f'Configuration error: {e}')
        return EXIT_CONFIG_ERROR
    except (SolverError, SpectrumError, InsufficientStatisticsError, UndefinedObservableError) as e:
        logger.error(f'{type(e).__name__}: {e}')
        return EXIT_SOLVER_FAILURE
    finally:
        logger_manager.terminate_logger()
