"""
Command-line front end.

Every workflow reads one JSON config (``--config``); flags override its
keys. Exit codes: 0 success, 1 validation failure, 2 numerical divergence,
3 configuration or budget error. Diagnostics go to stderr, the result
summary to stdout.
"""

import argparse
import json
import sys
from typing import List, Optional

from config import ConfigError, LoggingConfig, RunConfig, setup_logging, get_logger
from errors import BudgetExceededError, NumericalError, ValidationError
from experiment import WORKFLOWS, ExperimentRunner

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='treesims',
        description='Tree tensor network simulator: canonical forms, gates, TEBD and MBQC',
    )
    parser.add_argument('--log-level', default=LoggingConfig.DEFAULT_LEVEL,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='logging level')
    parser.add_argument('--log-file', default=None, help='also log to this rotating file')
    subparsers = parser.add_subparsers(dest='command', required=True)

    for name in WORKFLOWS:
        sub = subparsers.add_parser(name, help=f'run the {name} workflow')
        sub.add_argument('--config', metavar='PATH', help='run config (JSON)')
        sub.add_argument('--seed', type=_seed, help='random seed (unsigned 64-bit)')
        sub.add_argument('--chi-max', dest='chi_max', type=int, help='maximal bond dimension')
        sub.add_argument('--cutoff', type=float, help='relative discarded-weight cutoff per SVD')
        sub.add_argument('--dt', type=float, help='time step')
        sub.add_argument('--order', type=int, choices=[1, 2], help='Trotter order')
        sub.add_argument('--output', metavar='DIR', help='output directory')
        sub.add_argument('--format', choices=['json', 'csv'], help='encoding of tables')
        sub.add_argument('--jobs', type=int, help='worker processes for independent trajectories')

    serve = subparsers.add_parser('serve', help='run the job server')
    serve.add_argument('--host', default='127.0.0.1')
    serve.add_argument('--port', type=int, default=5001)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file (or defaults) with command-line overrides applied."""
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    return config.with_overrides(
        seed=args.seed,
        chi_max=args.chi_max,
        cutoff=args.cutoff,
        dt=args.dt,
        order=args.order,
        output=args.output,
        format=args.format,
        jobs=args.jobs,
    )


def _failed(result: dict) -> bool:
    return result.get('valid') is False or result.get('passed') is False


def _report_failure(command: str, result: dict) -> None:
    if command == 'validate':
        for violation in result.get('topology', {}).get('violations', []):
            print(f"invalid topology: {violation}", file=sys.stderr)
        if 'error' in result.get('state', {}):
            print(f"invalid state: {result['state']['error']}", file=sys.stderr)
    elif command == 'oracle-check':
        for suite in result.get('suites', []):
            for check in suite['checks']:
                if not check['passed']:
                    print(f"{suite['suite']}: {check['name']} error {check['error']:.3e} "
                          f"> {check['tolerance']:.1e}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)

    if args.command == 'serve':
        from server import serve
        serve(args.host, args.port)
        return EXIT_OK

    try:
        config = load_config(args)
        result = ExperimentRunner(config).run(args.command)
    except ValidationError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        logger.error(f"{args.command}: {e}")
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, BudgetExceededError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    if _failed(result):
        _report_failure(args.command, result)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
