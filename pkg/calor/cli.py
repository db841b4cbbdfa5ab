from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from calor import __version__
from calor import _humanize_seconds
from calor.driver import DEFAULT_IC_TEXT
from calor.driver import GridKind
from calor.driver import linf_error
from calor.driver import parse_ic
from calor.driver import run
from calor.driver import RunConfig
from calor.harness import convergence_study
from calor.harness import emit
from calor.harness import invariance_suite
from calor.harness import linearity_test
from calor.harness import render
from calor.harness import Report
from calor.harness import TRUNCATION_STUDIES
from calor.harness import truncation_study
from calor.interpolation import InterpolationMethod
from calor.schemes import SchemeKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_SUITE_FAILED = 2

DEFAULT_NS = '4,8,16,32,64,128,256'
PROJECTIONS = ['none'] + [method.value for method in InterpolationMethod]


def _ns(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a comma separated list of integers, got `{text}`') from None


def _config_arguments(parser: argparse.ArgumentParser, ic: bool = True) -> None:
    parser.add_argument('--scheme', choices=[kind.value for kind in SchemeKind], default=SchemeKind.INVARIANT_FTCS.value)
    parser.add_argument('--grid', choices=[kind.value for kind in GridKind], default=GridKind.INVARIANTIZED.value)
    parser.add_argument('--projection', choices=PROJECTIONS, default='none')
    parser.add_argument('--sigma', type=float, default=0.25, help='time step factor, dtau = sigma * h^2')
    parser.add_argument('--t-final', type=float, default=1.0)
    if ic:
        parser.add_argument('--ic', default=DEFAULT_IC_TEXT, help='initial condition, e.g. `const:2+sin:k=1,shift=1`')


def _output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--format', choices=['csv', 'json'], default='csv')
    parser.add_argument('--out', help='report file, printed to stdout when omitted')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='calor', description='Invariant finite difference schemes for u_t = u_xx')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='log at DEBUG level')
    commands = parser.add_subparsers(dest='command', required=True)

    run_parser = commands.add_parser('run', help='one run, prints the error at t_final')
    run_parser.add_argument('--N', type=int, default=64)
    _config_arguments(run_parser)

    converge = commands.add_parser('converge', help='convergence study over several N')
    converge.add_argument('--Ns', type=_ns, default=_ns(DEFAULT_NS))
    _config_arguments(converge)
    _output_arguments(converge)

    linearity = commands.add_parser('linearity', help='superposition error of sin(x-1)+2 and cos(x)+2')
    linearity.add_argument('--Ns', type=_ns, default=_ns(DEFAULT_NS))
    _config_arguments(linearity, ic=False)
    linearity.set_defaults(projection=InterpolationMethod.INVARIANT_QUADRATIC.value)
    _output_arguments(linearity)

    invariance = commands.add_parser('invariance', help='randomized symmetry checks')
    invariance.add_argument('--trials', type=int, default=1000)
    invariance.add_argument('--seed', type=int, default=0)
    _output_arguments(invariance)

    truncation = commands.add_parser('truncation', help='truncation order of the schemes on exact data')
    truncation.add_argument('study', choices=TRUNCATION_STUDIES)
    truncation.add_argument('--p', type=int, default=4, help='order of the spatial operator')
    _output_arguments(truncation)
    return parser


def _config(args: argparse.Namespace, N: int) -> RunConfig:
    return RunConfig(
        N=N,
        scheme=args.scheme,
        grid=args.grid,
        projection=args.projection,
        sigma=args.sigma,
        t_final=args.t_final,
        ic=parse_ic(getattr(args, 'ic', DEFAULT_IC_TEXT)),
    )


def _write(report: Report, args: argparse.Namespace) -> None:
    if args.out:
        emit(report, args.format, args.out)
        logger.info(f'Wrote {args.out}')
    else:
        sys.stdout.write(render(report, args.format))


def _run(args: argparse.Namespace) -> int:
    cfg = _config(args, args.N)
    result = run(cfg)
    if not result.ok:
        for flag in result.flags:
            print(flag, file=sys.stderr)
        return EXIT_RUN_FAILED
    print(f'N={cfg.N} steps={result.steps} linf_error={linf_error(result, cfg.ic):.17g} '
          f'time={_humanize_seconds(result.wall_time)}')
    return EXIT_OK


def _study(report, args: argparse.Namespace) -> int:
    _write(report, args)
    if report.failures:
        return EXIT_RUN_FAILED
    return EXIT_OK if report.passed else EXIT_SUITE_FAILED


def _suite(report: Report, args: argparse.Namespace) -> int:
    _write(report, args)
    return EXIT_OK if report.passed else EXIT_SUITE_FAILED


def main(argv: Sequence[str] | None = None) -> int:
    """

    Entry point of the ``calor`` command. Exit codes: 0 on success, 1 when a run failed, 2 when a suite or an order
    check missed its tolerance.

    Example
    -----

    .. code-block:: bash

        calor converge --projection invariant_quadratic --Ns 32,64,128,256 --out convergence.csv

    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    try:
        if args.command == 'run':
            return _run(args)
        if args.command == 'converge':
            return _study(convergence_study(_config(args, min(args.Ns)), args.Ns), args)
        if args.command == 'linearity':
            return _study(linearity_test(args.Ns, _config(args, min(args.Ns))), args)
        if args.command == 'invariance':
            return _suite(invariance_suite(args.trials, args.seed), args)
        return _suite(truncation_study(args.study, p=args.p), args)
    except ValueError as e:
        logger.error(str(e))
        return EXIT_RUN_FAILED


if __name__ == '__main__':
    sys.exit(main())
