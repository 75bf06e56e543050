import os

for _var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS'):
    os.environ.setdefault(_var, '1')

import argparse
import json
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from dw_suite_service import DavisWielandtSuite
from ensemble_service import KINDS, RELATIONS, ensemble_spec
from matrix_io_service import MatrixIOService
from operator_core import ConfigError, OperatorError, SolverError, ToleranceConfig, min_modulus, op_norm
from orthogonality_service import OrthogonalityService
from radii_service import RadiiService
from report_service import ReportService
from runner_service import CHECKS, VerificationRunner
from utils import default_replay_dir, format_float, parse_sizes
from verdicts import Verdict

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
FUNCTIONALS = ('opnorm', 'minmod', 'w', 'c', 'dw')
RELATION_CHECKS = ('bj-orth', 'r-orth', 'parallel')

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _threads_from_env() -> int:
    raw = os.environ.get('OPGEOM_THREADS', '1')
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"OPGEOM_THREADS must be a positive integer, got '{raw}'")
    if threads < 1:
        raise ConfigError(f"OPGEOM_THREADS must be a positive integer, got {threads}")
    return threads


def _tolerance_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group('tolerances')
    group.add_argument('--tol', type=float, dest='decision_margin', help='decision margin for verdicts (default 1e-8)')
    group.add_argument('--marginal-band', type=float, help='width of the marginal band (default 1e-6)')
    group.add_argument('--unit-tol', type=float, help='allowed | ||v|| - 1 | for unit vectors (default 1e-10)')
    group.add_argument('--subspace-tol', type=float, help='clustering tolerance for norming subspaces (default 1e-8)')
    group.add_argument('--sweep-points', type=int, help='angles in the support-function sweep (default 720)')
    group.add_argument('--shell-points', type=int, help='sqrt of the 2-sphere direction count (default 64)')
    group.add_argument('--refine-tol', type=float, help='angle refinement tolerance (default 1e-10)')
    group.add_argument('--oracle-samples', type=int, help='random restarts of the dw maximiser (default 64)')
    group.add_argument('--rng-seed', type=int, help='seed of the internal restart generator (default 20170101)')
    group.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    group.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _tolerance_parent()
    parser = argparse.ArgumentParser(
        prog='opgeom',
        description='Norms, radii, orthogonality and parallelism of dense complex matrices, '
                    'with verification batteries over seeded ensembles.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    compute = sub.add_parser('compute', parents=[parent], help='evaluate one functional of a matrix file')
    compute.add_argument('--functional', required=True, choices=FUNCTIONALS)
    compute.add_argument('--input', required=True, help='matrix file (JSON or CSV)')

    check = sub.add_parser('check', parents=[parent], help='decide a relation between two matrix files')
    check.add_argument('relation', choices=RELATION_CHECKS)
    check.add_argument('--left', required=True, help='matrix file for T')
    check.add_argument('--right', required=True, help='matrix file for S')

    verify = sub.add_parser('verify', parents=[parent], help='run a battery over a seeded ensemble')
    verify.add_argument('name', choices=CHECKS)
    verify.add_argument('--ensemble', required=True, choices=KINDS)
    verify.add_argument('--n', type=int, required=True)
    verify.add_argument('--count', type=int, required=True)
    verify.add_argument('--seed', type=int, required=True)
    verify.add_argument('--scale', type=float, default=None)
    verify.add_argument('--relation', choices=RELATIONS, default='independent',
                        help='construction of S for two-operator checks')
    verify.add_argument('--out', default=None, help='report path (.csv or .json); stdout when omitted')
    verify.add_argument('--format', choices=('csv', 'json'), default=None)
    verify.add_argument('--replay-dir', default=None,
                        help='directory for matrices of flagged instances (default: OUT.replay, or ./replay)')
    verify.add_argument('--timings', action='store_true', help='record wall-clock time per instance')

    demo = sub.add_parser('demo', parents=[parent], help='truncated shift table')
    demo.add_argument('which', choices=('shift',))
    demo.add_argument('--sizes', default='2,4,8,16,32,64')
    demo.add_argument('--out', default=None)
    demo.add_argument('--format', choices=('csv', 'json'), default=None)

    lines = ['flags by command:']
    for name, subparser in sub.choices.items():
        flags = [opt for action in subparser._actions for opt in action.option_strings]
        lines.append(f"  {name}: {' '.join(flags)}")
    parser.epilog = '\n'.join(lines)
    return parser


def _config(args) -> ToleranceConfig:
    return ToleranceConfig().replace(
        decision_margin=args.decision_margin, marginal_band=args.marginal_band, unit_tol=args.unit_tol,
        subspace_tol=args.subspace_tol, sweep_points=args.sweep_points, shell_points=args.shell_points,
        refine_tol=args.refine_tol, oracle_samples=args.oracle_samples, rng_seed=args.rng_seed,
    )


def _infer_format(fmt: Optional[str], out: Optional[str]) -> str:
    if fmt:
        return fmt
    return 'json' if out and out.lower().endswith('.json') else 'csv'


def _print_json(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2) + '\n')


def _compute(args, cfg: ToleranceConfig) -> int:
    T = MatrixIOService().load(args.input)
    radii = RadiiService(cfg)
    functional = {
        'opnorm': op_norm,
        'minmod': min_modulus,
        'w': radii.numerical_radius,
        'c': radii.crawford_number,
        'dw': radii.davis_wielandt_radius,
    }[args.functional]
    result = functional(T)
    logger.info(f"{args.functional}({args.input}) = {result.value:.17g}")
    _print_json(result.to_dict())
    return EXIT_OK


def _check(args, cfg: ToleranceConfig) -> int:
    io = MatrixIOService()
    T, S = io.load(args.left), io.load(args.right)
    service = OrthogonalityService(cfg)
    decide = {
        'bj-orth': service.is_bj_orthogonal,
        'r-orth': service.is_r_orthogonal,
        'parallel': service.is_parallel,
    }[args.relation]
    cert = decide(T, S)
    logger.info(f"{args.relation}: {cert.verdict.value} (margin {cert.margin:.3e})")
    payload = {'relation': args.relation, **cert.to_dict()}
    if args.relation != 'parallel':
        # M = V*(S*T)V on the norming subspace of T
        payload['compressed_form'] = io.to_json(service.compressed_form(T, S))
    _print_json(payload)
    return EXIT_OK


def _verify(args, cfg: ToleranceConfig) -> int:
    spec = ensemble_spec(args.ensemble, args.n, args.count, args.seed, args.scale)
    replay_dir = args.replay_dir or default_replay_dir(args.out)
    runner = VerificationRunner(cfg, threads=_threads_from_env(),
                                io_service=MatrixIOService(replay_dir), timings=args.timings)
    outcome = runner.run(args.name, spec, relation=args.relation)
    ReportService().emit_report(outcome.rows, _infer_format(args.format, args.out), args.out)
    if outcome.flagged:
        logger.warning(f"{args.name}: {len(outcome.flagged)} instance(s) violate the expected outcome")
    return outcome.exit_code


def _demo(args, cfg: ToleranceConfig) -> int:
    suite = DavisWielandtSuite(cfg)
    rows = suite.shift_truncation_demo(parse_sizes(args.sizes))
    contract = suite.shift_contract(rows)
    fmt = _infer_format(args.format, args.out)
    if fmt == 'json':
        text = json.dumps({'rows': [r.to_dict() for r in rows],
                           'contract': [{'name': c.name, 'lhs': c.lhs, 'rhs': c.rhs, 'slack': c.slack,
                                         'verdict': c.verdict.value} for c in contract]}, indent=2) + '\n'
    else:
        lines = ['n,norm,w,dw,gap,attained']
        lines += [f"{r.n},{format_float(r.norm)},{format_float(r.w)},{format_float(r.dw)},"
                  f"{format_float(r.gap)},{str(r.attained).lower()}" for r in rows]
        text = '\n'.join(lines) + '\n'
    if args.out:
        with open(args.out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Wrote shift table to {args.out}")
    else:
        sys.stdout.write(text)
    failed = [c.name for c in contract if c.verdict is Verdict.FAILS]
    if failed:
        logger.warning(f"Shift truncation contract violated: {failed}")
        return EXIT_VIOLATION
    return EXIT_OK


COMMANDS = {'compute': _compute, 'check': _check, 'verify': _verify, 'demo': _demo}


def run_command(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the subcommand and map the outcome to an exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)

    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except SolverError as e:
        logger.error(f"Numerical solver failure: {e}")
        return EXIT_SOLVER
    except (OperatorError, ConfigError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_USAGE


def main() -> None:
    load_dotenv()
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
    sys.exit(run_command())


if __name__ == '__main__':
    main()
