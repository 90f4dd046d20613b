from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from typing import IO, Iterator

from .chain import ChainSpec, compose
from .config import Tolerances
from .errors import CertificationError, LsfactError, NumericalFailure
from .experiments import ExperimentConfig, ResultTable, emit, random_chain_suite, sharpness_sweep
from .helpers import ChainMode, complex_from_json
from .spectral import (check_corollary3, check_corollary5, check_theorem2, eigen_sequence,
                       write_verdicts_csv)

__all__ = [ 'main' ]

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == '-':
        yield sys.stdout
    else:
        with open(path, 'w', newline='') as f:
            yield f


def _load_json(path: str):
    if path == '-':
        return json.load(sys.stdin)
    with open(path) as f:
        return json.load(f)


def _experiment_config(args, experiment: str) -> ExperimentConfig:
    d = _load_json(args.config) if args.config else {}
    d['experiment'] = experiment
    if args.seed is not None:
        d['seed'] = args.seed
    if args.out is not None:
        d['out'] = args.out
    if args.format is not None:
        d['format'] = args.format
    return ExperimentConfig.from_dict(d)


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args, 'sweep')
    print(f'DFT sweep: mode {cfg.mode.value}, m={cfg.m}, n in {cfg.dims}', file=sys.stderr)

    res = sharpness_sweep(cfg)
    for fit in res.slopes:
        mark = ' FLAGGED' if fit.flagged else ''
        pred = '-' if fit.predicted is None else f'{fit.predicted:.4f}'
        print(f'  {fit.column:<24} slope {fit.fitted:.4f} (predicted {pred}){mark}',
              file=sys.stderr)

    with _output(cfg.out) as f:
        emit(res.to_table(), cfg.format, f)

    flagged = any(fit.flagged for fit in res.slopes)
    return EXIT_OK if res.all_hold and not flagged else EXIT_FAILED


def cmd_suite(args) -> int:
    cfg = _experiment_config(args, 'suite')
    print(f'Random suite: mode {cfg.mode.value}, {cfg.count} chains of length {cfg.m}, '
          f'seed {cfg.seed}', file=sys.stderr)

    rep = random_chain_suite(cfg)
    for row in rep.failures:
        print(f'  chain {row.index} failed (replay seed {row.seed}): {row.error}',
              file=sys.stderr)
    print(f'{len(rep.rows) - len(rep.failures)}/{len(rep.rows)} chains passed', file=sys.stderr)

    with _output(cfg.out) as f:
        emit(rep.to_table(), cfg.format, f)

    if rep.numerical_failures:
        return EXIT_ERROR
    return EXIT_OK if not rep.failures else EXIT_FAILED


def _tolerances(args) -> Tolerances:
    if not args.config:
        return Tolerances()
    return Tolerances.from_dict(_load_json(args.config).get('tolerances'))


def cmd_factorize(args) -> int:
    tol = _tolerances(args)
    chain = ChainSpec.from_dict(_load_json(args.chain), tol)

    try:
        ft = compose(chain, args.eps, tol=tol)
    except CertificationError as e:
        print(f'Certification failed: {e}', file=sys.stderr)
        return EXIT_FAILED

    print(f'Certified class {ft.params}: sigma(U)={ft.sigma_U:.6g}, '
          f'gamma_upper={ft.gamma_upper:.6g}, constant={ft.constant:g}', file=sys.stderr)
    for desc in ft.claim_failures:
        print(f'  above the representation bound: {desc}', file=sys.stderr)

    fmt = args.format or 'json'
    with _output(args.out) as f:
        if fmt == 'json':
            json.dump(ft.to_dict(), f, indent=1)
            f.write('\n')
        else:
            columns = ['desc', 'constant', 'measured', 'bound', 'claimed', 'holds', 'claim_holds']
            emit(ResultTable('ledger', columns, [rec.to_dict() for rec in ft.ledger],
                             { 'params': ft.params.to_dict() }), 'csv', f)

    return EXIT_OK


def cmd_spectrum(args) -> int:
    tol = _tolerances(args)
    doc = _load_json(args.input)

    verdicts = []
    if 'links' in doc:
        chain = ChainSpec.from_dict(doc, tol)
        report = eigen_sequence(chain, tol=tol)
        if chain.is_square:
            if chain.mode is ChainMode.S2:
                verdicts.append(check_corollary5(chain, report, tol=tol))
            else:
                ft = compose(chain, tol=tol)
                verdicts.append(check_corollary3(chain, ft, report, tol=tol))
                if all(link.s == link.r for link in chain.links):
                    verdicts.append(check_theorem2(chain, report, tol=tol))
    else:
        report = eigen_sequence(complex_from_json(doc['matrix']), tol=tol)

    for p in args.p:
        report.quasinorm(p)

    fmt = args.format or 'json'
    with _output(args.out) as f:
        if fmt == 'json':
            json.dump(report.to_dict(), f, indent=1)
            f.write('\n')
        else:
            write_verdicts_csv(report.verdicts, f)

    for v in verdicts:
        print(f'  {v.name:<12} {v.lhs:.6g} <= {v.rhs:.6g}: {"ok" if v.holds else "FAILED"}',
              file=sys.stderr)

    return EXIT_OK if all(v.holds for v in verdicts) else EXIT_FAILED


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog='lsfact')
    parser.add_argument('-v', '--verbose', action='store_true', default=False,
                        help='Verbose output')
    sub = parser.add_subparsers(dest='command', required=True)

    for name, func, helptext in (('sweep', cmd_sweep, 'DFT sharpness sweep'),
                                 ('suite', cmd_suite, 'randomized certification suite')):
        p = sub.add_parser(name, help=helptext)
        p.add_argument('-c', '--config', help='JSON experiment config')
        p.add_argument('--seed', type=int, help='random seed')
        p.add_argument('-o', '--out', help='output file (default stdout)')
        p.add_argument('-f', '--format', choices=['json', 'csv'])
        p.set_defaults(func=func)

    p = sub.add_parser('factorize', help='certified B U A factorization of a chain')
    p.add_argument('chain', help='JSON chain description')
    p.add_argument('-c', '--config', help='JSON config with a tolerances section')
    p.add_argument('-e', '--eps', type=float, default=0.0)
    p.add_argument('-o', '--out', help='output file (default stdout)')
    p.add_argument('-f', '--format', choices=['json', 'csv'])
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser('spectrum', help='eigenvalue sequence and eigenvalue bounds')
    p.add_argument('input', help='JSON chain description or {"matrix": ...}')
    p.add_argument('-c', '--config', help='JSON config with a tolerances section')
    p.add_argument('-p', type=float, action='append', default=[], help='extra l_p quasinorm')
    p.add_argument('-o', '--out', help='output file (default stdout)')
    p.add_argument('-f', '--format', choices=['json', 'csv'])
    p.set_defaults(func=cmd_spectrum)

    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)

    if args.verbose:
        logging.basicConfig(level=logging.DEBUG)

    try:
        return args.func(args)
    except NumericalFailure as e:
        print(f'Numerical failure: {e} {e.diagnostics}', file=sys.stderr)
        return EXIT_ERROR
    except CertificationError as e:
        print(f'Certification failed: {e}', file=sys.stderr)
        return EXIT_FAILED
    except (LsfactError, OSError) as e:
        print(f'{type(e).__name__}: {e}', file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
