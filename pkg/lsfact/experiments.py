'''
Experiments: DFT sharpness sweeps, randomized certification suites, and table output.
'''

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import datetime
import json
import logging
import math
from typing import IO, Any

import numpy as np

from .chain import (ChainLink, ChainSpec, FactorTriple, compose, finite_dim_gamma_downgrade,
                    normalize_factorization)
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import CertificationError, LsfactError, NumericalFailure, ParameterError
from .helpers import ChainMode, Exponent, exponent_from_json, exponent_to_json, recip
from .matrix import DenseOperator, SeqSpace, dual_exponent, vector_norm
from .nuclear import NuclearRep, S2Rep, canonical_rep_from_matrix, s2_rep_from_rep
from .schatten import Verdict
from .spectral import (check_corollary3, check_corollary5, check_corollary7, check_proposition2,
                       check_theorem2, eigen_sequence)

__all__ = [ 'ExperimentConfig', 'SweepRow', 'SlopeFit', 'SweepResult', 'SuiteRow', 'SuiteReport',
            'ResultTable', 'dft_matrix', 'dft_chain', 'sharpness_sweep', 'random_nuclear_rep',
            'random_s2_rep', 'random_chain', 'random_chain_suite', 'fit_slope', 'emit' ]

log = logging.getLogger(__name__)

SLOPE_TOLERANCE = 0.05


@dataclass
class ExperimentConfig:
    experiment: str = 'sweep'
    dims: list[int] = field(default_factory=lambda: [8, 16, 32, 64, 128])
    m: int = 2
    mode: ChainMode = ChainMode.S2
    s: list[Exponent] = field(default_factory=lambda: [1, 1])
    r: list[Exponent] | None = None
    t: list[Exponent] = field(default_factory=lambda: [exponent_from_json('1/2')])
    eps: float = 0.0
    seed: int = 0
    count: int = 100
    max_dim: int = 10
    space: float = 2
    out: str | None = None
    format: str = 'json'
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.experiment not in ('sweep', 'suite'):
            raise ParameterError(f'Unknown experiment {self.experiment!r}')
        if self.format not in ('json', 'csv'):
            raise ParameterError(f'Unknown output format {self.format!r}')
        if self.m < 1:
            raise ParameterError(f'Chain length must be >= 1, got {self.m}')
        if any(n < 2 for n in self.dims):
            raise ParameterError(f'Dimensions must be >= 2, got {self.dims}')
        if self.max_dim < 2:
            raise ParameterError(f'max_dim must be >= 2, got {self.max_dim}')
        if self.space not in (1, 2):
            raise ParameterError(f'Random chains live on l_1 or l_2, got p={self.space}')

        # a single exponent applies to every link
        if len(self.s) == 1:
            self.s = self.s * self.m
        if self.r is not None and len(self.r) == 1:
            self.r = self.r * self.m
        if len(self.s) != self.m or (self.r is not None and len(self.r) != self.m):
            raise ParameterError(f'Need {self.m} exponents per list, got s={self.s}, r={self.r}')

        if self.mode is ChainMode.SR:
            for s, r in zip(self.s, self.r_list):
                if not 0 < r <= s <= 1:
                    raise ParameterError(f'SR exponents need 0 < r <= s <= 1, got ({s}, {r})')
        elif any(not 0 < s <= 2 for s in self.s):
            raise ParameterError(f'(s;2) exponents must lie in (0, 2], got {self.s}')

        if any(not t > 0 for t in self.t):
            raise ParameterError(f't values must be positive, got {self.t}')

    @property
    def r_list(self) -> list[Exponent]:
        return list(self.s) if self.r is None else list(self.r)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExperimentConfig:
        d = dict(d)
        kw: dict[str, Any] = {}
        for key in ('experiment', 'm', 'eps', 'seed', 'count', 'max_dim', 'space', 'out',
                    'format'):
            if key in d:
                kw[key] = d.pop(key)
        if 'dims' in d:
            kw['dims'] = [int(n) for n in d.pop('dims')]
        if 'mode' in d:
            kw['mode'] = ChainMode(d.pop('mode'))
        for key in ('s', 'r', 't'):
            if key in d:
                v = d.pop(key)
                kw[key] = None if v is None else [exponent_from_json(x) for x in v]
        if 'tolerances' in d:
            kw['tolerances'] = Tolerances.from_dict(d.pop('tolerances'))

        if d:
            raise ParameterError(f'Unknown config keys: {sorted(d)}')

        return cls(**kw)

    @classmethod
    def load(cls, path: str) -> ExperimentConfig:
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self):
        return { 'experiment': self.experiment, 'dims': list(self.dims), 'm': self.m,
                 'mode': self.mode.value,
                 's': [exponent_to_json(x) for x in self.s],
                 'r': None if self.r is None else [exponent_to_json(x) for x in self.r],
                 't': [exponent_to_json(x) for x in self.t],
                 'eps': self.eps, 'seed': self.seed, 'count': self.count,
                 'max_dim': self.max_dim, 'space': self.space,
                 'out': self.out, 'format': self.format,
                 'tolerances': self.tolerances.to_dict() }


@dataclass
class ResultTable:
    name: str
    columns: list[str]
    rows: list[dict[str, Any]]
    metadata: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)


def _stamp(metadata: dict[str, Any]) -> dict[str, Any]:
    out = dict(metadata)
    out['timestamp'] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return out


def emit(table: ResultTable, fmt: str, f: IO[str]):
    '''Write a table with a metadata header; only the timestamp differs between runs.'''
    if fmt == 'json':
        doc = { 'name': table.name, 'metadata': _stamp(table.metadata),
                'columns': table.columns,
                'rows': [{ c: row.get(c) for c in table.columns } for row in table.rows] }
        doc.update(table.extra)
        json.dump(doc, f, indent=1)
        f.write('\n')
    elif fmt == 'csv':
        for key, value in _stamp(table.metadata).items():
            f.write(f'# {key}: {json.dumps(value)}\n')
        w = csv.writer(f)
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([row.get(c) for c in table.columns])
    else:
        raise ParameterError(f'Unknown output format {fmt!r}')


def dft_matrix(n: int) -> DenseOperator:
    '''A[j, l] = n^{-1/2} exp(2 pi i j l / n), j, l = 1..n, on l_1^n.'''
    if n < 2:
        raise ParameterError(f'DFT dimension must be >= 2, got {n}')
    j = np.arange(1, n + 1)
    # reduce jl mod n before scaling to keep the phases exact
    a = np.exp(2j * np.pi * (np.outer(j, j) % n) / n) / math.sqrt(n)
    return DenseOperator.from_matrix(a, 1, 1)


def dft_chain(n: int, mode: ChainMode, s: list[Exponent], r: list[Exponent] | None = None,
              tol: Tolerances = DEFAULT_TOLERANCES) -> ChainSpec:
    rep = canonical_rep_from_matrix(dft_matrix(n), tol=tol)
    if mode is ChainMode.S2:
        rep2 = s2_rep_from_rep(rep, tol=tol)
        return ChainSpec([ChainLink(rep2, sk) for sk in s], mode)
    r = list(s) if r is None else r
    return ChainSpec([ChainLink(rep, sk, rk) for sk, rk in zip(s, r)], mode)


@dataclass
class SlopeFit:
    column: str
    fitted: float
    predicted: float | None
    residual: float

    @property
    def flagged(self) -> bool:
        return self.predicted is not None and abs(self.fitted - self.predicted) > SLOPE_TOLERANCE

    def to_dict(self):
        return { 'column': self.column, 'fitted': self.fitted, 'predicted': self.predicted,
                 'residual': self.residual, 'flagged': self.flagged }


def fit_slope(ns, values, column: str = '', predicted: float | None = None) -> SlopeFit:
    '''Least-squares slope of log(value) against log(n).'''
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    design = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.linalg.norm(design @ coef - y))
    return SlopeFit(column, float(coef[0]), predicted, residual)


@dataclass
class SweepRow:
    n: int
    values: dict[str, float]
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def to_dict(self):
        d: dict[str, Any] = { 'n': self.n }
        d.update(self.values)
        d['all_hold'] = self.all_hold
        return d


@dataclass
class SweepResult:
    config: ExperimentConfig
    columns: list[str]
    rows: list[SweepRow]
    slopes: list[SlopeFit]

    @property
    def all_hold(self) -> bool:
        return all(row.all_hold for row in self.rows)

    def to_table(self) -> ResultTable:
        return ResultTable('sweep', ['n'] + self.columns + ['all_hold'],
                           [row.to_dict() for row in self.rows],
                           { 'seed': self.config.seed, 'config': self.config.to_dict() },
                           { 'slopes': [s.to_dict() for s in self.slopes],
                             'verdicts': [{ 'n': row.n,
                                            'verdicts': [v.to_dict() for v in row.verdicts] }
                                          for row in self.rows] })


def _t_key(t: Exponent) -> str:
    return str(exponent_to_json(t))


def _sweep_row(n: int, cfg: ExperimentConfig) -> tuple[SweepRow, FactorTriple]:
    tol = cfg.tolerances
    chain = dft_chain(n, cfg.mode, cfg.s, cfg.r_list if cfg.mode is ChainMode.SR else None,
                      tol=tol)
    ft = compose(chain, cfg.eps, tol=tol)
    report = eigen_sequence(chain, tol=tol)

    s_bar = 1 / float(sum(recip(s) for s in cfg.s))
    values = { 'rep_product': float(np.prod(chain.rep_values())),
               'eigen_s_bar': report.quasinorm(s_bar),
               'sigma_U': ft.sigma_U,
               'gamma_upper': ft.gamma_upper,
               'gamma_certified': ft.gamma_certified }

    verdicts = []
    lower = report.quasinorm(ft.params.p, ft.params.q)
    values['gamma_lower'] = lower
    verdicts.append(Verdict.compare('gamma lower <= upper', lower, ft.gamma_upper,
                                    f'factorization class {ft.params}',
                                    note=f'gamma_certified={ft.gamma_certified:.6g}',
                                    slack=tol.certificate_slack))
    verdicts.append(Verdict.compare('gamma certified <= upper', ft.gamma_certified,
                                    ft.gamma_upper, '||A|| sigma(U) ||B||',
                                    note='; '.join(ft.claim_failures),
                                    slack=tol.certificate_slack))

    for t in cfg.t:
        key = _t_key(t)
        eig_t = report.quasinorm(t)
        values[f'eigen_t={key}'] = eig_t
        down = finite_dim_gamma_downgrade(ft, t, tol=tol)
        values[f'downgraded_t={key}'] = down.value
        verdicts.append(down.verdict)
        verdicts.append(Verdict.compare(f'eigen t={key} <= downgraded', eig_t, down.value,
                                        'lower <= upper', slack=tol.certificate_slack))
        if cfg.mode is ChainMode.S2 and t <= s_bar:
            verdicts.append(check_corollary7(chain, t, report, tol=tol))

    if cfg.mode is ChainMode.S2:
        verdicts.append(check_corollary5(chain, report, tol=tol))
    else:
        verdicts.append(check_corollary3(chain, ft, report, tol=tol))
        if all(s == r for s, r in zip(cfg.s, cfg.r_list)):
            verdicts.append(check_theorem2(chain, report, tol=tol))
        if sum(recip(s) for s in cfg.s) > recip(2) * cfg.m:
            values['membership'] = check_proposition2(chain, report, tol=tol).value

    return SweepRow(n, values, verdicts), ft


def _predicted_slopes(cfg: ExperimentConfig, ft: FactorTriple) -> dict[str, float]:
    # DFT links: every coefficient equals sqrt(n) and every eigenvalue modulus is 1
    inv_s = float(sum(recip(s) for s in cfg.s))
    rep_slope = cfg.m / 2 + inv_s
    pred = { 'rep_product': rep_slope, 'gamma_upper': rep_slope, 'eigen_s_bar': inv_s }

    index = ft.params.p if cfg.mode is ChainMode.S2 else ft.params.q
    for t in cfg.t:
        key = _t_key(t)
        pred[f'eigen_t={key}'] = float(recip(t))
        pred[f'downgraded_t={key}'] = float(recip(t) - recip(index)) + rep_slope

    if cfg.mode is ChainMode.S2:
        pred['gamma_certified'] = inv_s
        pred['sigma_U'] = inv_s - float(cfg.s[0]) / 4

    return pred


def sharpness_sweep(cfg: ExperimentConfig) -> SweepResult:
    rows = []
    ft = None
    for n in cfg.dims:
        try:
            row, ft = _sweep_row(n, cfg)
        except CertificationError as e:
            raise CertificationError(f'n={n}: {e}', e.record) from e
        log.debug('sweep n=%d: %s', n, row.values)
        rows.append(row)

    columns = list(rows[0].values) if rows else []
    slopes = []
    if len(rows) >= 2:
        pred = _predicted_slopes(cfg, ft)
        ns = [row.n for row in rows]
        for c in columns:
            vals = [row.values[c] for row in rows]
            if all(v > 0 for v in vals):
                slopes.append(fit_slope(ns, vals, c, pred.get(c)))

    return SweepResult(cfg, columns, rows, slopes)


def _unit_rows(rng: np.random.Generator, count: int, dim: int, p: float,
               real: bool) -> np.ndarray:
    z = rng.standard_normal((count, dim))
    if not real:
        z = z + 1j * rng.standard_normal((count, dim))
    return z / vector_norm(z, p, axis=1)[:, None]


def _coefficients(rng: np.random.Generator, count: int) -> np.ndarray:
    return np.sort(rng.exponential(size=count))[::-1]


def random_nuclear_rep(rng: np.random.Generator, source: SeqSpace, target: SeqSpace, terms: int,
                       real: bool = False, tol: Tolerances = DEFAULT_TOLERANCES) -> NuclearRep:
    xprime = _unit_rows(rng, terms, source.dim, dual_exponent(source.p), real)
    y = _unit_rows(rng, terms, target.dim, target.p, real).T
    return NuclearRep(_coefficients(rng, terms), xprime, y, source, target, tol)


def random_s2_rep(rng: np.random.Generator, source: SeqSpace, target: SeqSpace, terms: int,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> S2Rep:
    # l_1 targets use real vectors so the weak l_2 norm stays exactly computable
    real = target.p == 1
    return s2_rep_from_rep(random_nuclear_rep(rng, source, target, terms, real, tol), tol=tol)


def random_chain(rng: np.random.Generator, mode: ChainMode, s: list[Exponent],
                 r: list[Exponent] | None = None, max_dim: int = 10, space: float = 2,
                 square: bool = True, tol: Tolerances = DEFAULT_TOLERANCES) -> ChainSpec:
    m = len(s)
    dims = [int(d) for d in rng.integers(1, max_dim + 1, size=m + 1)]
    if square:
        dims[-1] = dims[0]
    spaces = [SeqSpace(d, space) for d in dims]

    links = []
    for k in range(m):
        terms = int(rng.integers(1, max_dim + 1))
        if mode is ChainMode.S2:
            rep = random_s2_rep(rng, spaces[k], spaces[k + 1], terms, tol=tol)
            links.append(ChainLink(rep, s[k]))
        else:
            rep = random_nuclear_rep(rng, spaces[k], spaces[k + 1], terms, tol=tol)
            links.append(ChainLink(rep, s[k], s[k] if r is None else r[k]))

    return ChainSpec(links, mode)


@dataclass
class SuiteRow:
    index: int
    seed: list[int]
    dims: list[int]
    verdicts: list[Verdict] = field(default_factory=list)
    error: str | None = None
    numerical: bool = False

    @property
    def passed(self) -> bool:
        return self.error is None and all(v.holds for v in self.verdicts)

    @property
    def worst_ratio(self) -> float:
        return max((v.ratio for v in self.verdicts), default=0.0)

    def to_dict(self):
        return { 'index': self.index, 'seed': json.dumps(self.seed),
                 'dims': json.dumps(self.dims), 'checks': len(self.verdicts),
                 'worst_ratio': self.worst_ratio, 'passed': self.passed,
                 'error': self.error }


@dataclass
class SuiteReport:
    config: ExperimentConfig
    rows: list[SuiteRow]

    @property
    def failures(self) -> list[SuiteRow]:
        return [row for row in self.rows if not row.passed]

    @property
    def numerical_failures(self) -> list[SuiteRow]:
        return [row for row in self.rows if row.numerical]

    def worst_ratios(self) -> dict[str, float]:
        worst: dict[str, float] = {}
        for row in self.rows:
            for v in row.verdicts:
                worst[v.name] = max(worst.get(v.name, 0.0), v.ratio)
        return worst

    def to_table(self) -> ResultTable:
        columns = ['index', 'seed', 'dims', 'checks', 'worst_ratio', 'passed', 'error']
        return ResultTable('suite', columns, [row.to_dict() for row in self.rows],
                           { 'seed': self.config.seed, 'config': self.config.to_dict() },
                           { 'count': len(self.rows), 'failures': len(self.failures),
                             'worst_ratios': self.worst_ratios() })


def _suite_checks(chain: ChainSpec, cfg: ExperimentConfig) -> list[Verdict]:
    tol = cfg.tolerances
    ft = compose(chain, cfg.eps, tol=tol)
    verdicts = [Verdict.compare('reconstruction', ft.reconstruction_error,
                                tol.chain_reconstruction, 'B U A = T')]

    report = eigen_sequence(chain, tol=tol)
    lower = report.quasinorm(ft.params.p, ft.params.q)
    verdicts.append(Verdict.compare('gamma lower <= upper', lower, ft.gamma_upper,
                                    f'factorization class {ft.params}',
                                    note=f'gamma_certified={ft.gamma_certified:.6g}',
                                    slack=tol.certificate_slack))
    verdicts.append(Verdict.compare('gamma certified <= upper', ft.gamma_certified,
                                    ft.gamma_upper, '||A|| sigma(U) ||B||',
                                    note='; '.join(ft.claim_failures),
                                    slack=tol.certificate_slack))

    if cfg.mode is ChainMode.SR:
        verdicts.append(check_corollary3(chain, ft, report, tol=tol))
        if all(link.s == link.r for link in chain.links):
            verdicts.append(check_theorem2(chain, report, tol=tol))
    else:
        verdicts.append(check_corollary5(chain, report, tol=tol))
        s_bar = 1 / float(sum(recip(s) for s in cfg.s))
        for t in cfg.t:
            if t <= s_bar:
                verdicts.append(check_corollary7(chain, t, report, tol=tol))

    if ft.a_certificate > 0 and ft.b_certificate > 0:
        rec = normalize_factorization(ft, tol=tol).ledger[-1]
        verdicts.append(Verdict.compare('normalized middle factor', rec.measured, rec.bound,
                                        rec.desc, slack=tol.certificate_slack))

    return verdicts


def random_chain_suite(cfg: ExperimentConfig) -> SuiteReport:
    rows = []
    for i in range(cfg.count):
        seed = [cfg.seed, i]
        rng = np.random.default_rng(seed)
        chain = random_chain(rng, cfg.mode, cfg.s, cfg.r, cfg.max_dim, cfg.space,
                             tol=cfg.tolerances)
        row = SuiteRow(i, seed, [chain.source.dim] + [link.rep.target.dim for link in chain.links])
        try:
            row.verdicts = _suite_checks(chain, cfg)
        except NumericalFailure as e:
            row.error = f'{type(e).__name__}: {e}'
            row.numerical = True
        except LsfactError as e:
            row.error = f'{type(e).__name__}: {e}'

        if not row.passed:
            log.debug('suite chain %d failed, replay seed %s: %s', i, seed, row.error)
        rows.append(row)

    return SuiteReport(cfg, rows)
