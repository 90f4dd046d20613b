'''Eigenvalue sequences of chain products and the eigenvalue-distribution bounds.'''

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import itertools
import logging
import math
from typing import IO

import numpy as np
from scipy.optimize import linear_sum_assignment

from .chain import ChainSpec, FactorTriple
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ParameterError, SpaceMismatchError
from .helpers import ChainMode, Exponent, complex_to_json, exponent_to_json, from_recip, recip
from .lorentz import check_exponents, weighted_quasinorm
from .matrix import DenseOperator, eigenvalues, numerical_rank, sort_eigenvalues
from .schatten import SchattenParams, Verdict, holder_compose, singular_quasinorm

__all__ = [ 'SpectralReport', 'MatchingDistance', 'MembershipReport',
            'eigen_sequence', 'check_corollary3', 'check_theorem2', 'check_corollary5',
            'check_corollary7', 'check_proposition2', 'check_gamma_consistency',
            'gamma_lower_bound_eigen', 'unordered_distance', 'write_verdicts_csv' ]

log = logging.getLogger(__name__)

VERDICT_COLUMNS = ['name', 'lhs', 'rhs', 'ratio', 'holds', 'anchor']


@dataclass
class SpectralReport:
    lambdas: np.ndarray
    quasinorm_table: dict[tuple[Exponent, Exponent], float] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)

    def quasinorm(self, p: Exponent, q: Exponent | None = None) -> float:
        q = p if q is None else q
        if (p, q) not in self.quasinorm_table:
            self.quasinorm_table[(p, q)] = singular_quasinorm(self.lambdas, SchattenParams(p, q))
        return self.quasinorm_table[(p, q)]

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def to_dict(self):
        return { 'lambdas': complex_to_json(self.lambdas),
                 'quasinorms': [{ 'p': exponent_to_json(p), 'q': exponent_to_json(q), 'value': v }
                                for (p, q), v in self.quasinorm_table.items()],
                 'verdicts': [v.to_dict() for v in self.verdicts] }


def write_verdicts_csv(verdicts: list[Verdict], f: IO[str]):
    w = csv.writer(f)
    w.writerow(VERDICT_COLUMNS)
    for v in verdicts:
        d = v.to_dict()
        w.writerow([d[c] for c in VERDICT_COLUMNS])


def _matrix_of(obj) -> np.ndarray:
    if isinstance(obj, ChainSpec):
        if not obj.is_square:
            raise SpaceMismatchError(f'Chain maps {obj.source} into {obj.target}')
        return obj.product().entries
    if isinstance(obj, FactorTriple):
        return obj.product()
    if isinstance(obj, DenseOperator):
        return obj.entries
    return np.atleast_2d(np.asarray(obj, dtype=complex))


def eigen_sequence(obj, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralReport:
    m = _matrix_of(obj)
    if m.shape[0] != m.shape[1]:
        raise SpaceMismatchError(f'Eigenvalues need a square matrix, got shape {m.shape}')

    lam = eigenvalues(m, tol=tol)
    lam[np.abs(lam) <= tol.rank_rtol * np.linalg.norm(m)] = 0
    return SpectralReport(sort_eigenvalues(lam))


def _square(chain: ChainSpec, mode: ChainMode):
    if chain.mode is not mode:
        raise ParameterError(f'Expected a {mode.value} chain, got {chain.mode.value}')
    if not chain.is_square:
        raise SpaceMismatchError(f'Chain maps {chain.source} into {chain.target}')


def check_corollary3(chain: ChainSpec, ft: FactorTriple, report: SpectralReport | None = None,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    '''
    ||lambda||_{s~,r~} <= 2^{1/s~} gamma_upper with 1/s~ = 1/2 + 1/s, 1/r~ = 1/2 + 1/r and
    (s, r) the class of U. gamma_upper already holds the final 2^{1/s} join, so this is
    2^{1/s + 1/s~} c~ prod nu. The constant is 1 when s = r.
    '''
    _square(chain, ChainMode.SR)
    report = report or eigen_sequence(chain, tol=tol)

    hc = holder_compose(SchattenParams.plain(2), ft.params)
    lhs = report.quasinorm(hc.result.p, hc.result.q)
    rhs = hc.constant * ft.gamma_upper

    # lambda(T) = lambda(U A B) and sigma_2(A B) is measured directly
    ab = ft.A.entries @ ft.B.entries
    certified = hc.certified_constant * float(np.linalg.norm(ab)) * ft.sigma_U

    v = Verdict.compare('corollary3', lhs, rhs, f'eigenvalues in l{hc.result}',
                        note=f'measured bound {certified:.6g}', slack=tol.certificate_slack)
    report.verdicts.append(v)
    return v


def check_theorem2(chain: ChainSpec, report: SpectralReport | None = None,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    '''||lambda||_q <= prod nu_{r_k} with 1/q = sum 1/r_k - m/2, all s_k = r_k.'''
    _square(chain, ChainMode.SR)
    if any(link.s != link.r for link in chain.links):
        raise ParameterError('Plain eigenvalue bound needs s_k = r_k on every link')

    iq = sum(recip(r) for r in chain.r_list) - recip(2) * chain.m
    if not iq > 0:
        raise ParameterError(f'Need sum 1/r_k > m/2, got {iq + recip(2) * chain.m}')
    q = from_recip(iq)

    report = report or eigen_sequence(chain, tol=tol)
    lhs = report.quasinorm(q)
    rhs = float(np.prod(chain.rep_values()))

    v = Verdict.compare('theorem2', lhs, rhs, f'eigenvalues in l_{exponent_to_json(q)}',
                        slack=tol.certificate_slack)
    report.verdicts.append(v)
    return v


def _s_bar(chain: ChainSpec) -> Exponent:
    return from_recip(sum(recip(s) for s in chain.s_list))


def check_corollary5(chain: ChainSpec, report: SpectralReport | None = None,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    '''||lambda||_{s~} <= prod nu_{s_k;2} with 1/s~ = sum 1/s_k.'''
    _square(chain, ChainMode.S2)
    s_bar = _s_bar(chain)

    report = report or eigen_sequence(chain, tol=tol)
    lhs = report.quasinorm(s_bar)
    rhs = float(np.prod(chain.rep_values()))

    v = Verdict.compare('corollary5', lhs, rhs, f'eigenvalues in l_{exponent_to_json(s_bar)}',
                        slack=tol.certificate_slack)
    report.verdicts.append(v)
    return v


def check_corollary7(chain: ChainSpec, t: Exponent, report: SpectralReport | None = None,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    '''||lambda||_t <= rank(T)^{1/t - 1/s~} prod nu_{s_k;2} for t <= s~.'''
    _square(chain, ChainMode.S2)
    s_bar = _s_bar(chain)
    if not 0 < t <= s_bar:
        raise ParameterError(f'Need 0 < t <= {s_bar}, got t={t}')

    report = report or eigen_sequence(chain, tol=tol)
    m = chain.product().entries
    rank = numerical_rank(m, tol=tol)
    factor = float(rank) ** float(recip(t) - recip(s_bar)) if rank else 0.0

    lhs = report.quasinorm(t)
    rhs = factor * float(np.prod(chain.rep_values()))

    v = Verdict.compare('corollary7', lhs, rhs, f'eigenvalues in l_{exponent_to_json(t)}',
                        note=f'rank={rank}, ||lambda||_s~={report.quasinorm(s_bar):.6g}',
                        slack=tol.certificate_slack)
    report.verdicts.append(v)
    return v


@dataclass
class MembershipReport:
    p: Exponent
    q: Exponent
    value: float
    rep_product: float

    @property
    def ratio(self) -> float:
        return self.value / self.rep_product if self.rep_product else 0.0

    def to_dict(self):
        return { 'p': exponent_to_json(self.p), 'q': exponent_to_json(self.q),
                 'value': self.value, 'rep_product': self.rep_product, 'ratio': self.ratio }


def check_proposition2(chain: ChainSpec, report: SpectralReport | None = None,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> MembershipReport:
    '''
    ||lambda||_{p,q} with 1/p = sum 1/s_k - m/2, 1/q = sum 1/r_k. Reported only: there is
    no explicit constant to check against.
    '''
    _square(chain, ChainMode.SR)

    ip = sum(recip(s) for s in chain.s_list) - recip(2) * chain.m
    if not ip > 0:
        raise ParameterError(f'Need sum 1/s_k > m/2, got {ip + recip(2) * chain.m}')
    p = from_recip(ip)
    q = from_recip(sum(recip(r) for r in chain.r_list))

    report = report or eigen_sequence(chain, tol=tol)
    value = report.quasinorm(p, q)
    return MembershipReport(p, q, value, float(np.prod(chain.rep_values())))


def gamma_lower_bound_eigen(m, t: Exponent, q: Exponent | None = None,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    '''
    ||lambda(T)||_{t,q}. For q <= t no factorization T = B U A has ||A|| sigma_{t,q}(U) ||B||
    below it.
    '''
    return eigen_sequence(m, tol=tol).quasinorm(t, t if q is None else q)


def check_gamma_consistency(ft: FactorTriple, tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    lower = gamma_lower_bound_eigen(ft.product(), ft.params.p, ft.params.q, tol=tol)
    return Verdict.compare('gamma lower <= upper', lower, ft.gamma_upper,
                           f'factorization class {ft.params}',
                           note=f'gamma_certified={ft.gamma_certified:.6g}',
                           slack=tol.certificate_slack)


@dataclass(frozen=True)
class MatchingDistance:
    value: float
    exact: bool


def _rowwise_quasinorm(mods: np.ndarray, p: Exponent, q: Exponent) -> np.ndarray:
    # rows of moduli, each sorted in place to non-increasing order
    v = -np.sort(-mods, axis=1)
    n = np.arange(1, v.shape[1] + 1, dtype=float)
    ip = float(recip(p))
    if q == math.inf:
        return np.max(v * n ** ip, axis=1)
    q = float(q)
    return np.sum(v ** q * n ** (q * ip - 1), axis=1) ** (1 / q)


def unordered_distance(alpha, beta, p: Exponent, q: Exponent,
                       exact_limit: int = 8) -> MatchingDistance:
    '''
    Minimum of ||alpha_pi - beta||_{p,q} over pairings, after padding the shorter list with
    zeros. Plain exponents are solved as an assignment problem; otherwise all permutations
    are tried while the padded length is at most exact_limit. Longer lists pair the two
    modulus-sorted lists, which only bounds the minimum from above, and come back with
    exact=False.
    '''
    check_exponents(p, q, allow_inf_p=False)

    a = np.asarray(alpha, dtype=complex).ravel()
    b = np.asarray(beta, dtype=complex).ravel()
    n = max(a.size, b.size)
    if n == 0:
        return MatchingDistance(0.0, True)

    a = np.concatenate([a, np.zeros(n - a.size)])
    b = np.concatenate([b, np.zeros(n - b.size)])

    if p == q and q != math.inf:
        cost = np.abs(a[:, None] - b[None, :]) ** float(q)
        rows, cols = linear_sum_assignment(cost)
        return MatchingDistance(float(cost[rows, cols].sum() ** (1 / float(q))), True)

    if n <= exact_limit:
        perms = np.array(list(itertools.permutations(range(n))))
        mods = np.abs(a[None, :] - b[perms])
        return MatchingDistance(float(np.min(_rowwise_quasinorm(mods, p, q))), True)

    d = sort_eigenvalues(a) - sort_eigenvalues(b)
    log.debug('unordered distance: greedy pairing for %d terms', n)
    return MatchingDistance(weighted_quasinorm(np.sort(np.abs(d))[::-1], p, q), False)
