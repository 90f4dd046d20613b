'''Schatten-Lorentz quasinorms, Hölder composition of classes, Weyl and rank-downgrade checks.'''

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ParameterError, RankPreconditionError
from .helpers import Exponent, exponent_to_json, exponent_from_json, from_recip, recip
from .lorentz import check_exponents, decreasing_rearrangement, weighted_quasinorm
from .matrix import eigenvalues, numerical_rank, svd

__all__ = [ 'SchattenParams', 'HolderComposition', 'Verdict',
            'schatten_lorentz_quasinorm', 'singular_quasinorm', 'singular_values', 'holder_compose',
            'weyl_check', 'finite_rank_downgrade_check' ]


@dataclass(frozen=True)
class SchattenParams:
    p: Exponent
    q: Exponent

    def __post_init__(self):
        # p = inf with finite q is the sigma_{inf,v} class of the s = 1 split
        check_exponents(self.p, self.q, allow_inf_p=True)

    @classmethod
    def plain(cls, p: Exponent) -> SchattenParams:
        return cls(p, p)

    @classmethod
    def from_recips(cls, ip: Exponent, iq: Exponent) -> SchattenParams:
        return cls(from_recip(ip), from_recip(iq))

    @property
    def is_plain(self) -> bool:
        return self.p == self.q

    @property
    def recips(self) -> tuple[Exponent, Exponent]:
        return recip(self.p), recip(self.q)

    def __str__(self) -> str:
        return f'S({exponent_to_json(self.p)},{exponent_to_json(self.q)})'

    def to_dict(self):
        return { 'p': exponent_to_json(self.p), 'q': exponent_to_json(self.q) }

    @classmethod
    def from_dict(cls, d) -> SchattenParams:
        return cls(exponent_from_json(d['p']), exponent_from_json(d['q']))


@dataclass(frozen=True)
class HolderComposition:
    left: SchattenParams
    right: SchattenParams
    result: SchattenParams
    constant: float
    # provable by index pairing; equals constant when result.q >= result.p
    certified_constant: float


@dataclass
class Verdict:
    name: str
    lhs: float
    rhs: float
    holds: bool
    anchor: str = ''
    note: str = ''

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    def to_dict(self):
        return { 'name': self.name, 'lhs': self.lhs, 'rhs': self.rhs, 'ratio': self.ratio,
                 'holds': self.holds, 'anchor': self.anchor, 'note': self.note }

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, anchor: str = '', note: str = '',
                slack: float = DEFAULT_TOLERANCES.certificate_slack) -> Verdict:
        return cls(name, float(lhs), float(rhs), bool(lhs <= rhs * (1 + slack)), anchor, note)


def singular_quasinorm(values: np.ndarray, params: SchattenParams) -> float:
    '''Lorentz quasinorm of an already computed list of singular values.'''
    r = decreasing_rearrangement(values)
    return weighted_quasinorm(r.values, params.p, params.q)


def singular_values(m, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    '''Singular values with those below rank_rtol * mu_1 set to exact zeros.'''
    s = svd(m, keep_vectors=False, tol=tol).values.copy()
    if s.size and s[0] > 0:
        s[s <= tol.rank_rtol * s[0]] = 0.0
    return s


def schatten_lorentz_quasinorm(m, params: SchattenParams,
                               tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    s = singular_values(m, tol=tol)
    return weighted_quasinorm(s, params.p, params.q)


def holder_compose(left: SchattenParams, right: SchattenParams) -> HolderComposition:
    lp, lq = left.recips
    rp, rq = right.recips
    result = SchattenParams.from_recips(lp + rp, lq + rq)

    if left.is_plain and right.is_plain:
        return HolderComposition(left, right, result, 1.0, 1.0)

    constant = 2.0 ** float(lp + rp)
    certified = 2.0 ** float(max(lp + rp, lq + rq))
    return HolderComposition(left, right, result, constant, certified)


def weyl_check(m, params: SchattenParams, tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    if params.q > params.p:
        raise ParameterError(f'Weyl check needs q <= p, got {params}')

    lam = eigenvalues(m, tol=tol)
    scale = np.linalg.norm(np.asarray(getattr(m, 'entries', m)))
    lam[np.abs(lam) <= tol.rank_rtol * scale] = 0
    lhs = singular_quasinorm(lam, params)
    rhs = schatten_lorentz_quasinorm(m, params, tol=tol)
    return Verdict.compare('weyl', lhs, rhs, 'Weyl inequality', slack=tol.certificate_slack)


def finite_rank_downgrade_check(m, p: Exponent, q: Exponent, t: Exponent, rank_bound: int,
                                plain: bool = False,
                                tol: Tolerances = DEFAULT_TOLERANCES) -> Verdict:
    '''
    Check sigma_{p,t}(M) <= N^{1/t-1/q} sigma_{p,q}(M) for rank(M) <= N.

    With plain=True the left-hand side is the plain Schatten sigma_t(M).
    '''
    if not 0 < t <= q:
        raise ParameterError(f'Downgrade needs 0 < t <= q, got t={t}, q={q}')
    if not plain and q > p:
        raise ParameterError(f'Downgrade needs q <= p, got p={p}, q={q}')

    rank = numerical_rank(m, tol=tol)
    if rank > rank_bound:
        raise RankPreconditionError(f'rank {rank} exceeds the bound {rank_bound}')

    s = singular_values(m, tol=tol)
    left = SchattenParams.plain(t) if plain else SchattenParams(p, t)
    lhs = weighted_quasinorm(s, left.p, left.q)
    factor = float(rank_bound) ** float(recip(t) - recip(q)) if rank_bound > 0 else 0.0
    rhs = factor * weighted_quasinorm(s, p, q)

    return Verdict.compare('rank downgrade', lhs, rhs, 'finite-rank index downgrade',
                           note=f'N={rank_bound}, rank={rank}', slack=tol.certificate_slack)
