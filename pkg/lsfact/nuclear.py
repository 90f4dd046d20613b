'''
Finite nuclear representations T = sum_n a_n <x'_n, .> y_n, their quasinorms, and the
diagonal splits T = V D2 D0 D1 W (p-nuclear) and T = V D0 D1 W ((s;2)-nuclear).
'''

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (CertificationError, ParameterError, SpaceMismatchError,
                     UnsupportedComputationError)
from .helpers import ChainMode, Exponent, complex_from_json, complex_to_json, from_recip, recip
from .lorentz import decreasing_rearrangement, weighted_quasinorm
from .matrix import (DenseOperator, SeqSpace, dual_exponent, operator_norm, svd, vector_norm,
                     weak_l2_norm)
from .schatten import SchattenParams

__all__ = [ 'NuclearRep', 'S2Rep', 'SplitFactorization',
            'rep_quasinorm', 's2_rep_quasinorm', 'canonical_rep_from_matrix',
            's2_rep_from_rep', 'convert_p_to_s2',
            'split_factorization_sr', 'split_factorization_s2', 'check_sr_regime',
            'relative_error' ]

log = logging.getLogger(__name__)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    '''||a - b||_F / ||b||_F, or ||a||_F when b vanishes.'''
    diff = float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
    den = float(np.linalg.norm(np.asarray(b)))
    if den == 0:
        return diff
    return diff / den


def _check_coefficients(a: np.ndarray, tol: Tolerances):
    if a.ndim != 1:
        raise ParameterError(f'Coefficients must be a flat list, got shape {a.shape}')
    if not np.all(np.isfinite(a)):
        raise ParameterError('Coefficients must be finite')
    if np.any(a < 0):
        raise ParameterError('Coefficients must be nonnegative')
    if a.size > 1 and np.any(np.diff(a) > tol.unit_norm * a[0]):
        raise ParameterError('Coefficients must be non-increasing')


@dataclass
class _RepBase:
    a: np.ndarray
    xprime: np.ndarray
    y: np.ndarray
    source: SeqSpace
    target: SeqSpace
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).ravel()
        n = self.a.size
        self.xprime = np.asarray(self.xprime, dtype=complex).reshape(n, self.source.dim)
        self.y = np.asarray(self.y, dtype=complex).reshape(self.target.dim, n)

        _check_coefficients(self.a, self.tol)

        norms = vector_norm(self.xprime, dual_exponent(self.source.p), axis=1)
        if np.any(np.abs(norms - 1) > self.tol.unit_norm):
            raise ParameterError(f'Functionals must have unit norm in {self.source.dual}, '
                                 f'got {norms}')

        self._check_vectors()

    def _check_vectors(self):
        raise NotImplementedError()

    def __len__(self):
        return self.a.size

    @property
    def matrix(self) -> DenseOperator:
        return DenseOperator((self.y * self.a) @ self.xprime, self.source, self.target)

    def to_dict(self):
        return { 'source': self.source.to_dict(), 'target': self.target.to_dict(),
                 'a': [float(v) for v in self.a],
                 'xprime': complex_to_json(self.xprime),
                 'y': complex_to_json(self.y) }

    @classmethod
    def from_dict(cls, d, tol: Tolerances = DEFAULT_TOLERANCES):
        source = SeqSpace.from_dict(d['source'])
        target = SeqSpace.from_dict(d['target'])
        a = np.asarray(d['a'], dtype=float)
        xprime = complex_from_json(d['xprime']) if a.size else np.zeros((0, source.dim))
        y = complex_from_json(d['y']) if a.size else np.zeros((target.dim, 0))
        return cls(a, xprime, y, source, target, tol)


@dataclass
class NuclearRep(_RepBase):
    '''Representation with unit functionals x'_n (rows) and unit vectors y_n (columns).'''

    def _check_vectors(self):
        norms = vector_norm(self.y, self.target.p, axis=0)
        if np.any(np.abs(norms - 1) > self.tol.unit_norm):
            raise ParameterError(f'Vectors must have unit norm in {self.target}, got {norms}')


@dataclass
class S2Rep(_RepBase):
    '''Representation whose vector family has weak l_2 norm one.'''

    def _check_vectors(self):
        if self.a.size == 0:
            return
        w = weak_l2_norm(self.y, self.target, tol=self.tol)
        if abs(w - 1) > self.tol.weak_l2:
            raise ParameterError(f'Vector family must have weak l_2 norm 1, got {w}')


def check_sr_regime(s: Exponent, r: Exponent):
    if not 0 < r <= s <= 1:
        raise ParameterError(f'Nuclear exponents need 0 < r <= s <= 1, got s={s}, r={r}')


def _check_s2_regime(s: Exponent):
    if not 0 < s <= 2:
        raise ParameterError(f'(s;2) exponent must lie in (0, 2], got s={s}')


def rep_quasinorm(rep: NuclearRep, s: Exponent, r: Exponent) -> float:
    check_sr_regime(s, r)
    return weighted_quasinorm(rep.a, s, r)


def s2_rep_quasinorm(rep: S2Rep, s: Exponent) -> float:
    _check_s2_regime(s)
    return weighted_quasinorm(rep.a, s, s)


def canonical_rep_from_matrix(m: DenseOperator,
                              tol: Tolerances = DEFAULT_TOLERANCES) -> NuclearRep:
    '''
    SVD representation between l_2 spaces, column representation on an l_1 source.
    Zero terms are left out.
    '''
    source = m.source
    target = m.target

    if source.p == 2 and target.p == 2:
        sp = svd(m, tol=tol)
        keep = sp.values > 0
        return NuclearRep(sp.values[keep], sp.right[:, keep].conj().T, sp.left[:, keep],
                          source, target, tol)

    if source.p == 1:
        cols = m.entries
        norms = vector_norm(cols, target.p, axis=0)
        order = np.argsort(-norms, kind='stable')
        order = order[norms[order] > 0]
        xprime = np.eye(source.dim, dtype=complex)[order]
        y = cols[:, order] / norms[order]
        return NuclearRep(norms[order], xprime, y, source, target, tol)

    raise UnsupportedComputationError(f'No canonical representation for {source} -> {target}')


def s2_rep_from_rep(rep: NuclearRep, tol: Tolerances = DEFAULT_TOLERANCES) -> S2Rep:
    '''Renormalise the unit vectors of a representation to a weak l_2 unit family.'''
    if len(rep) == 0:
        return S2Rep(rep.a, rep.xprime, rep.y, rep.source, rep.target, tol)

    kappa = weak_l2_norm(rep.y, rep.target, tol=tol)
    return S2Rep(rep.a * kappa, rep.xprime, rep.y / kappa, rep.source, rep.target, tol)


def convert_p_to_s2(rep: NuclearRep, p: Exponent, s: Exponent,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> S2Rep:
    '''
    Split a_n = b_n c_n with b = a^{p/s}, c = a^{p/2} and move c into the vectors. The
    resulting ||.||_s value is at most ||a||_p.
    '''
    _check_s2_regime(s)
    lhs = recip(p)
    rhs = recip(s) + recip(2)
    exact = not isinstance(lhs, float) and not isinstance(rhs, float)
    if (lhs != rhs) if exact else not math.isclose(lhs, rhs, rel_tol=1e-12):
        raise ParameterError(f'Need 1/p = 1/s + 1/2, got p={p}, s={s}')

    a = rep.a
    keep = a > 0
    if not np.any(keep):
        return S2Rep(np.zeros(0), np.zeros((0, rep.source.dim)), np.zeros((rep.target.dim, 0)),
                     rep.source, rep.target, tol)

    a = a[keep]
    b = a ** (float(p) / float(s))
    c = a ** (float(p) / 2)
    z = rep.y[:, keep] * c
    kappa = weak_l2_norm(z, rep.target, tol=tol)

    return S2Rep(b * kappa, rep.xprime[keep], z / kappa, rep.source, rep.target, tol)


@dataclass
class SplitFactorization:
    '''
    T = V D2 D0 D1 W (mode SR) or T = V D0 D1 W (mode S2). W maps into l_inf^N, D1 maps
    l_inf^N -> l_2^N, D0 acts on l_2^N, D2 maps l_2^N -> l_1^N and V maps l_1^N (SR) or
    l_2^N (S2) into the target.
    '''
    mode: ChainMode
    W: DenseOperator
    d1: np.ndarray
    d0: np.ndarray
    d2: np.ndarray | None
    V: DenseOperator
    eps: float
    rho: float
    params: SchattenParams

    norm_W: float = 0.0
    norm_V: float = 0.0
    norm_delta1: float = 0.0
    norm_delta1_bound: float = 0.0
    norm_delta2: float = 0.0
    norm_delta2_bound: float = 0.0
    sigma_delta0: float = 0.0
    sigma_delta0_diagonal: float = 0.0
    sigma_delta0_bound: float = 0.0
    reconstruction_error: float = 0.0

    @property
    def size(self) -> int:
        return self.d1.size

    @property
    def delta1(self) -> DenseOperator:
        return DenseOperator.diagonal(self.d1, math.inf, 2)

    @property
    def delta0(self) -> DenseOperator:
        return DenseOperator.diagonal(self.d0, 2, 2)

    @property
    def delta2(self) -> DenseOperator:
        if self.d2 is None:
            raise ParameterError('(s;2) splits have no D2 factor')
        return DenseOperator.diagonal(self.d2, 2, 1)

    @property
    def delta0_excess(self) -> float:
        '''Rearranged sigma(D0) over the certified diagonal-order bound.'''
        if self.sigma_delta0_bound == 0:
            return 0.0
        return self.sigma_delta0 / self.sigma_delta0_bound

    def diagonal_product(self) -> np.ndarray:
        d = self.d1 * self.d0
        if self.d2 is not None:
            d = d * self.d2
        return d

    def reconstruct(self) -> np.ndarray:
        return (self.V.entries * self.diagonal_product()) @ self.W.entries

    def certified_bounds(self):
        return { 'norm_delta1_bound': self.norm_delta1_bound,
                 'norm_delta2_bound': self.norm_delta2_bound if self.d2 is not None else None,
                 'sigma_delta0_bound': self.sigma_delta0_bound,
                 'params': self.params.to_dict() }


def _support(rep: _RepBase):
    '''Positive-coefficient terms; a zero representation keeps one dummy zero term.'''
    keep = rep.a > 0
    if np.any(keep):
        return rep.a[keep], rep.xprime[keep], rep.y[:, keep]

    # unit in every l_p norm
    x = np.zeros((1, rep.source.dim), dtype=complex)
    x[0, 0] = 1
    y = np.zeros((rep.target.dim, 1), dtype=complex)
    y[0, 0] = 1
    return np.zeros(1), x, y


def _diagonal_form(d0: np.ndarray, q: Exponent, v: Exponent) -> float:
    # (sum_n n^{v/q-1} d0_n^v)^{1/v} in the diagonal's own order
    if not np.any(d0):
        return 0.0
    n = np.arange(1, d0.size + 1, dtype=float)
    iq = float(recip(q))
    if v == math.inf:
        return float(np.max(d0 * n ** iq))
    v = float(v)
    scale = float(np.max(d0))
    x = d0 / scale
    nz = x > 0
    return scale * float(np.sum(x[nz] ** v * n[nz] ** (v * iq - 1.0))) ** (1.0 / v)


def _certify(split: SplitFactorization, target: np.ndarray, tol: Tolerances):
    slack = tol.certificate_slack
    # weak l_2 unit families are normalised to tol.weak_l2
    v_slack = tol.weak_l2 if split.mode is ChainMode.S2 else slack
    checks = [
        ('norm_delta1', split.norm_delta1, split.norm_delta1_bound, slack),
        ('sigma_delta0', split.sigma_delta0_diagonal, split.sigma_delta0_bound, slack),
        ('norm_W', split.norm_W, 1.0, slack),
        ('norm_V', split.norm_V, 1.0, v_slack),
    ]
    if split.d2 is not None:
        checks.append(('norm_delta2', split.norm_delta2, split.norm_delta2_bound, slack))

    for name, measured, bound, rel in checks:
        if not measured <= bound * (1 + rel):
            raise CertificationError(f'{split.mode.value} split: {name} = {measured} exceeds '
                                     f'{bound}', { 'name': name, 'measured': measured,
                                                   'bound': bound })

    split.reconstruction_error = relative_error(split.reconstruct(), target)
    if split.reconstruction_error > tol.split_reconstruction:
        raise CertificationError(f'{split.mode.value} split does not reconstruct: relative '
                                 f'error {split.reconstruction_error}',
                                 { 'name': 'reconstruction',
                                   'measured': split.reconstruction_error,
                                   'bound': tol.split_reconstruction })


def split_factorization_sr(rep: NuclearRep, s: Exponent, r: Exponent, eps: float = 0.0,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> SplitFactorization:
    check_sr_regime(s, r)
    if eps < 0:
        raise ParameterError(f'eps must be nonnegative, got {eps}')

    d, xprime, y = _support(rep)
    n = np.arange(1, d.size + 1, dtype=float)
    fs = float(s)
    fr = float(r)

    # 1/q = 1/s - 1, 1/v = 1/r - 1; s = r = 1 gives the degenerate D0 = 1 on the support
    q = from_recip(recip(s) - 1)
    v = from_recip(recip(r) - 1)

    d1 = np.sqrt(n ** (fr / fs - 1) * d ** fr)
    d2 = d1.copy()
    d0 = np.where(d > 0, n ** (1 - fr / fs) * d ** (1 - fr), 0.0)

    rho = weighted_quasinorm(d, s, r)
    grown = (1 + eps) * rho

    W = DenseOperator(xprime, rep.source, SeqSpace(d.size, math.inf))
    V = DenseOperator(y, SeqSpace(d.size, 1), rep.target)
    params = SchattenParams(q, v)

    split = SplitFactorization(ChainMode.SR, W, d1, d0, d2, V, eps, rho, params)
    split.norm_W = operator_norm(W)
    split.norm_V = operator_norm(V)
    split.norm_delta1 = operator_norm(split.delta1)
    split.norm_delta2 = operator_norm(split.delta2)
    split.norm_delta1_bound = grown ** (fr / 2)
    split.norm_delta2_bound = split.norm_delta1_bound
    split.sigma_delta0_diagonal = _diagonal_form(d0, q, v)
    split.sigma_delta0 = weighted_quasinorm(decreasing_rearrangement(d0).values, q, v)
    split.sigma_delta0_bound = grown ** float(fr * recip(v))

    _certify(split, rep.matrix.entries, tol)

    log.debug('sr split N=%d s=%s r=%s rho=%g D0 excess=%g', d.size, s, r, rho,
              split.delta0_excess)

    return split


def split_factorization_s2(rep: S2Rep, s: Exponent, eps: float = 0.0,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> SplitFactorization:
    _check_s2_regime(s)
    if eps < 0:
        raise ParameterError(f'eps must be nonnegative, got {eps}')
    if not isinstance(rep, S2Rep):
        raise SpaceMismatchError(f'Expected an S2Rep, got {type(rep).__name__}')

    d, xprime, y = _support(rep)
    fs = float(s)

    # 1/q = 1/s - 1/2
    q = from_recip(recip(s) - recip(2))
    iq = float(recip(q))

    d1 = d ** (fs / 2)
    d0 = np.where(d > 0, d ** (fs * iq), 0.0)

    rho = weighted_quasinorm(d, s, s)
    grown = (1 + eps) * rho

    W = DenseOperator(xprime, rep.source, SeqSpace(d.size, math.inf))
    V = DenseOperator(y, SeqSpace(d.size, 2), rep.target)
    params = SchattenParams.plain(q)

    split = SplitFactorization(ChainMode.S2, W, d1, d0, None, V, eps, rho, params)
    split.norm_W = operator_norm(W)
    split.norm_V = weak_l2_norm(y, rep.target, tol=tol) if np.any(y) else 0.0
    split.norm_delta1 = float(vector_norm(d1, 2))
    split.norm_delta1_bound = grown ** (fs / 2)
    # d0 is non-increasing, so the diagonal form is the rearranged value
    split.sigma_delta0_diagonal = weighted_quasinorm(d0, q, q)
    split.sigma_delta0 = split.sigma_delta0_diagonal
    split.sigma_delta0_bound = grown ** (fs * iq)

    _certify(split, rep.matrix.entries, tol)

    log.debug('s2 split N=%d s=%s rho=%g', d.size, s, rho)

    return split
