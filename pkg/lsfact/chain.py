'''
Factorization of products of nuclear operators T = T_m ... T_1 through a Hilbert space,
T = B U A, with the Schatten-Lorentz class of U certified by a ledger of measured bounds.
'''

from __future__ import annotations

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (CertificationError, ParameterError, SpaceMismatchError,
                     UnsupportedNormError)
from .helpers import (ChainMode, Exponent, complex_to_json, exponent_from_json,
                      exponent_to_json, from_recip, recip)
from .lorentz import decreasing_rearrangement, weighted_quasinorm
from .matrix import (DenseOperator, SeqSpace, is_diagonal, numerical_rank, operator_norm, svd,
                     vector_norm)
from .nuclear import (NuclearRep, S2Rep, SplitFactorization, check_sr_regime, rep_quasinorm,
                      s2_rep_quasinorm, split_factorization_s2, split_factorization_sr)
from .schatten import (SchattenParams, Verdict, finite_rank_downgrade_check, holder_compose,
                       schatten_lorentz_quasinorm)

__all__ = [ 'ChainLink', 'ChainSpec', 'LedgerRecord', 'FactorTriple', 'GammaDowngrade',
            'exponents_theorem1', 'exponents_theorem3',
            'compose_theorem1', 'compose_single', 'compose_theorem3', 'compose',
            'normalize_factorization', 'make_injective', 'finite_dim_gamma_downgrade' ]

log = logging.getLogger(__name__)


@dataclass
class ChainLink:
    rep: NuclearRep | S2Rep
    s: Exponent
    r: Exponent | None = None

    @property
    def value(self) -> float:
        if self.r is None:
            return s2_rep_quasinorm(self.rep, self.s)
        return rep_quasinorm(self.rep, self.s, self.r)

    def to_dict(self):
        d = { 'rep': self.rep.to_dict(), 's': exponent_to_json(self.s) }
        if self.r is not None:
            d['r'] = exponent_to_json(self.r)
        return d


@dataclass
class ChainSpec:
    '''Links in application order: links[0] acts first.'''
    links: list[ChainLink]
    mode: ChainMode

    def __post_init__(self):
        if not self.links:
            raise ParameterError('A chain needs at least one link')

        for k, link in enumerate(self.links):
            if self.mode is ChainMode.SR:
                if not isinstance(link.rep, NuclearRep) or link.r is None:
                    raise ParameterError(f'Link {k + 1}: SR chains take NuclearRep links with '
                                         '(s, r) exponents')
                check_sr_regime(link.s, link.r)
            else:
                if not isinstance(link.rep, S2Rep) or link.r is not None:
                    raise ParameterError(f'Link {k + 1}: S2 chains take S2Rep links with a '
                                         'single exponent')
                if not 0 < link.s <= 2:
                    raise ParameterError(f'Link {k + 1}: (s;2) exponent must lie in (0, 2], '
                                         f'got {link.s}')

        for k in range(len(self.links) - 1):
            t = self.links[k].rep.target
            s = self.links[k + 1].rep.source
            if t != s:
                raise SpaceMismatchError(f'Link {k + 1} maps into {t} but link {k + 2} '
                                         f'starts from {s}')

    @property
    def m(self) -> int:
        return len(self.links)

    @property
    def source(self) -> SeqSpace:
        return self.links[0].rep.source

    @property
    def target(self) -> SeqSpace:
        return self.links[-1].rep.target

    @property
    def is_square(self) -> bool:
        return self.source == self.target

    @property
    def s_list(self) -> list[Exponent]:
        return [link.s for link in self.links]

    @property
    def r_list(self) -> list[Exponent]:
        return [link.r for link in self.links]

    def rep_values(self) -> list[float]:
        return [link.value for link in self.links]

    def product(self) -> DenseOperator:
        op = self.links[0].rep.matrix
        for link in self.links[1:]:
            op = link.rep.matrix @ op
        return op

    def to_dict(self):
        return { 'mode': self.mode.value, 'links': [link.to_dict() for link in self.links] }

    @classmethod
    def from_dict(cls, d, tol: Tolerances = DEFAULT_TOLERANCES) -> ChainSpec:
        mode = ChainMode(d['mode'])
        rep_cls = NuclearRep if mode is ChainMode.SR else S2Rep
        links = []
        for ld in d['links']:
            r = exponent_from_json(ld['r']) if 'r' in ld else None
            rep = rep_cls.from_dict(ld['rep'], tol)
            links.append(ChainLink(rep, exponent_from_json(ld['s']), r))
        return cls(links, mode)


@dataclass
class LedgerRecord:
    '''
    One certified quantity. 'bound' is built from measured sub-quantities and must hold;
    'claimed' is the same bound written with representation values.
    '''
    desc: str
    params: SchattenParams | None
    constant: float
    measured: float
    bound: float
    claimed: float
    holds: bool = True
    claim_holds: bool = True

    def to_dict(self):
        return { 'desc': self.desc,
                 'params': self.params.to_dict() if self.params else None,
                 'constant': self.constant, 'measured': self.measured,
                 'bound': self.bound, 'claimed': self.claimed,
                 'holds': self.holds, 'claim_holds': self.claim_holds }


class _Ledger:
    def __init__(self, tol: Tolerances):
        self.tol = tol
        self.records: list[LedgerRecord] = []

    def add(self, desc: str, params: SchattenParams | None, constant: float, measured: float,
            bound: float, claimed: float) -> LedgerRecord:
        slack = 1 + self.tol.certificate_slack
        rec = LedgerRecord(desc, params, constant, float(measured), float(bound), float(claimed),
                           holds=bool(measured <= bound * slack),
                           claim_holds=bool(measured <= claimed * slack))
        self.records.append(rec)

        if not rec.holds:
            raise CertificationError(f'{desc}: measured {measured} exceeds the bound {bound}', rec)
        if not rec.claim_holds:
            log.info('%s: measured %g above the representation bound %g', desc, measured,
                     claimed)

        return rec


@dataclass
class FactorTriple:
    A: DenseOperator
    U: DenseOperator
    B: DenseOperator
    params: SchattenParams
    sigma_U: float
    ledger: list[LedgerRecord]
    constant: float
    mode: ChainMode
    rho: list[float]
    eps: float
    gamma_upper: float
    norm_A: float
    norm_B: float
    # pi_2(A) and pi_2(B^*) (SR) / ||B|| (S2) certificates used for normalisation
    a_certificate: float
    b_certificate: float
    injective: bool = False
    reconstruction_error: float = 0.0
    splits: list[SplitFactorization] = field(default_factory=list, repr=False)

    @property
    def gamma_certified(self) -> float:
        return self.norm_A * self.sigma_U * self.norm_B

    @property
    def certified(self) -> bool:
        return all(rec.holds for rec in self.ledger)

    @property
    def claim_holds(self) -> bool:
        '''Every record also sits below its representation-value bound.'''
        return all(rec.claim_holds for rec in self.ledger)

    @property
    def claim_failures(self) -> list[str]:
        return [rec.desc for rec in self.ledger if not rec.claim_holds]

    def product(self) -> np.ndarray:
        return self.B.entries @ self.U.entries @ self.A.entries

    def to_dict(self):
        return { 'mode': self.mode.value,
                 'A': complex_to_json(self.A.entries),
                 'U': complex_to_json(self.U.entries),
                 'B': complex_to_json(self.B.entries),
                 'source': self.A.source.to_dict(), 'target': self.B.target.to_dict(),
                 'params': self.params.to_dict(),
                 'sigma_U': self.sigma_U, 'constant': self.constant,
                 'rho': list(self.rho), 'eps': self.eps,
                 'gamma_upper': self.gamma_upper, 'gamma_certified': self.gamma_certified,
                 'claim_holds': self.claim_holds,
                 'norm_A': self.norm_A, 'norm_B': self.norm_B,
                 'injective': self.injective,
                 'reconstruction_error': self.reconstruction_error,
                 'ledger': [rec.to_dict() for rec in self.ledger] }


@dataclass
class GammaDowngrade:
    value: float
    factor: float
    rank: int
    t: Exponent
    verdict: Verdict


def exponents_theorem1(s_list: list[Exponent], r_list: list[Exponent]) -> tuple[Exponent, Exponent]:
    m = len(s_list)
    if m == 0 or len(r_list) != m:
        raise ParameterError(f'Need matching non-empty exponent lists, got {s_list}, {r_list}')

    shift = recip(2) * (m + 1)
    si = sum(recip(s) for s in s_list)
    ri = sum(recip(r) for r in r_list)

    # one link: the class of D0, with s = 1 or r = 1 landing on an infinite index
    if m == 1:
        if not si >= shift or not ri >= shift:
            raise ParameterError(f'Need 1/s >= 1 and 1/r >= 1, got {si}, {ri}')
        return from_recip(si - shift), from_recip(ri - shift)

    if not si > shift or not ri > shift:
        raise ParameterError(f'Need sum 1/s_k > (m+1)/2 and sum 1/r_k > (m+1)/2, got '
                             f'{si}, {ri} against {shift}')

    return from_recip(si - shift), from_recip(ri - shift)


def exponents_theorem3(s_list: list[Exponent]) -> Exponent:
    if not s_list:
        raise ParameterError('Need a non-empty exponent list')

    si = sum(recip(s) for s in s_list)
    if not si > recip(2):
        raise ParameterError(f'Need sum 1/s_k > 1/2, got {si}')

    return from_recip(si - recip(2))


def _same_exponent(a: Exponent, b: Exponent) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return a == b or math.isclose(a, b, rel_tol=1e-12)
    return a == b


def _sigma(op: DenseOperator | np.ndarray, params: SchattenParams, tol: Tolerances) -> float:
    m = op.entries if isinstance(op, DenseOperator) else op
    if is_diagonal(m):
        k = min(m.shape)
        vals = decreasing_rearrangement(m[np.arange(k), np.arange(k)]).values
        return weighted_quasinorm(vals, params.p, params.q)
    if params.p == 2 and params.q == 2:
        return float(np.linalg.norm(m))
    return schatten_lorentz_quasinorm(m, params, tol=tol)


def _measured_norm(op: DenseOperator, fallback: float) -> float:
    try:
        return operator_norm(op)
    except UnsupportedNormError:
        return fallback


def _check_reconstruction(ft: FactorTriple, target: np.ndarray, tol: Tolerances):
    err = float(np.linalg.norm(ft.product() - target))
    scale = 1 + float(np.linalg.norm(target))
    ft.reconstruction_error = err / scale
    if err > tol.chain_reconstruction * scale:
        raise CertificationError(f'B U A differs from the chain product by {err} '
                                 f'(Frobenius, scale {scale})',
                                 { 'measured': err, 'bound': tol.chain_reconstruction * scale })


def _grown(rho: list[float], eps: float) -> float:
    return float(np.prod([(1 + eps) * r for r in rho]))


def _outer_factors(first: SplitFactorization, last: SplitFactorization, ledger: _Ledger,
                   tol: Tolerances):
    '''A = D1 W of the first link and B = V D2 (SR) / V (S2) of the last one.'''
    A = DenseOperator(first.d1[:, None] * first.W.entries, first.W.source,
                      SeqSpace(first.size, 2))
    a_cert = float(vector_norm(first.d1, 2)) * first.norm_W
    norm_A = _measured_norm(A, a_cert)
    ledger.add('||A|| = ||D1 W|| of link 1', None, 1.0, norm_A, a_cert, first.norm_delta1_bound)

    if last.d2 is not None:
        B = DenseOperator(last.V.entries * last.d2, SeqSpace(last.size, 2), last.V.target)
        b_cert = float(vector_norm(last.d2, 2)) * last.norm_V
        b_claim = last.norm_delta2_bound
        desc = '||B|| = ||V D2|| of the last link'
    else:
        B = DenseOperator(last.V.entries, SeqSpace(last.size, 2), last.V.target)
        b_cert = last.norm_V
        b_claim = 1.0
        desc = '||B|| = ||V|| of the last link'
    norm_B = _measured_norm(B, b_cert)
    ledger.add(desc, None, 1.0, norm_B, b_cert, b_claim)

    return A, norm_A, a_cert, B, norm_B, b_cert


def compose_single(rep: NuclearRep, s: Exponent, r: Exponent, eps: float = 0.0,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> FactorTriple:
    '''
    One link: A = D1 W, U = D0, B = V D2. U is certified in the class S_{q,v} of D0,
    1/q = 1/s - 1, 1/v = 1/r - 1.
    '''
    split = split_factorization_sr(rep, s, r, eps, tol=tol)
    ledger = _Ledger(tol)

    A, norm_A, a_cert, B, norm_B, b_cert = _outer_factors(split, split, ledger, tol)

    U = split.delta0
    params = split.params
    q, v = exponents_theorem1([s], [r])
    if not (_same_exponent(params.p, q) and _same_exponent(params.q, v)):
        raise CertificationError(f'Split class {params} differs from S({q},{v})', params)

    sigma_U = split.sigma_delta0
    ledger.add(f'sigma{params}(D0)', params, 1.0, sigma_U, sigma_U, split.sigma_delta0_bound)

    ft = FactorTriple(A, U, B, params, sigma_U, ledger.records, 1.0, ChainMode.SR,
                      [split.rho], eps, (1 + eps) * split.rho, norm_A, norm_B, a_cert, b_cert,
                      splits=[split])
    _check_reconstruction(ft, rep.matrix.entries, tol)

    log.debug('single link: sigma_U=%g gamma_upper=%g', sigma_U, ft.gamma_upper)

    return ft


def compose_theorem1(chain: ChainSpec, eps: float = 0.0,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> FactorTriple:
    if chain.mode is not ChainMode.SR:
        raise ParameterError(f'Expected an SR chain, got {chain.mode.value}')
    if chain.m < 2:
        raise ParameterError('Chains of length 1 go through compose_single')

    s_fin, r_fin = exponents_theorem1(chain.s_list, chain.r_list)

    splits = [split_factorization_sr(link.rep, link.s, link.r, eps, tol=tol)
              for link in chain.links]
    ledger = _Ledger(tol)
    constant = 1.0
    plain2 = SchattenParams.plain(2)

    A, norm_A, a_cert, B, norm_B, b_cert = _outer_factors(splits[0], splits[-1], ledger, tol)

    # seams U_{k-1} = D1^(k) W_k V_{k-1} D2^(k-1) D0^(k-1)
    seams = []
    for k in range(1, chain.m):
        prev = splits[k - 1]
        cur = splits[k]

        wv = cur.W.entries @ prev.V.entries
        s_mat = cur.d1[:, None] * wv * prev.d2
        sig2 = float(np.linalg.norm(s_mat))
        ledger.add(f'seam {k}: sigma_2(D1 W V D2)', plain2, 1.0, sig2,
                   float(vector_norm(cur.d1, 2)) * float(np.max(np.abs(wv), initial=0.0))
                   * float(vector_norm(prev.d2, 2)),
                   cur.norm_delta1_bound * prev.norm_delta2_bound)
        claim_s = cur.norm_delta1_bound * prev.norm_delta2_bound

        hc = holder_compose(plain2, prev.params)
        u_mat = s_mat * prev.d0
        sig_u = _sigma(u_mat, hc.result, tol)
        rec = ledger.add(f'seam {k}: sigma{hc.result}(U_{k})', hc.result, hc.constant, sig_u,
                         hc.certified_constant * sig2 * prev.sigma_delta0,
                         hc.constant * claim_s * prev.sigma_delta0_bound)
        constant *= hc.constant
        seams.append((u_mat, hc.result, sig_u, rec.claimed))

    # left fold U_{m-1} ... U_1
    p_mat, p_params, p_sig, p_claim = seams[0]
    for k in range(1, len(seams)):
        u_mat, u_params, u_sig, u_claim = seams[k]
        hc = holder_compose(u_params, p_params)
        p_mat = u_mat @ p_mat
        sig = _sigma(p_mat, hc.result, tol)
        rec = ledger.add(f'fold U_{k + 1}...U_1: sigma{hc.result}', hc.result, hc.constant, sig,
                         hc.certified_constant * u_sig * p_sig,
                         hc.constant * u_claim * p_claim)
        constant *= hc.constant
        p_params, p_sig, p_claim = hc.result, sig, rec.claimed

    # final join with D0^(m)
    last = splits[-1]
    hc = holder_compose(last.params, p_params)
    u_mat = last.d0[:, None] * p_mat
    sigma_U = _sigma(u_mat, hc.result, tol)
    ledger.add(f'U = D0^({chain.m}) U_{chain.m - 1}...U_1: sigma{hc.result}', hc.result,
               hc.constant, sigma_U, hc.certified_constant * last.sigma_delta0 * p_sig,
               hc.constant * last.sigma_delta0_bound * p_claim)
    constant *= hc.constant

    if not (_same_exponent(hc.result.p, s_fin) and _same_exponent(hc.result.q, r_fin)):
        raise CertificationError(f'Composed class {hc.result} differs from '
                                 f'S({s_fin},{r_fin})', hc)

    rho = [sp.rho for sp in splits]
    U = DenseOperator(u_mat, SeqSpace(splits[0].size, 2), SeqSpace(last.size, 2))
    ft = FactorTriple(A, U, B, SchattenParams(s_fin, r_fin), sigma_U, ledger.records, constant,
                      ChainMode.SR, rho, eps, constant * _grown(rho, eps), norm_A, norm_B,
                      a_cert, b_cert, splits=splits)
    _check_reconstruction(ft, chain.product().entries, tol)

    log.debug('sr chain m=%d: class %s sigma_U=%g constant=%g gamma_upper=%g', chain.m,
              ft.params, sigma_U, constant, ft.gamma_upper)

    return ft


def compose_theorem3(chain: ChainSpec, eps: float = 0.0,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> FactorTriple:
    '''U = D0^(m) (D1^(m) W^(m) V^(m-1)) ... (D1^(2) W^(2) V^(1)) D0^(1); every constant is 1.'''
    if chain.mode is not ChainMode.S2:
        raise ParameterError(f'Expected an S2 chain, got {chain.mode.value}')

    s_fin = exponents_theorem3(chain.s_list)

    splits = [split_factorization_s2(link.rep, link.s, eps, tol=tol) for link in chain.links]
    ledger = _Ledger(tol)
    plain2 = SchattenParams.plain(2)

    A, norm_A, a_cert, B, norm_B, b_cert = _outer_factors(splits[0], splits[-1], ledger, tol)

    first = splits[0]
    p_mat = np.diag(first.d0).astype(complex)
    p_params = first.params
    p_sig = first.sigma_delta0
    p_claim = first.sigma_delta0_bound
    ledger.add(f'sigma{p_params}(D0^(1))', p_params, 1.0, p_sig, p_sig, p_claim)

    for k in range(1, chain.m):
        prev = splits[k - 1]
        cur = splits[k]

        wv = cur.W.entries @ prev.V.entries
        s_mat = cur.d1[:, None] * wv
        sig2 = float(np.linalg.norm(s_mat))
        # ||W V||_{2 -> inf} is the largest row l_2 norm
        wv_norm = float(np.max(vector_norm(wv, 2, axis=1), initial=0.0))
        ledger.add(f'seam {k}: sigma_2(D1 W V)', plain2, 1.0, sig2,
                   float(vector_norm(cur.d1, 2)) * wv_norm, cur.norm_delta1_bound)

        hc = holder_compose(plain2, p_params)
        p_mat = s_mat @ p_mat
        sig = _sigma(p_mat, hc.result, tol)
        rec = ledger.add(f'fold seam {k}: sigma{hc.result}', hc.result, hc.constant, sig,
                         hc.certified_constant * sig2 * p_sig,
                         hc.constant * cur.norm_delta1_bound * p_claim)
        p_params, p_sig, p_claim = hc.result, sig, rec.claimed

        hc = holder_compose(cur.params, p_params)
        p_mat = cur.d0[:, None] * p_mat
        sig = _sigma(p_mat, hc.result, tol)
        rec = ledger.add(f'fold D0^({k + 1}): sigma{hc.result}', hc.result, hc.constant, sig,
                         hc.certified_constant * cur.sigma_delta0 * p_sig,
                         hc.constant * cur.sigma_delta0_bound * p_claim)
        p_params, p_sig, p_claim = hc.result, sig, rec.claimed

    if not (_same_exponent(p_params.p, s_fin) and p_params.is_plain):
        raise CertificationError(f'Composed class {p_params} differs from S({s_fin})', p_params)

    rho = [sp.rho for sp in splits]
    U = DenseOperator(p_mat, SeqSpace(first.size, 2), SeqSpace(splits[-1].size, 2))
    ft = FactorTriple(A, U, B, SchattenParams.plain(s_fin), p_sig, ledger.records, 1.0,
                      ChainMode.S2, rho, eps, _grown(rho, eps), norm_A, norm_B, a_cert, b_cert,
                      splits=splits)
    _check_reconstruction(ft, chain.product().entries, tol)

    log.debug('s2 chain m=%d: class %s sigma_U=%g gamma_upper=%g', chain.m, ft.params,
              p_sig, ft.gamma_upper)

    return ft


def compose(chain: ChainSpec, eps: float = 0.0,
            tol: Tolerances = DEFAULT_TOLERANCES) -> FactorTriple:
    if chain.mode is ChainMode.S2:
        return compose_theorem3(chain, eps, tol=tol)
    if chain.m == 1:
        link = chain.links[0]
        return compose_single(link.rep, link.s, link.r, eps, tol=tol)
    return compose_theorem1(chain, eps, tol=tol)


def _rebuild(ft: FactorTriple, A: DenseOperator, U: DenseOperator, B: DenseOperator,
             record: LedgerRecord, tol: Tolerances, **changes) -> FactorTriple:
    sigma_U = _sigma(U, ft.params, tol)
    return replace(ft, A=A, U=U, B=B, sigma_U=sigma_U, ledger=ft.ledger + [record], **changes)


def normalize_factorization(ft: FactorTriple, delta: float = 0.0,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> FactorTriple:
    '''
    Rescale to pi_2(A) <= 1 and pi_2(B^*) <= 1 (SR) or ||B|| = 1 (S2), moving both scalars
    into U. The product is unchanged.
    '''
    if delta < 0:
        raise ParameterError(f'delta must be nonnegative, got {delta}')

    alpha = ft.a_certificate
    beta = ft.b_certificate
    if alpha == 0 or beta == 0:
        raise ParameterError(f'Degenerate factorization: certificates alpha={alpha}, '
                             f'beta={beta}')

    A = DenseOperator(ft.A.entries / alpha, ft.A.source, ft.A.target)
    B = DenseOperator(ft.B.entries / beta, ft.B.source, ft.B.target)
    U = DenseOperator(ft.U.entries * (alpha * beta), ft.U.source, ft.U.target)

    ledger = _Ledger(tol)
    sigma = _sigma(U, ft.params, tol)
    ledger.add(f'normalized sigma{ft.params}(U)', ft.params, ft.constant, sigma,
               alpha * beta * ft.sigma_U, (1 + delta) * ft.gamma_upper)

    out = _rebuild(ft, A, U, B, ledger.records[0], tol,
                   norm_A=ft.norm_A / alpha, norm_B=ft.norm_B / beta,
                   a_certificate=1.0, b_certificate=1.0)

    drift = float(np.linalg.norm(out.product() - ft.product()))
    if drift > tol.chain_reconstruction * (1 + float(np.linalg.norm(ft.product()))):
        raise CertificationError(f'Normalisation changed the product by {drift}')

    return out


def _range_basis(m: np.ndarray, tol: Tolerances) -> np.ndarray:
    sp = svd(m, tol=tol)
    if sp.values.size == 0 or sp.values[0] == 0:
        return sp.left[:, :0]
    k = int(np.count_nonzero(sp.values > tol.rank_rtol * sp.values[0]))
    return sp.left[:, :k]


def make_injective(ft: FactorTriple, tol: Tolerances = DEFAULT_TOLERANCES) -> FactorTriple:
    '''
    Restrict the middle space to the part of range(U A) that B does not annihilate: B' is
    injective and B'(H') = T(X).
    '''
    ua = ft.U.entries @ ft.A.entries
    q1 = _range_basis(ua, tol)

    bq = ft.B.entries @ q1
    k = 0
    if q1.shape[1]:
        sp = svd(bq, tol=tol)
        if sp.values.size and sp.values[0] > 0:
            k = int(np.count_nonzero(sp.values > tol.rank_rtol * sp.values[0]))

    if k == 0:
        log.debug('make_injective: zero product, keeping a one-dimensional zero factorization')
        h = SeqSpace(1, 2)
        A = DenseOperator(np.zeros((1, ft.A.source.dim)), ft.A.source, h)
        U = DenseOperator(np.zeros((1, 1)), h, h)
        B = DenseOperator(np.zeros((ft.B.target.dim, 1)), h, ft.B.target)
        injective = False
    else:
        q = q1 @ sp.right[:, :k]
        h = SeqSpace(k, 2)
        A = ft.A
        U = DenseOperator(q.conj().T @ ft.U.entries, ft.U.source, h)
        B = DenseOperator(ft.B.entries @ q, h, ft.B.target)
        injective = True

    sigma = _sigma(U, ft.params, tol)
    ledger = _Ledger(tol)
    ledger.add(f'injective restriction sigma{ft.params}(U)', ft.params, 1.0, sigma,
               ft.sigma_U, ft.gamma_upper)

    norm_B = _measured_norm(B, ft.norm_B)
    out = _rebuild(ft, A, U, B, ledger.records[0], tol, injective=injective,
                   norm_A=_measured_norm(A, ft.norm_A) if k == 0 else ft.norm_A,
                   norm_B=norm_B)

    err = float(np.linalg.norm(out.product() - ft.product()))
    if err > tol.chain_reconstruction * (1 + float(np.linalg.norm(ft.product()))):
        raise CertificationError(f'Injective restriction changed the product by {err}')

    return out


def finite_dim_gamma_downgrade(ft: FactorTriple, t: Exponent,
                               tol: Tolerances = DEFAULT_TOLERANCES) -> GammaDowngrade:
    '''
    rank(T)^{1/t - 1/s} gamma_upper as a bound in the lower class, checked on the injective
    restriction of U (whose rank is rank(T)).
    '''
    s = ft.params.p if ft.mode is ChainMode.S2 else ft.params.q
    if not 0 < t <= s:
        raise ParameterError(f'Downgrade needs 0 < t <= {s}, got t={t}')

    rank = numerical_rank(ft.product(), tol=tol)
    factor = float(rank) ** float(recip(t) - recip(s)) if rank else 0.0

    inj = ft if ft.injective else make_injective(ft, tol=tol)
    if ft.mode is ChainMode.S2:
        verdict = finite_rank_downgrade_check(inj.U, s, s, t, max(rank, 1), plain=True, tol=tol)
    else:
        verdict = finite_rank_downgrade_check(inj.U, ft.params.p, s, t, max(rank, 1), tol=tol)

    if not verdict.holds:
        raise CertificationError(f'Rank downgrade to t={t} failed: {verdict.lhs} > {verdict.rhs}',
                                 verdict)

    return GammaDowngrade(factor * ft.gamma_upper, factor, rank, t, verdict)
