'''Decreasing rearrangements and Lorentz l_{p,q} quasinorms of finite sequences.'''

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np

from .errors import ParameterError

__all__ = [ 'LorentzParams', 'RearrangedSeq', 'decreasing_rearrangement',
            'lorentz_quasinorm', 'weighted_quasinorm' ]


@dataclass(frozen=True)
class LorentzParams:
    p: float
    q: float

    def __post_init__(self):
        check_exponents(self.p, self.q, allow_inf_p=False)

    @property
    def is_plain(self) -> bool:
        return self.p == self.q

    def __str__(self) -> str:
        return f'({self.p},{self.q})'


def check_exponents(p, q, allow_inf_p: bool):
    if not p > 0 or not q > 0:
        raise ParameterError(f'Lorentz exponents must be positive, got p={p}, q={q}')
    if p == math.inf and q != math.inf and not allow_inf_p:
        raise ParameterError(f'p = inf requires q = inf, got q={q}')


@dataclass(frozen=True)
class RearrangedSeq:
    values: np.ndarray
    original_length: int

    def __len__(self):
        return len(self.values)


def decreasing_rearrangement(seq: Sequence[complex] | np.ndarray) -> RearrangedSeq:
    mod = np.abs(np.asarray(seq, dtype=complex).ravel())
    # stable sort: ties keep the original index order
    order = np.argsort(-mod, kind='stable')
    return RearrangedSeq(mod[order], len(mod))


def weighted_quasinorm(values: np.ndarray, p, q) -> float:
    '''
    Evaluate (sum_n v_n^q n^{q/p-1})^{1/q}, or sup_n v_n n^{1/p} for q = inf, on an
    already non-increasing nonnegative array. p = inf with finite q is accepted here
    (weights n^{-1}).
    '''
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0

    vmax = v[0]
    if vmax == 0:
        return 0.0

    n = np.arange(1, v.size + 1, dtype=float)
    ip = 0.0 if p == math.inf else 1.0 / float(p)

    if q == math.inf:
        return float(np.max(v * n ** ip))

    q = float(q)
    x = v / vmax
    nz = x > 0
    s = np.sum(x[nz] ** q * n[nz] ** (q * ip - 1.0))
    return float(vmax * s ** (1.0 / q))


def lorentz_quasinorm(seq: Sequence[complex] | np.ndarray, params: LorentzParams) -> float:
    if not isinstance(params, LorentzParams):
        raise ParameterError(f'Expected LorentzParams, got {params!r}')

    r = decreasing_rearrangement(seq)
    return weighted_quasinorm(r.values, params.p, params.q)
