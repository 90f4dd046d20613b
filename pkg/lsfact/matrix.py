'''
Dense complex linear algebra: one-sided Jacobi SVD, Hessenberg + shifted QR eigenvalues,
operator norms between finite sequence spaces, 2-summing and weak-l2 norms.
'''

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import logging
import math
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (NumericalFailure, ParameterError, SpaceMismatchError,
                     UnsupportedComputationError, UnsupportedNormError)

__all__ = [ 'SeqSpace', 'DenseOperator', 'SingularSpectrum',
            'vector_norm', 'dual_exponent', 'svd', 'eigenvalues', 'sort_eigenvalues',
            'operator_norm', 'pi2_hilbert', 'pi2_diagonal_from_sup', 'weak_l2_norm',
            'numerical_rank', 'is_diagonal' ]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeqSpace:
    dim: int
    norm_exponent: float = 2

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f'Sequence space dimension must be >= 1, got {self.dim}')
        if not 1 <= self.norm_exponent <= math.inf:
            raise ParameterError(f'Norm exponent must lie in [1, inf], got {self.norm_exponent}')

    @property
    def p(self):
        return self.norm_exponent

    @property
    def dual(self) -> SeqSpace:
        return SeqSpace(self.dim, dual_exponent(self.norm_exponent))

    def norm(self, x) -> float:
        return vector_norm(x, self.norm_exponent)

    def __str__(self) -> str:
        p = 'inf' if self.p == math.inf else f'{self.p:g}'
        return f'l_{p}^{self.dim}'

    def to_dict(self):
        return { 'dim': self.dim, 'p': 'inf' if self.p == math.inf else self.p }

    @classmethod
    def from_dict(cls, d) -> SeqSpace:
        p = d['p']
        return cls(int(d['dim']), math.inf if p == 'inf' else p)


def dual_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1
    return p / (p - 1)


def vector_norm(x, p: float, axis=None):
    a = np.abs(np.asarray(x))
    if p == math.inf:
        return a.max(axis=axis, initial=0.0)
    if p == 1:
        return a.sum(axis=axis)
    if p == 2:
        return np.sqrt((a * a).sum(axis=axis))
    return (a ** p).sum(axis=axis) ** (1.0 / p)


@dataclass
class DenseOperator:
    entries: np.ndarray
    source: SeqSpace
    target: SeqSpace

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2:
            raise ParameterError(f'Operator entries must be a matrix, got {self.entries.shape}')
        if self.entries.shape != (self.target.dim, self.source.dim):
            raise SpaceMismatchError(f'Shape {self.entries.shape} does not match '
                                     f'{self.source} -> {self.target}')

    @classmethod
    def from_matrix(cls, m, source_p: float = 2, target_p: float = 2) -> DenseOperator:
        m = np.atleast_2d(np.asarray(m, dtype=complex))
        return cls(m, SeqSpace(m.shape[1], source_p), SeqSpace(m.shape[0], target_p))

    @classmethod
    def diagonal(cls, d, source_p: float = 2, target_p: float = 2) -> DenseOperator:
        return cls.from_matrix(np.diag(np.asarray(d, dtype=complex)), source_p, target_p)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def is_square(self):
        return self.entries.shape[0] == self.entries.shape[1]

    def __matmul__(self, other: DenseOperator) -> DenseOperator:
        if other.target.dim != self.source.dim:
            raise SpaceMismatchError(f'Cannot compose {self.source}->{self.target} '
                                     f'after {other.source}->{other.target}')
        return DenseOperator(self.entries @ other.entries, other.source, self.target)

    def __repr__(self) -> str:
        return f'DenseOperator({self.source} -> {self.target})'


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, DenseOperator):
        return m.entries
    return np.atleast_2d(np.asarray(m, dtype=complex))


def is_diagonal(m) -> bool:
    a = _as_matrix(m)
    off = a.copy()
    k = min(a.shape)
    off[np.arange(k), np.arange(k)] = 0
    return not np.any(off)


@dataclass
class SingularSpectrum:
    values: np.ndarray
    left: np.ndarray | None = field(default=None, repr=False)
    right: np.ndarray | None = field(default=None, repr=False)

    def reconstruct(self) -> np.ndarray:
        if self.left is None or self.right is None:
            raise ParameterError('Singular vectors were not retained')
        return (self.left * self.values) @ self.right.conj().T


def _complete_orthonormal(u: np.ndarray, filled: np.ndarray) -> np.ndarray:
    # Fill the columns of u not marked in 'filled' with an orthonormal completion
    m = u.shape[0]
    basis = [u[:, j] for j in range(u.shape[1]) if filled[j]]
    candidates = iter(np.eye(m, dtype=complex))
    for j in range(u.shape[1]):
        if filled[j]:
            continue
        for e in candidates:
            v = e.copy()
            for b in basis:
                v -= b * np.vdot(b, v)
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                v /= nv
                u[:, j] = v
                basis.append(v)
                break
    return u


def _jacobi_svd(a: np.ndarray, tol: Tolerances):
    m, n = a.shape
    a = a.copy()
    v = np.eye(n, dtype=complex)
    eps = 4 * max(m, n) * np.finfo(float).eps

    for sweep in range(tol.jacobi_max_sweeps):
        rotated = False

        for i in range(n - 1):
            for j in range(i + 1, n):
                ai = a[:, i]
                aj = a[:, j]
                alpha = np.vdot(ai, ai).real
                beta = np.vdot(aj, aj).real
                gamma = np.vdot(ai, aj)
                g = abs(gamma)

                if g == 0 or g <= eps * math.sqrt(alpha * beta):
                    continue

                rotated = True

                phase = gamma / g
                zeta = (beta - alpha) / (2 * g)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1 + zeta * zeta))
                c = 1 / math.sqrt(1 + t * t)
                s = c * t

                aj_ph = aj * phase.conjugate()
                a[:, i], a[:, j] = c * ai - s * aj_ph, s * ai + c * aj_ph

                vi = v[:, i]
                vj_ph = v[:, j] * phase.conjugate()
                v[:, i], v[:, j] = c * vi - s * vj_ph, s * vi + c * vj_ph

        if not rotated:
            log.debug('jacobi svd %dx%d converged in %d sweeps', m, n, sweep + 1)
            return a, v

    raise NumericalFailure(f'Jacobi SVD did not converge in {tol.jacobi_max_sweeps} sweeps',
                           { 'shape': (m, n), 'sweeps': tol.jacobi_max_sweeps })


def svd(m, keep_vectors: bool = True, tol: Tolerances = DEFAULT_TOLERANCES) -> SingularSpectrum:
    a = _as_matrix(m)

    if not np.all(np.isfinite(a)):
        raise ParameterError('SVD input has non-finite entries')

    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return SingularSpectrum(np.zeros(0), np.zeros((rows, 0)), np.zeros((cols, 0)))

    transposed = rows < cols
    if transposed:
        a = a.conj().T

    w, v = _jacobi_svd(a, tol)

    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind='stable')
    sigma = sigma[order]
    w = w[:, order]
    v = v[:, order]

    if not keep_vectors:
        return SingularSpectrum(sigma)

    filled = sigma > 0
    u = np.zeros_like(w)
    u[:, filled] = w[:, filled] / sigma[filled]
    if not np.all(filled):
        u = _complete_orthonormal(u, filled)

    if transposed:
        return SingularSpectrum(sigma, v, u)

    return SingularSpectrum(sigma, u, v)


def numerical_rank(m, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    s = svd(m, keep_vectors=False, tol=tol).values
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rtol * s[0]))


def _hessenberg(a: np.ndarray) -> np.ndarray:
    h = a.copy()
    n = h.shape[0]

    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0 or np.linalg.norm(x[1:]) == 0:
            continue

        ph = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        x[0] += ph * nx
        x /= np.linalg.norm(x)

        h[k + 1:, :] -= 2 * np.outer(x, x.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2 * np.outer(h[:, k + 1:] @ x, x.conj())
        h[k + 2:, k] = 0

    return h


def _qr_step(h: np.ndarray, lo: int, hi: int, mu: complex):
    # One explicit shifted QR step on the active window h[lo:hi+1, lo:hi+1]
    w = h[lo:hi + 1, lo:hi + 1]
    size = w.shape[0]
    w[np.arange(size), np.arange(size)] -= mu

    rots = []
    for k in range(size - 1):
        x = w[k, k]
        y = w[k + 1, k]
        r = math.hypot(abs(x), abs(y))
        if r == 0:
            c, s = 1.0 + 0j, 0j
        else:
            c, s = x / r, y / r
        rk = w[k, k:].copy()
        rk1 = w[k + 1, k:].copy()
        w[k, k:] = c.conjugate() * rk + s.conjugate() * rk1
        w[k + 1, k:] = -s * rk + c * rk1
        rots.append((c, s))

    for k, (c, s) in enumerate(rots):
        ck = w[:k + 2, k].copy()
        ck1 = w[:k + 2, k + 1].copy()
        w[:k + 2, k] = c * ck + s * ck1
        w[:k + 2, k + 1] = -s.conjugate() * ck + c.conjugate() * ck1

    w[np.arange(size), np.arange(size)] += mu


def _wilkinson_shift(h: np.ndarray, hi: int) -> complex:
    a = h[hi - 1, hi - 1]
    b = h[hi - 1, hi]
    c = h[hi, hi - 1]
    d = h[hi, hi]
    half_tr = (a + d) / 2
    disc = np.sqrt(half_tr * half_tr - (a * d - b * c) + 0j)
    mu1 = half_tr + disc
    mu2 = half_tr - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def sort_eigenvalues(lam) -> np.ndarray:
    '''Non-increasing modulus, ties by decreasing real part, then decreasing imaginary part.'''
    lam = np.asarray(lam, dtype=complex)
    if lam.size == 0:
        return lam
    mod = np.abs(lam)
    scale = mod.max()
    if scale > 0:
        mod = np.round(mod / scale, 12)
    order = np.lexsort((-lam.imag, -lam.real, -mod))
    return lam[order]


def eigenvalues(m, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    a = _as_matrix(m)
    n, n2 = a.shape
    if n != n2:
        raise ParameterError(f'Eigenvalues need a square matrix, got {a.shape}')
    if n == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ParameterError('Eigenvalue input has non-finite entries')

    h = _hessenberg(a)
    small = np.finfo(float).eps * max(np.linalg.norm(h), np.finfo(float).tiny)

    hi = n - 1
    its = 0
    total_its = 0

    while hi > 0:
        lo = hi
        while lo > 0:
            scale = abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])
            if abs(h[lo, lo - 1]) <= max(tol.qr_deflation * scale, small):
                h[lo, lo - 1] = 0
                break
            lo -= 1

        if lo == hi:
            hi -= 1
            its = 0
            continue

        its += 1
        total_its += 1
        if its > tol.qr_max_iter:
            raise NumericalFailure(f'QR iteration stalled in deflation window [{lo}, {hi}]',
                                   { 'window': (lo, hi), 'iterations': its,
                                     'subdiagonal': abs(h[hi, hi - 1]) })

        if its % 10 == 0:
            # exceptional shift
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * np.exp(0.7j * its)
        else:
            mu = _wilkinson_shift(h, hi)

        _qr_step(h, lo, hi, mu)

    log.debug('qr eigenvalues n=%d in %d iterations', n, total_its)

    return sort_eigenvalues(np.diag(h).copy())


def _diagonal_norm(d: np.ndarray, p: float, r: float) -> float:
    # ||diag(d): l_p -> l_r|| = max|d| if p <= r, else ||d||_t with 1/t = 1/r - 1/p
    if p <= r:
        return float(np.max(np.abs(d), initial=0.0))
    ip = 0.0 if p == math.inf else 1.0 / p
    ir = 0.0 if r == math.inf else 1.0 / r
    return float(vector_norm(d, 1.0 / (ir - ip)))


def operator_norm(m: DenseOperator) -> float:
    a = m.entries
    p = m.source.p
    r = m.target.p

    if a.size == 0:
        return 0.0

    if is_diagonal(a):
        k = min(a.shape)
        return _diagonal_norm(a[np.arange(k), np.arange(k)], p, r)

    if p == 1:
        return float(np.max(vector_norm(a, r, axis=0)))

    if r == math.inf:
        return float(np.max(vector_norm(a, dual_exponent(p), axis=1)))

    if p == 2 and r == 2:
        return float(svd(a, keep_vectors=False).values[0])

    raise UnsupportedNormError(f'Operator norm {m.source} -> {m.target} is not computed exactly '
                               'for dense matrices')


def pi2_hilbert(m: DenseOperator) -> float:
    if m.source.p != 2 or m.target.p != 2:
        raise ParameterError(f'pi_2 = sigma_2 only between Hilbert spaces, got '
                             f'{m.source} -> {m.target}')
    return float(np.linalg.norm(m.entries))


def pi2_diagonal_from_sup(d: Sequence[float] | np.ndarray) -> float:
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ParameterError('Diagonal for pi_2 must be nonnegative')
    return float(np.sqrt(np.sum(d * d)))


def _vectors_matrix(vectors, dim: int) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        y = vectors.astype(complex)
    else:
        y = np.column_stack([np.asarray(v, dtype=complex) for v in vectors]) \
            if len(vectors) else np.zeros((dim, 0), dtype=complex)
    if y.shape[0] != dim:
        raise SpaceMismatchError(f'Vectors of length {y.shape[0]} do not live in dimension {dim}')
    return y


def _vertex_max(yt: np.ndarray, points: np.ndarray) -> float:
    # max over rows e of points of ||yt @ e||^2, in chunks
    best = 0.0
    for start in range(0, points.shape[0], 4096):
        chunk = points[start:start + 4096]
        vals = np.abs(chunk @ yt.T) ** 2
        best = max(best, float(vals.sum(axis=1).max()))
    return best


def weak_l2_norm(vectors, space: SeqSpace, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    '''
    sup over the dual unit ball of (sum_n |<y', y_n>|^2)^{1/2}; the vectors are the columns
    of a matrix or a list of arrays.
    '''
    y = _vectors_matrix(vectors, space.dim)
    if y.shape[1] == 0 or not np.any(y):
        return 0.0

    if space.p == 2:
        return float(svd(y, keep_vectors=False, tol=tol).values[0])

    if space.p != 1:
        raise UnsupportedComputationError(f'Weak l2 norm not supported in {space}')

    d = space.dim

    # Tight frame: y y^* = c I, every unimodular y' is extremal
    g = y @ y.conj().T
    c = g[0, 0].real
    if np.allclose(g, c * np.eye(d), rtol=0, atol=1e-12 * max(c, 1e-300)):
        return math.sqrt(c * d)

    yt = y.T

    if np.all(y.imag == 0):
        if d > tol.max_real_vertex_dim:
            raise UnsupportedComputationError(f'Sign-vertex enumeration limited to dimension '
                                              f'{tol.max_real_vertex_dim}, got {d}')
        # first sign fixed by symmetry
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=d - 1)))
        points = np.hstack([np.ones((signs.shape[0], 1)), signs]) if d > 1 else np.ones((1, 1))
        return math.sqrt(_vertex_max(yt, points))

    if d > tol.max_complex_vertex_dim:
        raise UnsupportedComputationError(f'Phase-grid enumeration limited to dimension '
                                          f'{tol.max_complex_vertex_dim}, got {d}')

    # every unimodular point lies within pi/k in phase of a grid point, so the grid maximum
    # is at least cos(pi/k) times the supremum
    k = tol.phase_grid
    phases = np.exp(2j * np.pi * np.arange(k) / k)
    grid = np.array(list(itertools.product(phases, repeat=d - 1)), dtype=complex)
    points = np.hstack([np.ones((grid.shape[0], 1)), grid]) if d > 1 else np.ones((1, 1))
    return math.sqrt(_vertex_max(yt, points)) / math.cos(math.pi / k)
