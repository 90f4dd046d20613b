#!/usr/bin/env python3

from fractions import Fraction
import math
import unittest

import numpy as np
import numpy.testing as npt

from lsfact import (ChainMode, DenseOperator, NuclearRep, ParameterError, S2Rep, SeqSpace,
                    SpaceMismatchError, UnsupportedComputationError, canonical_rep_from_matrix,
                    convert_p_to_s2, operator_norm, rep_quasinorm, s2_rep_from_rep,
                    s2_rep_quasinorm, split_factorization_s2, split_factorization_sr,
                    weak_l2_norm)

SR_GRID = [ (1, 1), (1, Fraction(1, 2)), (Fraction(1, 2), Fraction(1, 2)),
            (Fraction(1, 2), Fraction(1, 3)), (Fraction(2, 3), Fraction(1, 3)) ]
S2_GRID = [ Fraction(1, 2), 1, Fraction(3, 2), 2 ]


def diagonal_rep(d, cls=NuclearRep, target_p=1):
    n = len(d)
    eye = np.eye(n)
    return cls(d, eye, eye, SeqSpace(n, 1), SeqSpace(n, target_p))


def random_coefficients(rng, n):
    d = np.sort(rng.exponential(size=n))[::-1]
    if n > 2 and rng.random() < 0.2:
        d[-1] = 0
    return d


class TestRepresentations(unittest.TestCase):
    def test_svd_rep(self):
        m = DenseOperator.diagonal([1.0, 2.0])
        rep = canonical_rep_from_matrix(m)
        npt.assert_allclose(rep.a, [2, 1])
        npt.assert_allclose(rep.matrix.entries, m.entries, atol=1e-15)
        npt.assert_allclose(np.abs(rep.xprime), [[0, 1], [1, 0]], atol=1e-15)

    def test_nuclear_norm(self):
        rng = np.random.default_rng(30)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(a))
        self.assertAlmostEqual(rep_quasinorm(rep, 1, 1), np.linalg.norm(a, 'nuc'), places=10)
        npt.assert_allclose(rep.matrix.entries, a, atol=1e-12)

    def test_column_rep(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((4, 5))
        a[:, 2] = 0
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(a, 1, 1))
        self.assertEqual(len(rep), 4)
        npt.assert_allclose(rep.a, np.sort(np.abs(a).sum(axis=0))[::-1][:4])
        npt.assert_allclose(rep.matrix.entries, a, atol=1e-15)

    def test_zero_matrix(self):
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(np.zeros((3, 3)), 1, 1))
        self.assertEqual(len(rep), 0)
        self.assertEqual(rep_quasinorm(rep, 1, 1), 0.0)
        npt.assert_array_equal(rep.matrix.entries, np.zeros((3, 3)))

    def test_unsupported(self):
        with self.assertRaises(UnsupportedComputationError):
            canonical_rep_from_matrix(DenseOperator.from_matrix(np.eye(2), 2, 1))

    def test_validation(self):
        eye = np.eye(2)
        with self.assertRaises(ParameterError):
            NuclearRep([1, 2], eye, eye, SeqSpace(2, 1), SeqSpace(2, 1))
        with self.assertRaises(ParameterError):
            NuclearRep([1, -1], eye, eye, SeqSpace(2, 1), SeqSpace(2, 1))
        with self.assertRaises(ParameterError):
            NuclearRep([1, 1], eye, 2 * eye, SeqSpace(2, 1), SeqSpace(2, 1))
        with self.assertRaises(ParameterError):
            S2Rep([1, 1], eye, 2 * eye, SeqSpace(2, 1), SeqSpace(2, 2))

    def test_regimes(self):
        rep = diagonal_rep([1.0])
        with self.assertRaises(ParameterError):
            rep_quasinorm(rep, 2, 1)
        with self.assertRaises(ParameterError):
            rep_quasinorm(rep, Fraction(1, 2), 1)
        with self.assertRaises(ParameterError):
            s2_rep_quasinorm(diagonal_rep([1.0], S2Rep, 2), 3)

    def test_monotone(self):
        rep = diagonal_rep([3.0, 2.0, 1.0])
        for s, r in SR_GRID:
            small = diagonal_rep([2.0, 2.0, 0.5])
            self.assertLessEqual(rep_quasinorm(small, s, r), rep_quasinorm(rep, s, r))

    def test_serialization(self):
        rng = np.random.default_rng(32)
        a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(a))
        back = NuclearRep.from_dict(rep.to_dict())
        npt.assert_allclose(back.matrix.entries, a, atol=1e-12)
        self.assertEqual(back.source, rep.source)

    def test_s2_from_rep(self):
        rng = np.random.default_rng(33)
        a = rng.standard_normal((5, 5))
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(a, 1, 1))
        s2 = s2_rep_from_rep(rep)
        self.assertAlmostEqual(weak_l2_norm(s2.y, s2.target), 1.0, places=10)
        npt.assert_allclose(s2.matrix.entries, a, atol=1e-12)

    def test_convert(self):
        rng = np.random.default_rng(34)
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(a))
        for p, s in ((Fraction(2, 3), 1), (1, 2), (Fraction(1, 2), Fraction(2, 3))):
            s2 = convert_p_to_s2(rep, p, s)
            npt.assert_allclose(s2.matrix.entries, a, atol=1e-10)
            self.assertLessEqual(s2_rep_quasinorm(s2, s),
                                 float(np.sum(rep.a ** float(p)) ** (1 / float(p))) * (1 + 1e-10))

    def test_convert_mismatch(self):
        with self.assertRaises(ParameterError):
            convert_p_to_s2(diagonal_rep([1.0]), 1, 1)


class TestSplitSR(unittest.TestCase):
    def test_spike(self):
        split = split_factorization_sr(diagonal_rep([1.0, 0.0, 0.0]), 1, 1)
        self.assertEqual(split.size, 1)
        self.assertAlmostEqual(split.norm_delta1, split.norm_delta1_bound)

    def test_ones(self):
        s = r = Fraction(1, 2)
        rep = diagonal_rep(np.ones(4))
        self.assertAlmostEqual(rep_quasinorm(rep, s, r), 16.0)
        split = split_factorization_sr(rep, s, r)
        npt.assert_allclose(split.reconstruct(), np.eye(4), atol=1e-14)

    def test_degenerate_class(self):
        split = split_factorization_sr(diagonal_rep([3.0, 2.0, 1.0]), 1, 1)
        self.assertEqual(split.params.p, math.inf)
        self.assertEqual(split.params.q, math.inf)
        npt.assert_allclose(split.d0, np.ones(3))

    def test_rearrangement_gap(self):
        split = split_factorization_sr(diagonal_rep([1.0, 1.0]), 1, Fraction(1, 2))
        self.assertAlmostEqual(split.sigma_delta0, math.sqrt(2) + 0.5)
        self.assertAlmostEqual(split.sigma_delta0_diagonal, 1 + math.sqrt(2) / 2)
        self.assertAlmostEqual(split.sigma_delta0_bound, 1 + math.sqrt(2) / 2)
        self.assertGreater(split.delta0_excess, 1.0)

    def test_zero_rep(self):
        rep = NuclearRep(np.zeros(0), np.zeros((0, 3)), np.zeros((3, 0)),
                         SeqSpace(3, 1), SeqSpace(3, 1))
        split = split_factorization_sr(rep, Fraction(1, 2), Fraction(1, 3))
        self.assertEqual(split.rho, 0.0)
        npt.assert_array_equal(split.reconstruct(), np.zeros((3, 3)))

    def test_negative_eps(self):
        with self.assertRaises(ParameterError):
            split_factorization_sr(diagonal_rep([1.0]), 1, 1, eps=-0.1)

    def test_random_splits(self):
        rng = np.random.default_rng(35)
        for i in range(1000):
            s, r = SR_GRID[i % len(SR_GRID)]
            eps = (0.0, 0.1)[(i // len(SR_GRID)) % 2]
            d = random_coefficients(rng, int(rng.integers(1, 65)))
            rep = diagonal_rep(d)
            split = split_factorization_sr(rep, s, r, eps)

            self.assertLessEqual(split.reconstruction_error, 1e-12)
            grown = (1 + eps) * rep_quasinorm(rep, s, r)
            self.assertLessEqual(split.norm_delta1, grown ** (float(r) / 2) * (1 + 1e-9))
            self.assertLessEqual(split.norm_delta2, grown ** (float(r) / 2) * (1 + 1e-9))
            self.assertLessEqual(split.sigma_delta0_diagonal,
                                 split.sigma_delta0_bound * (1 + 1e-9))
            self.assertLessEqual(operator_norm(split.W), 1 + 1e-12)
            self.assertLessEqual(operator_norm(split.V), 1 + 1e-12)

    def test_general_rep(self):
        rng = np.random.default_rng(36)
        a = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        rep = canonical_rep_from_matrix(DenseOperator.from_matrix(a))
        split = split_factorization_sr(rep, Fraction(2, 3), Fraction(1, 2), 0.05)
        npt.assert_allclose(split.reconstruct(), a, atol=1e-12)


class TestSplitS2(unittest.TestCase):
    def test_known(self):
        d = np.array([1.0, 0.5, 0.25])
        split = split_factorization_s2(diagonal_rep(d, S2Rep, 2), 1)
        npt.assert_allclose(split.d1, np.sqrt(d))
        npt.assert_allclose(split.d0, np.sqrt(d))
        self.assertAlmostEqual(split.sigma_delta0, math.sqrt(1.75))
        self.assertIsNone(split.d2)
        with self.assertRaises(ParameterError):
            _ = split.delta2

    def test_plain_rep_rejected(self):
        with self.assertRaises(SpaceMismatchError):
            split_factorization_s2(diagonal_rep([1.0]), 1)

    def test_random_splits(self):
        rng = np.random.default_rng(37)
        for i in range(1000):
            s = S2_GRID[i % len(S2_GRID)]
            eps = (0.0, 0.1)[(i // len(S2_GRID)) % 2]
            d = random_coefficients(rng, int(rng.integers(1, 65)))
            rep = diagonal_rep(d, S2Rep, 2)
            split = split_factorization_s2(rep, s, eps)

            self.assertEqual(split.mode, ChainMode.S2)
            self.assertLessEqual(split.reconstruction_error, 1e-12)
            grown = (1 + eps) * s2_rep_quasinorm(rep, s)
            self.assertLessEqual(split.norm_delta1, grown ** (float(s) / 2) * (1 + 1e-9))
            self.assertLessEqual(split.sigma_delta0, split.sigma_delta0_bound * (1 + 1e-9))


if __name__ == '__main__':
    unittest.main()
