#!/usr/bin/env python3

from fractions import Fraction
import math
import unittest

import numpy as np

from lsfact import (LorentzParams, ParameterError, RankPreconditionError, SchattenParams,
                    Verdict, finite_rank_downgrade_check, holder_compose, lorentz_quasinorm,
                    schatten_lorentz_quasinorm, singular_values, weyl_check)

WEYL_GRID = [ (1, 1), (1, Fraction(1, 2)), (2, 1), (2, 2), (Fraction(2, 3), Fraction(1, 2)) ]


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestQuasinorms(unittest.TestCase):
    def test_diagonal(self):
        d = np.array([3.0, -1.0, 2.0, 0.5])
        for p, q in ((1, 1), (2, 1), (Fraction(1, 2), Fraction(1, 3))):
            self.assertAlmostEqual(schatten_lorentz_quasinorm(np.diag(d), SchattenParams(p, q)),
                                   lorentz_quasinorm(d, LorentzParams(p, q)), places=12)

    def test_plain(self):
        rng = np.random.default_rng(20)
        a = crandn(rng, 5, 7)
        self.assertAlmostEqual(schatten_lorentz_quasinorm(a, SchattenParams.plain(2)),
                               np.linalg.norm(a), places=10)
        self.assertAlmostEqual(schatten_lorentz_quasinorm(a, SchattenParams.plain(1)),
                               np.linalg.norm(a, 'nuc'), places=10)

    def test_chopped(self):
        s = singular_values(np.diag([1.0, 1e-14]))
        self.assertEqual(s[1], 0.0)

    def test_inf_p_finite_q(self):
        p = SchattenParams(math.inf, 1)
        self.assertAlmostEqual(schatten_lorentz_quasinorm(np.diag([2.0, 1.0]), p), 2.5)


class TestHolder(unittest.TestCase):
    def test_plain(self):
        hc = holder_compose(SchattenParams.plain(1), SchattenParams.plain(1))
        self.assertEqual(hc.result, SchattenParams.plain(Fraction(1, 2)))
        self.assertEqual(hc.constant, 1.0)
        self.assertEqual(hc.certified_constant, 1.0)

    def test_with_hilbert_schmidt(self):
        hc = holder_compose(SchattenParams.plain(2), SchattenParams.plain(1))
        self.assertEqual(hc.result, SchattenParams.plain(Fraction(2, 3)))
        self.assertEqual(hc.constant, 1.0)

    def test_lorentz(self):
        hc = holder_compose(SchattenParams(2, 1), SchattenParams(1, Fraction(1, 2)))
        self.assertEqual(hc.result, SchattenParams(Fraction(2, 3), Fraction(1, 3)))
        self.assertAlmostEqual(hc.constant, 2 ** 1.5)
        self.assertAlmostEqual(hc.certified_constant, 2 ** 3)

    def test_chain_class(self):
        # q >= p: both constants agree
        hc = holder_compose(SchattenParams(1, 2), SchattenParams(1, 2))
        self.assertAlmostEqual(hc.constant, 4.0)
        self.assertAlmostEqual(hc.certified_constant, 4.0)

    def test_infinite(self):
        hc = holder_compose(SchattenParams(math.inf, 1), SchattenParams(2, 2))
        self.assertEqual(hc.result, SchattenParams(2, Fraction(2, 3)))
        self.assertAlmostEqual(hc.constant, 2 ** 0.5)
        self.assertAlmostEqual(hc.certified_constant, 2 ** 1.5)

    def test_composition_bound(self):
        rng = np.random.default_rng(21)
        left, right = SchattenParams(2, 1), SchattenParams(1, Fraction(1, 2))
        hc = holder_compose(left, right)
        for _ in range(50):
            x = crandn(rng, 6, 6)
            y = crandn(rng, 6, 6)
            lhs = schatten_lorentz_quasinorm(x @ y, hc.result)
            rhs = schatten_lorentz_quasinorm(x, left) * schatten_lorentz_quasinorm(y, right)
            self.assertLessEqual(lhs, hc.certified_constant * rhs * (1 + 1e-12))

    def test_constant_when_q_above_p(self):
        rng = np.random.default_rng(23)
        pairs = [ (SchattenParams(1, 2), SchattenParams(1, 2)),
                  (SchattenParams.plain(2), SchattenParams(1, 2)),
                  (SchattenParams(2, 4), SchattenParams(Fraction(1, 2), 1)) ]
        for i in range(500):
            left, right = pairs[i % len(pairs)]
            hc = holder_compose(left, right)
            self.assertGreaterEqual(hc.result.q, hc.result.p)
            self.assertEqual(hc.constant, hc.certified_constant)

            k = 1 + i % 8
            x = crandn(rng, 8, k) @ crandn(rng, k, 8)
            y = crandn(rng, 8, 8)
            lhs = schatten_lorentz_quasinorm(x @ y, hc.result)
            rhs = schatten_lorentz_quasinorm(x, left) * schatten_lorentz_quasinorm(y, right)
            self.assertLessEqual(lhs, hc.constant * rhs * (1 + 1e-12), i)

    def test_plain_constant_is_one(self):
        rng = np.random.default_rng(24)
        grid = [ (2, 2), (1, 2), (1, 1), (Fraction(1, 2), 1), (2, Fraction(2, 3)) ]
        for i in range(500):
            p, p2 = grid[i % len(grid)]
            left, right = SchattenParams.plain(p), SchattenParams.plain(p2)
            hc = holder_compose(left, right)
            self.assertEqual(hc.constant, 1.0)

            k = 1 + i % 8
            x = crandn(rng, 8, 8)
            y = crandn(rng, 8, k) @ crandn(rng, k, 8)
            lhs = schatten_lorentz_quasinorm(x @ y, hc.result)
            rhs = schatten_lorentz_quasinorm(x, left) * schatten_lorentz_quasinorm(y, right)
            self.assertLessEqual(lhs, rhs * (1 + 1e-9), i)


class TestWeyl(unittest.TestCase):
    def test_random(self):
        rng = np.random.default_rng(22)
        for i in range(200):
            n = 1 + i % 12
            a = crandn(rng, n, n)
            if i % 5 == 0:
                a = a[:, :1] @ a[:1, :]
            for p, q in WEYL_GRID:
                v = weyl_check(a, SchattenParams(p, q))
                self.assertTrue(v.holds, (i, p, q, v))

    def test_normal_is_equality(self):
        v = weyl_check(np.diag([3.0, -2.0, 1j]), SchattenParams.plain(1))
        self.assertAlmostEqual(v.ratio, 1.0)

    def test_q_above_p(self):
        with self.assertRaises(ParameterError):
            weyl_check(np.eye(2), SchattenParams(1, 2))


class TestDowngrade(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(23)
        self.m = crandn(rng, 6, 3) @ crandn(rng, 3, 6)

    def test_plain(self):
        v = finite_rank_downgrade_check(self.m, 1, 1, Fraction(1, 2), 3, plain=True)
        self.assertTrue(v.holds)

    def test_lorentz(self):
        v = finite_rank_downgrade_check(self.m, 1, Fraction(1, 2), Fraction(1, 3), 4)
        self.assertTrue(v.holds)

    def test_t_equals_q(self):
        v = finite_rank_downgrade_check(self.m, 1, 1, 1, 3)
        self.assertAlmostEqual(v.ratio, 1.0)

    def test_rank_bound(self):
        with self.assertRaises(RankPreconditionError):
            finite_rank_downgrade_check(self.m, 1, 1, Fraction(1, 2), 2)

    def test_random_spectra(self):
        rng = np.random.default_rng(24)
        grid = [ (1, 1, Fraction(1, 2)), (2, 1, Fraction(1, 3)), (3, 2, 1),
                 (Fraction(1, 2), Fraction(1, 2), Fraction(1, 4)) ]
        for i in range(200):
            n = 1 + i % 10
            m = np.diag(np.sort(rng.exponential(size=n))[::-1])
            for p, q, t in grid:
                self.assertTrue(finite_rank_downgrade_check(m, p, q, t, n).holds, (i, p, q, t))

    def test_t_above_q(self):
        with self.assertRaises(ParameterError):
            finite_rank_downgrade_check(self.m, 1, 1, 2, 3)


class TestVerdict(unittest.TestCase):
    def test_ratio(self):
        self.assertEqual(Verdict.compare('x', 1.0, 2.0).ratio, 0.5)
        self.assertEqual(Verdict.compare('x', 0.0, 0.0).ratio, 0.0)
        self.assertFalse(Verdict.compare('x', 1.0, 0.0).holds)

    def test_slack(self):
        self.assertTrue(Verdict.compare('x', 1 + 1e-12, 1.0).holds)
        self.assertFalse(Verdict.compare('x', 1.01, 1.0).holds)


if __name__ == '__main__':
    unittest.main()
