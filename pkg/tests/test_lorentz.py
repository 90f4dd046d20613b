#!/usr/bin/env python3

from fractions import Fraction
import itertools
import math
import unittest

import numpy as np
import numpy.testing as npt

from lsfact import (LorentzParams, ParameterError, decreasing_rearrangement,
                    lorentz_quasinorm, weighted_quasinorm)


def rearrangement_oracle(x):
    # a*_n = max over n-subsets of the smallest modulus in the subset
    mod = np.abs(np.asarray(x, dtype=complex))
    return np.array([max(min(mod[list(c)]) for c in itertools.combinations(range(len(mod)), n))
                     for n in range(1, len(mod) + 1)])


class TestRearrangement(unittest.TestCase):
    def test_against_subset_oracle(self):
        rng = np.random.default_rng(1)
        for length in range(1, 11):
            x = rng.standard_normal(length) + 1j * rng.standard_normal(length)
            if length > 3:
                x[2] = 0
                x[3] = x[1]
            r = decreasing_rearrangement(x)
            npt.assert_allclose(r.values, rearrangement_oracle(x), rtol=0, atol=1e-15)
            self.assertEqual(r.original_length, length)

    def test_empty(self):
        self.assertEqual(len(decreasing_rearrangement([])), 0)


class TestQuasinorm(unittest.TestCase):
    def test_spike(self):
        self.assertEqual(lorentz_quasinorm([1, 0, 0, 0], LorentzParams(1, 1)), 1.0)

    def test_ones(self):
        for p in (Fraction(1, 2), 1, 2, 3):
            for n in (1, 5, 17):
                v = lorentz_quasinorm(np.ones(n), LorentzParams(p, p))
                self.assertAlmostEqual(v, n ** (1 / float(p)), places=10)

    def test_plain_is_lp(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(12)
        for p in (1, 1.5, 2, 4):
            v = lorentz_quasinorm(x, LorentzParams(p, p))
            self.assertAlmostEqual(v, np.sum(np.abs(x) ** p) ** (1 / p), places=12)

    def test_literal_formula(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(9)
        a = rearrangement_oracle(x)
        n = np.arange(1, 10)
        for p, q in ((1, 2), (2, 1), (Fraction(1, 2), Fraction(1, 3)), (3, 1.5)):
            p_, q_ = float(p), float(q)
            expected = np.sum(a ** q_ * n ** (q_ / p_ - 1)) ** (1 / q_)
            self.assertAlmostEqual(lorentz_quasinorm(x, LorentzParams(p, q)), expected, places=10)

    def test_weak_type(self):
        x = [3, 1, 2, 0.5]
        expected = max(3 * 1, 2 * 2 ** 0.5, 1 * 3 ** 0.5, 0.5 * 2)
        self.assertAlmostEqual(lorentz_quasinorm(x, LorentzParams(2, math.inf)), expected)

    def test_sup_norm(self):
        self.assertEqual(lorentz_quasinorm([1, -5, 2], LorentzParams(math.inf, math.inf)), 5.0)

    def test_inf_p_with_finite_q(self):
        # only the shared evaluator accepts it, with weights 1/n
        v = weighted_quasinorm(np.array([2.0, 1.0]), math.inf, 1)
        self.assertAlmostEqual(v, 2 + 0.5)

    def test_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a = np.sort(rng.exponential(size=8))[::-1]
            b = a * (1 + rng.random(8))
            b = np.sort(b)[::-1]
            for p, q in ((1, 1), (Fraction(1, 2), Fraction(1, 3)), (1, Fraction(1, 2))):
                self.assertLessEqual(lorentz_quasinorm(a, LorentzParams(p, q)),
                                     lorentz_quasinorm(b, LorentzParams(p, q)) * (1 + 1e-12))

    def test_tiny_exponents_do_not_overflow(self):
        x = np.array([1e3, 1e2, 10.0])
        v = lorentz_quasinorm(x, LorentzParams(Fraction(1, 10), Fraction(1, 10)))
        self.assertTrue(math.isfinite(v))

    def test_invalid(self):
        with self.assertRaises(ParameterError):
            LorentzParams(0, 1)
        with self.assertRaises(ParameterError):
            LorentzParams(1, -1)
        with self.assertRaises(ParameterError):
            LorentzParams(math.inf, 2)


if __name__ == '__main__':
    unittest.main()
