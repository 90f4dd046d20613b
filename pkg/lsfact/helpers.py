from __future__ import annotations

from enum import Enum
from fractions import Fraction
import math
from numbers import Rational
from typing import Any, Union

import numpy as np

__all__ = [ 'ChainMode', 'Exponent', 'recip', 'from_recip', 'exponent_to_json',
            'exponent_from_json', 'complex_to_json', 'complex_from_json' ]

# An exponent is either exact (int / Fraction), a float, or math.inf
Exponent = Union[int, float, Fraction]


class ChainMode(Enum):
    SR = 'SR'
    S2 = 'S2'


def _is_rational(x) -> bool:
    return isinstance(x, Rational)


def recip(x: Exponent) -> Exponent:
    if x == math.inf:
        return 0
    if _is_rational(x):
        return Fraction(1) / Fraction(x)
    return 1.0 / x


def from_recip(y: Exponent) -> Exponent:
    if y == 0:
        return math.inf
    if _is_rational(y):
        y = Fraction(1) / Fraction(y)
        return y.numerator if y.denominator == 1 else y
    return 1.0 / y


def exponent_to_json(x: Exponent) -> Any:
    if x == math.inf:
        return 'inf'
    if isinstance(x, Fraction):
        return f'{x.numerator}/{x.denominator}'
    return x


def exponent_from_json(v: Any) -> Exponent:
    if isinstance(v, str):
        if v == 'inf':
            return math.inf
        return Fraction(v)
    return v


def complex_to_json(z) -> Any:
    a = np.asarray(z)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_to_json(e) for e in a]


def complex_from_json(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    return a[..., 0] + 1j * a[..., 1]
