"""Internal exact-rational backend.

The public API speaks `fractions.Fraction`; the clearing core runs on
gmpy2's mpq when available (same semantics, roughly an order of magnitude
faster), falling back to Fraction otherwise.
"""
from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    Q = Fraction

Q0 = Q(0)


def to_q(value: Fraction):
    return Q(value.numerator, value.denominator)


def to_fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))
