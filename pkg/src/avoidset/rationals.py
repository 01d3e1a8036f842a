"""Exact rational helpers and the ``p/q`` wire format."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

Rational = Fraction
Point = tuple  # tuple of Fraction


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected: they would silently smuggle binary rounding into
    an exact computation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not text:
        raise ValueError("empty rational")
    if "/" in text:
        num, den = text.split("/", 1)
        den_i = int(den)
        if den_i == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        return Fraction(int(num), den_i)
    if any(ch in text for ch in ".eE"):
        # decimal literals are exact in Fraction's own parser
        return Fraction(text)
    return Fraction(int(text))


def format_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def as_point(coords: Iterable) -> tuple:
    return tuple(as_fraction(c) for c in coords)


def format_point(p: Sequence[Fraction]) -> list[str]:
    return [format_rational(c) for c in p]


def sub(p: Sequence[Fraction], q: Sequence[Fraction]) -> tuple:
    return tuple(a - b for a, b in zip(p, q))


def add(p: Sequence[Fraction], q: Sequence[Fraction]) -> tuple:
    return tuple(a + b for a, b in zip(p, q))


def dot(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(p, q)), Fraction(0))


def norm2(p: Sequence[Fraction]) -> Fraction:
    return dot(p, p)


def dist2(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    return norm2(sub(p, q))


def is_square_int(k: int) -> bool:
    return k >= 0 and isqrt(k) ** 2 == k


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a non-negative rational, or None if irrational."""
    if q < 0:
        return None
    a, b = q.numerator, q.denominator
    if is_square_int(a) and is_square_int(b):
        return Fraction(isqrt(a), isqrt(b))
    return None


def nearest_integer_distance(x: Fraction) -> Fraction:
    """Distance from ``x`` to the nearest integer, exactly."""
    lo = x - (x.numerator // x.denominator)
    return min(lo, 1 - lo)


def mpf_to_fraction(x) -> Fraction:
    """Exact conversion of an mpmath mpf (finite) to a Fraction."""
    man, exp = x.man_exp
    if exp >= 0:
        return Fraction(int(man) << int(exp))
    return Fraction(int(man), 1 << int(-exp))
