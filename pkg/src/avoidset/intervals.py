"""Closed intervals with exact rational endpoints.

Used for certified range enclosures of polynomials over axis-aligned boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .polycore import RationalPoly
from .rationals import as_fraction


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> "Interval":
        x = as_fraction(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Interval):
            c = as_fraction(other)
            a, b = self.lo * c, self.hi * c
            return Interval(min(a, b), max(a, b))
        prods = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(prods), max(prods))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k == 0:
            return Interval.point(1)
        a, b = self.lo**k, self.hi**k
        if k % 2 == 0:
            if self.lo <= 0 <= self.hi:
                return Interval(Fraction(0), max(a, b))
            return Interval(min(a, b), max(a, b))
        return Interval(a, b)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))


def poly_range(P: RationalPoly, box: Sequence[Interval]) -> Interval:
    """Enclosure of ``P`` over a box (one Interval per variable).

    Natural interval extension applied term by term; the true range is
    always contained in the result.
    """
    if len(box) != P.num_vars:
        raise ValueError("box dimension does not match the polynomial")
    acc = Interval.point(0)
    cache: dict[tuple[int, int], Interval] = {}
    for mono, c in P.items():
        term = Interval.point(c)
        for k, e in enumerate(mono):
            if e:
                key = (k, e)
                if key not in cache:
                    cache[key] = box[k] ** e
                term = term * cache[key]
        acc = acc + term
    return acc


def box_around(center: Sequence, radius) -> list[Interval]:
    r = as_fraction(radius)
    return [Interval(as_fraction(c) - r, as_fraction(c) + r) for c in center]
