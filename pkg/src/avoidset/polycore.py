"""Sparse multivariate polynomials with exact rational coefficients.

A polynomial in ``num_vars`` variables is stored as a mapping from exponent
tuples to nonzero :class:`fractions.Fraction` coefficients.  For a
configuration of ``m`` points in R^n the variables are laid out row-major:
variable ``i*n + j`` is coordinate ``j`` of point ``i``.

Text format (one polynomial per string)::

    3/2 * x0^2 * x3 + -1 * x1 + 7

Coefficients are integers or ``p/q``; ``x<i>`` is the variable with index
``i``; ``^<e>`` is omitted for exponent 1.  :meth:`RationalPoly.to_text`
prints the canonical form, which :meth:`RationalPoly.parse` reads back to an
identical polynomial.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from math import factorial, gcd, lcm
from typing import Iterable, Mapping, Sequence

from .rationals import as_fraction, format_rational, parse_rational

Monomial = tuple  # tuple[int, ...] of length num_vars


@total_ordering
class _MinusInfinity:
    """Degree of the zero polynomial.

    Compares below every integer but refuses arithmetic, so a stray
    ``degree + 1`` on the zero polynomial fails loudly.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("avoidset.NEG_INF")

    def __repr__(self):
        return "NEG_INF"

    def __reduce__(self):
        return (_MinusInfinity, ())


NEG_INF = _MinusInfinity()


class RationalPoly:
    __slots__ = ("num_vars", "_terms", "_hash")

    def __init__(self, num_vars: int, terms: Mapping[Monomial, object] | None = None):
        if num_vars < 1:
            raise ValueError("num_vars must be positive")
        clean: dict[Monomial, Fraction] = {}
        for mono, coef in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != num_vars or any(e < 0 for e in mono):
                raise ValueError(f"bad monomial {mono} for {num_vars} variables")
            c = as_fraction(coef)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if not clean[mono]:
                    del clean[mono]
        self.num_vars = num_vars
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, num_vars: int, terms: dict) -> "RationalPoly":
        # trusted constructor: terms already canonical
        p = cls.__new__(cls)
        p.num_vars = num_vars
        p._terms = terms
        p._hash = None
        return p

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int) -> "RationalPoly":
        return cls._raw(num_vars, {})

    @classmethod
    def constant(cls, num_vars: int, value) -> "RationalPoly":
        c = as_fraction(value)
        return cls._raw(num_vars, {(0,) * num_vars: c} if c else {})

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "RationalPoly":
        if not 0 <= index < num_vars:
            raise IndexError(f"variable {index} out of range for {num_vars} variables")
        mono = tuple(1 if k == index else 0 for k in range(num_vars))
        return cls._raw(num_vars, {mono: Fraction(1)})

    @classmethod
    def variables(cls, num_vars: int) -> list["RationalPoly"]:
        return [cls.variable(num_vars, k) for k in range(num_vars)]

    # inspection -------------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.num_vars, Fraction(0))

    @property
    def degree(self):
        """Total degree; :data:`NEG_INF` for the zero polynomial."""
        if not self._terms:
            return NEG_INF
        return max(sum(m) for m in self._terms)

    def has_integer_coefficients(self) -> bool:
        return all(c.denominator == 1 for c in self._terms.values())

    def used_variables(self) -> set[int]:
        return {k for m in self._terms for k, e in enumerate(m) if e}

    # arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "RationalPoly":
        if isinstance(other, RationalPoly):
            if other.num_vars != self.num_vars:
                raise ValueError("polynomials live in different variable spaces")
            return other
        return RationalPoly.constant(self.num_vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return RationalPoly._raw(self.num_vars, out)

    __radd__ = __add__

    def __neg__(self):
        return RationalPoly._raw(self.num_vars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, RationalPoly):
            c = as_fraction(other)
            if not c:
                return RationalPoly.zero(self.num_vars)
            return RationalPoly._raw(self.num_vars, {m: v * c for m, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(mono, 0) + c1 * c2
                if s:
                    out[mono] = s
                else:
                    out.pop(mono, None)
        return RationalPoly._raw(self.num_vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = RationalPoly.constant(self.num_vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, RationalPoly):
            return self.num_vars == other.num_vars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == RationalPoly.constant(self.num_vars, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num_vars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"RationalPoly({self.num_vars}, {self.to_text()!r})"

    def __call__(self, point):
        return poly_eval(self, point)

    # calculus and substitution ---------------------------------------

    def partial(self, var: int) -> "RationalPoly":
        return poly_partial(self, var)

    def substitute(self, images: Sequence["RationalPoly"]) -> "RationalPoly":
        """Compose: replace variable ``k`` by the polynomial ``images[k]``.

        All images must share one variable space, which becomes the result's.
        """
        if len(images) != self.num_vars:
            raise ValueError("need one image polynomial per variable")
        target = images[0].num_vars
        cache: dict[tuple[int, int], RationalPoly] = {}

        def power(k: int, e: int) -> RationalPoly:
            key = (k, e)
            if key not in cache:
                cache[key] = images[k] ** e
            return cache[key]

        acc: dict[Monomial, Fraction] = {}
        for mono, c in self._terms.items():
            term = RationalPoly.constant(target, c)
            for k, e in enumerate(mono):
                if e:
                    term = term * power(k, e)
            for m2, c2 in term._terms.items():
                s = acc.get(m2, 0) + c2
                if s:
                    acc[m2] = s
                else:
                    acc.pop(m2, None)
        return RationalPoly._raw(target, acc)

    def shift(self, center: Sequence) -> "RationalPoly":
        """Return ``delta -> P(center + delta)`` in the same variable count."""
        center = [as_fraction(c) for c in center]
        if len(center) != self.num_vars:
            raise ValueError("center has the wrong length")
        xs = RationalPoly.variables(self.num_vars)
        return self.substitute([x + c for x, c in zip(xs, center)])

    def abs_bound(self, radius) -> Fraction:
        """Upper bound of ``|P(delta)|`` over the cube ``|delta_k| <= radius``.

        Sum over terms of ``|coef| * radius**deg``; exact and conservative.
        """
        rho = as_fraction(radius)
        return sum((abs(c) * rho ** sum(m) for m, c in self._terms.items()), Fraction(0))

    # text format ------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        # graded, then reverse-lex on exponent tuples
        return sorted(self._terms.items(), key=lambda mc: (-sum(mc[0]), tuple(-e for e in mc[0])))

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            factors = [format_rational(c)]
            for k, e in enumerate(mono):
                if e == 1:
                    factors.append(f"x{k}")
                elif e > 1:
                    factors.append(f"x{k}^{e}")
            parts.append(" * ".join(factors))
        return " + ".join(parts)

    __str__ = to_text

    @classmethod
    def parse(cls, text: str, num_vars: int | None = None) -> "RationalPoly":
        return parse_poly(text, num_vars)


# ---------------------------------------------------------------------------
# operations


def poly_eval(P: RationalPoly, point: Sequence) -> Fraction:
    """Exact value of ``P`` at ``point`` (a flat sequence of rationals)."""
    if len(point) != P.num_vars:
        raise ValueError(f"point has {len(point)} coordinates, polynomial has {P.num_vars} variables")
    vals = [as_fraction(v) for v in point]
    total = Fraction(0)
    for mono, c in P.items():
        term = c
        for v, e in zip(vals, mono):
            if e:
                term *= v**e
        total += term
    return total


def poly_partial(P: RationalPoly, var: int) -> RationalPoly:
    if not 0 <= var < P.num_vars:
        raise IndexError(f"variable {var} out of range for {P.num_vars} variables")
    out: dict[Monomial, Fraction] = {}
    for mono, c in P.items():
        e = mono[var]
        if e:
            m2 = mono[:var] + (e - 1,) + mono[var + 1 :]
            out[m2] = c * e
    return RationalPoly._raw(P.num_vars, out)


def poly_degree(P: RationalPoly):
    return P.degree


@dataclass(frozen=True)
class DerivativeChain:
    """``polys[k+1]`` is the partial of ``polys[k]`` in ``var_order[k]``."""

    polys: tuple[RationalPoly, ...]
    var_order: tuple[int, ...]
    monomial: Monomial

    def __len__(self):
        return len(self.polys)

    def constant(self) -> Fraction:
        return self.polys[-1].constant_term()

    def check(self) -> bool:
        """Re-derive every link symbolically and confirm the constant tail."""
        if len(self.polys) != len(self.var_order) + 1:
            return False
        for k, var in enumerate(self.var_order):
            if poly_partial(self.polys[k], var) != self.polys[k + 1]:
                return False
        last = self.polys[-1]
        return last.is_constant() and not last.is_zero()


def top_monomial_chain(P: RationalPoly) -> DerivativeChain:
    """Differentiate ``P`` along one of its top-degree monomials.

    The monomial is the lexicographically smallest exponent vector among
    those of maximal total degree; its variables are taken in ascending
    index order, each repeated per its exponent.  The last polynomial of the
    chain is the nonzero constant ``coef * prod(e!)``.
    """
    if P.is_zero():
        raise ValueError("the zero polynomial has no derivative chain")
    deg = P.degree
    mono = min(m for m in P.terms if sum(m) == deg)
    order = tuple(k for k, e in enumerate(mono) for _ in range(e))
    polys = [P]
    for var in order:
        polys.append(poly_partial(polys[-1], var))
    return DerivativeChain(tuple(polys), order, mono)


def clear_denominators(P: RationalPoly) -> tuple[RationalPoly, Fraction]:
    """Scale ``P`` by the least positive rational giving coprime integer coefficients.

    Returns ``(lam * P, lam)``.
    """
    if P.is_zero():
        return P, Fraction(1)
    den = lcm(*(c.denominator for _, c in P.items()))
    nums = [int(c * den) for _, c in P.items()]
    g = gcd(*nums)
    lam = Fraction(den, g)
    return P * lam, lam


def restrict_to_line(P: RationalPoly, base: Sequence, direction: Sequence) -> list[Fraction]:
    """Coefficients (ascending) of the univariate ``t -> P(base + t*direction)``."""
    t = RationalPoly.variable(1, 0)
    images = [RationalPoly.constant(1, b) + t * as_fraction(e) for b, e in zip(base, direction)]
    uni = P.substitute(images)
    deg = uni.degree
    if deg is NEG_INF:
        return [Fraction(0)]
    coeffs = [Fraction(0)] * (deg + 1)
    for (e,), c in uni.items():
        coeffs[e] = c
    return coeffs


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<var>x(?P<idx>\d+)(?:\s*\^\s*(?P<exp>\d+))?)|(?P<op>[+\-*]))"
)


def parse_poly(text: str, num_vars: int | None = None) -> RationalPoly:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:pos + 12]!r}")
        pos = m.end()
        if m.group("num"):
            tokens.append(("num", parse_rational(m.group("num"))))
        elif m.group("var"):
            tokens.append(("var", (int(m.group("idx")), int(m.group("exp") or 1))))
        else:
            tokens.append(("op", m.group("op")))

    # terms: [sign...] factor (* factor)*
    raw_terms: list[tuple[Fraction, dict[int, int]]] = []
    i = 0
    if not tokens:
        raise ValueError("empty polynomial text")
    while i < len(tokens):
        sign = 1
        while i < len(tokens) and tokens[i][0] == "op" and tokens[i][1] in "+-":
            if tokens[i][1] == "-":
                sign = -sign
            i += 1
        coef = Fraction(sign)
        exps: dict[int, int] = {}
        expect_factor = True
        while i < len(tokens):
            kind, val = tokens[i]
            if expect_factor:
                if kind == "num":
                    coef *= val
                elif kind == "var":
                    idx, e = val
                    exps[idx] = exps.get(idx, 0) + e
                else:
                    raise ValueError(f"unexpected operator {val!r} in polynomial text")
                expect_factor = False
                i += 1
            elif kind == "op" and val == "*":
                expect_factor = True
                i += 1
            elif kind == "op":
                break
            else:
                raise ValueError("missing '*' between factors")
        if expect_factor:
            raise ValueError("polynomial text ends with a dangling operator")
        raw_terms.append((coef, exps))

    max_idx = max((k for _, ex in raw_terms for k in ex), default=-1)
    if num_vars is None:
        num_vars = max(max_idx + 1, 1)
    elif max_idx >= num_vars:
        raise ValueError(f"variable x{max_idx} exceeds num_vars={num_vars}")
    acc: dict[Monomial, Fraction] = {}
    for coef, exps in raw_terms:
        mono = tuple(exps.get(k, 0) for k in range(num_vars))
        acc[mono] = acc.get(mono, Fraction(0)) + coef
    return RationalPoly(num_vars, acc)


def polys_from_points_layout(n: int, m: int) -> list[list[RationalPoly]]:
    """Variables grouped per point: ``out[i][j]`` is coordinate j of point i."""
    nv = n * m
    return [[RationalPoly.variable(nv, i * n + j) for j in range(n)] for i in range(m)]


def flatten(points: Iterable[Sequence]) -> list[Fraction]:
    return [as_fraction(c) for p in points for c in p]


def chain_constant_expected(P: RationalPoly, mono: Monomial) -> Fraction:
    """``coef(mono) * prod(e!)``: the value the chain must end in."""
    c = P.terms[mono]
    for e in mono:
        c *= factorial(e)
    return c
