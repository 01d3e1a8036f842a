"""Catalog of forbidden-configuration polynomials.

Every builder returns :class:`ConfigurationSpec` values whose polynomials
live in ``n*m`` variables (point-major layout, see :mod:`avoidset.polycore`).
Each spec ships a witness tuple (distinct points where every polynomial
vanishes) and an anti-witness (distinct points where one does not), both
checked by evaluation when the spec is built.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable, Sequence

from .polycore import RationalPoly, flatten, polys_from_points_layout, poly_eval
from .rationals import as_fraction, as_point, format_point, format_rational

APPROX_DENOMINATOR = 10**12


@dataclass(frozen=True)
class AffineMap:
    """``x -> matrix @ x + offset`` with rational entries.

    ``exact=False`` marks a rational stand-in for an irrational map; anything
    computed through it is only approximate.
    """

    matrix: tuple
    offset: tuple
    exact: bool = True

    def __post_init__(self):
        mat = tuple(tuple(as_fraction(v) for v in row) for row in self.matrix)
        n = len(mat)
        if any(len(row) != n for row in mat):
            raise ValueError("affine map matrix must be square")
        off = tuple(as_fraction(v) for v in self.offset) if self.offset else (Fraction(0),) * n
        if len(off) != n:
            raise ValueError("offset length does not match the matrix")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "offset", off)

    @property
    def n(self) -> int:
        return len(self.matrix)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), ())

    @classmethod
    def linear(cls, matrix, exact: bool = True) -> "AffineMap":
        return cls(tuple(tuple(row) for row in matrix), (), exact)

    @classmethod
    def rotation(cls, angle: float, scale=1, max_denominator: int = APPROX_DENOMINATOR) -> "AffineMap":
        """Planar rotation-similarity; exact only for multiples of pi/2."""
        quarter = angle / (math.pi / 2)
        if abs(quarter - round(quarter)) < 1e-15:
            k = round(quarter) % 4
            c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][k]
            c, s = Fraction(c), Fraction(s)
            exact = True
        else:
            c = Fraction(math.cos(angle)).limit_denominator(max_denominator)
            s = Fraction(math.sin(angle)).limit_denominator(max_denominator)
            exact = False
        k = as_fraction(scale)
        return cls(((k * c, -k * s), (k * s, k * c)), (), exact)

    def __call__(self, point: Sequence) -> tuple:
        return tuple(
            sum((a * as_fraction(x) for a, x in zip(row, point)), Fraction(0)) + o
            for row, o in zip(self.matrix, self.offset)
        )

    def minus_identity(self) -> "AffineMap":
        mat = tuple(tuple(v - (i == j) for j, v in enumerate(row)) for i, row in enumerate(self.matrix))
        return AffineMap(mat, self.offset, self.exact)

    def negated(self) -> "AffineMap":
        return AffineMap(tuple(tuple(-v for v in row) for row in self.matrix), tuple(-o for o in self.offset), self.exact)

    def determinant(self) -> Fraction:
        return _det(self.matrix)

    def is_identity(self) -> bool:
        return self == AffineMap.identity(self.n)

    def images(self, num_vars: int, base: int) -> list[RationalPoly]:
        """Coordinate polynomials of the map applied to variables ``base..base+n-1``."""
        xs = [RationalPoly.variable(num_vars, base + j) for j in range(self.n)]
        return [
            sum((x * a for x, a in zip(xs, row) if a), RationalPoly.constant(num_vars, o))
            for row, o in zip(self.matrix, self.offset)
        ]


def _det(mat) -> Fraction:
    # fraction-exact Gaussian elimination
    a = [list(map(Fraction, row)) for row in mat]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for k in range(col, n):
                    a[r][k] -= f * a[col][k]
    return det


@dataclass(frozen=True)
class ConfigurationSpec:
    """A forbidden pattern: ``m`` distinct points of R^n where all polys vanish.

    With ``maps`` set, the polynomials are evaluated on the mapped points
    ``(maps[0](x_1), ..., maps[m-1](x_m))``.
    """

    name: str
    n: int
    m: int
    polys: tuple
    maps: tuple | None = None
    witness: tuple | None = None
    anti_witness: tuple | None = None
    params: dict = field(default_factory=dict)
    degenerate: bool = False
    note: str = ""

    def __post_init__(self):
        for P in self.polys:
            if P.num_vars != self.n * self.m:
                raise ValueError(f"{self.name}: polynomial has {P.num_vars} variables, expected {self.n * self.m}")
            if P.is_zero():
                raise ValueError(f"{self.name}: identically zero polynomial")
        if self.maps is not None and len(self.maps) != self.m:
            raise ValueError(f"{self.name}: need one affine map per point")

    @property
    def num_vars(self) -> int:
        return self.n * self.m

    @property
    def exact(self) -> bool:
        return self.maps is None or all(a.exact for a in self.maps)

    @property
    def degree(self) -> int:
        return max(P.degree for P in self.polys)

    def mapped(self, points: Sequence[Sequence]) -> list[tuple]:
        pts = [as_point(p) for p in points]
        if self.maps is None:
            return pts
        return [A(p) for A, p in zip(self.maps, pts)]

    def evaluate(self, points: Sequence[Sequence]) -> tuple:
        if len(points) != self.m:
            raise ValueError(f"{self.name} takes {self.m} points, got {len(points)}")
        flat = flatten(self.mapped(points))
        return tuple(poly_eval(P, flat) for P in self.polys)

    def vanishes(self, points: Sequence[Sequence]) -> bool:
        return all(v == 0 for v in self.evaluate(points))

    def composed(self) -> tuple:
        """Polynomials in the original coordinates (maps substituted in)."""
        if self.maps is None:
            return self.polys
        images: list[RationalPoly] = []
        for i, A in enumerate(self.maps):
            images.extend(A.images(self.num_vars, i * self.n))
        return tuple(P.substitute(images) for P in self.polys)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "m": self.m,
            "degree": self.degree,
            "num_vars": self.num_vars,
            "polys": [P.to_text() for P in self.polys],
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "exact": self.exact,
            "degenerate": self.degenerate,
            "witness": None if self.witness is None else [format_point(p) for p in self.witness],
            "anti_witness": None if self.anti_witness is None else [format_point(p) for p in self.anti_witness],
            "note": self.note,
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, AffineMap):
        return {"matrix": [format_point(r) for r in v.matrix], "offset": format_point(v.offset), "exact": v.exact}
    return v


# ---------------------------------------------------------------------------
# helpers for writing the polynomials


class _Vars:
    """Point-major coordinate variables: ``V[i][j]`` = coordinate j of point i."""

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m
        self.pts = polys_from_points_layout(n, m)
        self.nv = n * m

    def __getitem__(self, i):
        return self.pts[i]

    def diff(self, i: int, j: int) -> list[RationalPoly]:
        return [a - b for a, b in zip(self.pts[i], self.pts[j])]

    def inner(self, u: list[RationalPoly], v: list[RationalPoly]) -> RationalPoly:
        return sum((a * b for a, b in zip(u, v)), RationalPoly.zero(self.nv))

    def norm2(self, u: list[RationalPoly]) -> RationalPoly:
        return self.inner(u, u)

    def const(self, c) -> RationalPoly:
        return RationalPoly.constant(self.nv, c)


def _e(n: int, k: int, scale=1) -> tuple:
    return tuple(Fraction(scale) if j == k else Fraction(0) for j in range(n))


def _pt(n: int, *coords) -> tuple:
    """Embed leading coordinates into R^n (padding with zeros, truncating extras)."""
    vals = [Fraction(c) for c in coords][:n]
    return tuple(vals + [Fraction(0)] * (n - len(vals)))


def _distinct(points: Sequence[tuple]) -> bool:
    return len(set(points)) == len(points)


def integer_sum_of_squares(target: int, k: int) -> tuple | None:
    """Integer vector of length ``k`` whose squares sum to ``target`` (search)."""
    if target < 0 or k < 1:
        return None
    if k == 1:
        r = isqrt(target)
        return (r,) if r * r == target else None
    top = isqrt(target)
    for a in range(top, -1, -1):
        rest = integer_sum_of_squares(target - a * a, k - 1)
        if rest is not None:
            return (a,) + rest
    return None


def rational_vector_with_norm2(target, k: int) -> tuple | None:
    """Rational vector in Q^k with squared length ``target``, if one exists."""
    t = as_fraction(target)
    if t < 0:
        return None
    v = integer_sum_of_squares(t.numerator * t.denominator, k)
    if v is None:
        return None
    return tuple(Fraction(a, t.denominator) for a in v)


def _anti_witness(spec_eval: Callable, n: int, m: int, seed: int = 7) -> tuple:
    """Deterministic search for distinct small-integer points where some poly is nonzero."""
    import random

    rng = random.Random(seed)
    for _ in range(10_000):
        pts = tuple(tuple(Fraction(rng.randint(-9, 9)) for _ in range(n)) for _ in range(m))
        if _distinct(pts) and any(v != 0 for v in spec_eval(pts)):
            return pts
    raise RuntimeError("no anti-witness found")  # pragma: no cover


def _finish(spec: ConfigurationSpec, witness: tuple | None) -> ConfigurationSpec:
    """Attach witness and anti-witness, checking both."""
    if witness is not None:
        witness = tuple(as_point(p) for p in witness)
        if not _distinct(witness) or not spec.vanishes(witness):
            raise AssertionError(f"{spec.name}: shipped witness does not vanish")
    anti = _anti_witness(spec.evaluate, spec.n, spec.m)
    return ConfigurationSpec(
        spec.name, spec.n, spec.m, spec.polys, spec.maps, witness, anti,
        spec.params, spec.degenerate, spec.note,
    )


# ---------------------------------------------------------------------------
# presets


def right_angle(n: int) -> list[ConfigurationSpec]:
    if n < 2:
        raise ValueError("right_angle needs n >= 2")
    V4 = _Vars(n, 4)
    P1 = V4.inner(V4.diff(0, 1), V4.diff(2, 3))
    V3 = _Vars(n, 3)
    P2 = V3.inner(V3.diff(0, 1), V3.diff(2, 0))
    o, e1, e2 = _pt(n), _e(n, 0), _e(n, 1)
    return [
        _finish(ConfigurationSpec("right_angle.orthogonal_pairs", n, 4, (P1,), params={"n": n}),
                (e1, o, e2, _pt(n, 0, 3))),
        _finish(ConfigurationSpec("right_angle.vertex", n, 3, (P2,), params={"n": n}), (o, e1, e2)),
    ]


def rational_cos2(n: int, q) -> list[ConfigurationSpec]:
    q = as_fraction(q)
    if n < 2:
        raise ValueError("rational_cos2 needs n >= 2")
    if not 0 <= q <= 1:
        raise ValueError("cos^2 must lie in [0, 1]")
    V3 = _Vars(n, 3)
    u, w = V3.diff(1, 0), V3.diff(2, 0)
    P = V3.inner(u, w) ** 2 - V3.norm2(u) * V3.norm2(w) * q
    V4 = _Vars(n, 4)
    u4, w4 = V4.diff(1, 0), V4.diff(2, 3)
    Q = V4.inner(u4, w4) ** 2 - V4.norm2(u4) * V4.norm2(w4) * q

    # direction with squared cosine q against e1
    direction: tuple | None
    if q == 0:
        direction = _e(n, 1)
    elif q == 1:
        direction = _e(n, 0, 2)
    else:
        tail = rational_vector_with_norm2((1 - q) / q, n - 1)
        direction = None if tail is None else (Fraction(1),) + tail
    wit_p = wit_q = None
    note = ""
    if direction is not None:
        o = _pt(n)
        wit_p = (o, _e(n, 0), direction)
        v = _pt(n, 7, 3)
        wit_q = (o, _e(n, 0), tuple(a + b for a, b in zip(v, direction)), v)
    else:
        note = "no rational witness: (1-q)/q is not a sum of n-1 rational squares"
    params = {"n": n, "q": q}
    return [
        _finish(ConfigurationSpec("rational_cos2.vertex", n, 3, (P,), params=params, note=note), wit_p),
        _finish(ConfigurationSpec("rational_cos2.directions", n, 4, (Q,), params=params, note=note), wit_q),
    ]


def angle_pair_equality(n: int) -> list[ConfigurationSpec]:
    if n < 1:
        raise ValueError("n must be positive")
    V8 = _Vars(n, 8)
    ab, cd, ef, gh = V8.diff(0, 1), V8.diff(2, 3), V8.diff(4, 5), V8.diff(6, 7)
    P = (V8.inner(ab, cd) ** 2 * V8.norm2(ef) * V8.norm2(gh)
         - V8.inner(ef, gh) ** 2 * V8.norm2(ab) * V8.norm2(cd))
    V6 = _Vars(n, 6)
    ab6, cb6, ef6, gf6 = V6.diff(0, 1), V6.diff(2, 1), V6.diff(3, 4), V6.diff(5, 4)
    Q = (V6.inner(ab6, cb6) ** 2 * V6.norm2(ef6) * V6.norm2(gf6)
         - V6.inner(ef6, gf6) ** 2 * V6.norm2(ab6) * V6.norm2(cb6))
    # parallel pairs give cosine 1 on both sides
    wit_p = (_pt(n, 1, 0), _pt(n, 0, 0), _pt(n, 3, 7), _pt(n, 2, 7),
             _pt(n, 11, 13), _pt(n, 10, 13), _pt(n, 20, 30), _pt(n, 19, 30))
    if n == 1:
        wit_p = tuple(_pt(1, x) for x in (1, 0, 3, 2, 11, 10, 21, 20))
        wit_q = tuple(_pt(1, x) for x in (1, 0, 2, 11, 10, 12))
    else:
        wit_q = (_pt(n, 1, 0), _pt(n, 0, 0), _pt(n, 0, 1), _pt(n, 11, 10), _pt(n, 10, 10), _pt(n, 10, 11))
    params = {"n": n}
    return [
        _finish(ConfigurationSpec("angle_pair_equality.directions", n, 8, (P,), params=params), wit_p),
        _finish(ConfigurationSpec("angle_pair_equality.vertex", n, 6, (Q,), params=params), wit_q),
    ]


def collinear(n: int) -> list[ConfigurationSpec]:
    if n < 2:
        raise ValueError("collinear needs n >= 2")
    V4 = _Vars(n, 4)
    x, y, z, v = V4[0], V4[1], V4[2], V4[3]
    P = (y[1] - x[1]) * (v[0] - z[0]) - (y[0] - x[0]) * (v[1] - z[1])
    V3 = _Vars(n, 3)
    x, y, z = V3[0], V3[1], V3[2]
    Q = (y[1] - x[1]) * (y[0] - z[0]) - (y[0] - x[0]) * (y[1] - z[1])
    params = {"n": n}
    return [
        _finish(ConfigurationSpec("collinear.directions", n, 4, (P,), params=params),
                (_pt(n, 0, 0), _pt(n, 1, 0), _pt(n, 2, 3), _pt(n, 3, 3))),
        _finish(ConfigurationSpec("collinear.triple", n, 3, (Q,), params=params),
                (_pt(n, 0, 0), _pt(n, 1, 1), _pt(n, 2, 2))),
    ]


def _two_norms_differing_by(r: Fraction, n: int) -> tuple | None:
    """Rational vectors u, w (both nonzero) with |u|^2 - |w|^2 = r."""
    for k in range(1, 50):
        w2 = Fraction(k * k, 1)
        for scale in (1, 2, 3, 5):
            w2s = w2 / (scale * scale)
            u = rational_vector_with_norm2(r + w2s, n)
            if u is not None and any(u):
                return u, _e(n, n - 1, Fraction(k, scale))
    return None


def distance(n: int, r=1) -> list[ConfigurationSpec]:
    """Distance polynomials P_r, P*_r, Q_r (unsquared linear forms when n = 1).

    Q_r is emitted only for r > 0: for r <= 0 it has no zero on two distinct
    points, so it forbids nothing.
    """
    r = as_fraction(r)
    params = {"n": n, "r": r}
    specs: list[ConfigurationSpec] = []
    if n == 1:
        V4 = _Vars(1, 4)
        a, b, c, d = (V4[i][0] for i in range(4))
        P = (a - b) - (c - d) - r
        V3 = _Vars(1, 3)
        a3, b3, c3 = (V3[i][0] for i in range(3))
        Ps = (a3 - b3) - (b3 - c3) - r
        # a - b = c - d + r ;  a - b = b - c + r
        wp = (_pt(1, r + 11), _pt(1, 10), _pt(1, 1), _pt(1, 0))
        ws = (_pt(1, 2 + r), _pt(1, 1), _pt(1, 0))
        if len(set(wp)) < 4:
            wp = (_pt(1, r + 31), _pt(1, 30), _pt(1, 1), _pt(1, 0))
        if len(set(ws)) < 3:
            ws = (_pt(1, 3 + r), _pt(1, 2), _pt(1, 0))  # pragma: no cover
        specs.append(_finish(ConfigurationSpec("distance.pairs", 1, 4, (P,), params=params), wp))
        specs.append(_finish(ConfigurationSpec("distance.shared", 1, 3, (Ps,), params=params), ws))
        if r > 0:
            V2 = _Vars(1, 2)
            Qr = (V2[0][0] - V2[1][0]) - r
            specs.append(_finish(ConfigurationSpec("distance.value", 1, 2, (Qr,), params=params),
                                 (_pt(1, r), _pt(1, 0))))
        return specs

    V4 = _Vars(n, 4)
    P = V4.norm2(V4.diff(0, 1)) - V4.norm2(V4.diff(2, 3)) - r
    V3 = _Vars(n, 3)
    Ps = V3.norm2(V3.diff(0, 1)) - V3.norm2(V3.diff(2, 1)) - r
    uw = _two_norms_differing_by(r, n)
    wp = ws = None
    note = ""
    if uw is not None:
        u, w = uw
        far = _pt(n, 100, 37)
        wp = (u, _pt(n), tuple(a + b for a, b in zip(far, w)), far)
        # |a-b|^2 - |c-b|^2 = r with shared b at the origin; c must differ from a
        ws = (u, _pt(n), w) if u != w else None
    else:
        note = "no rational witness for this r"
    specs.append(_finish(ConfigurationSpec("distance.pairs", n, 4, (P,), params=params, note=note), wp))
    specs.append(_finish(ConfigurationSpec("distance.shared", n, 3, (Ps,), params=params, note=note), ws))
    if r > 0:
        V2 = _Vars(n, 2)
        Qr = V2.norm2(V2.diff(0, 1)) - r
        u = rational_vector_with_norm2(r, n)
        wq = None if u is None else (u, _pt(n))
        specs.append(_finish(ConfigurationSpec(
            "distance.value", n, 2, (Qr,), params=params,
            note="" if u is not None else "r is not a sum of n rational squares"), wq))
    return specs


def hyperplane(d: int) -> list[ConfigurationSpec]:
    """``d+1`` points of R^d on a common hyperplane: det of the difference matrix."""
    if d < 2:
        raise ValueError("hyperplane needs d >= 2 (for d = 1 the determinant only vanishes on repeated points)")
    V = _Vars(d, d + 1)
    rows = [V.diff(i, 0) for i in range(1, d + 1)]
    det = RationalPoly.zero(V.nv)
    for perm in itertools.permutations(range(d)):
        sign = _perm_sign(perm)
        term = V.const(sign)
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        det = det + term
    pts = [_pt(d)] + [_e(d, k) for k in range(d - 1)] + [_e(d, 0, 2)]
    return [_finish(ConfigurationSpec("hyperplane", d, d + 1, (det,), params={"d": d}), tuple(pts))]


def _perm_sign(perm) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
    return sign


def equilateral(n: int) -> list[ConfigurationSpec]:
    """``<y-x, z-(x+y)/2>``: z on the perpendicular bisector of xy."""
    V = _Vars(n, 3)
    x, y, z = V[0], V[1], V[2]
    mid = [zi - (xi + yi) * Fraction(1, 2) for xi, yi, zi in zip(x, y, z)]
    P = V.inner(V.diff(1, 0), mid)
    wit = (_pt(n, 0, 0), _pt(n, 2, 0), _pt(n, 1, 5)) if n >= 2 else (_pt(1, 0), _pt(1, 2), _pt(1, 1))
    return [_finish(ConfigurationSpec("equilateral", n, 3, (P,), params={"n": n}), wit)]


def similarity_preset(n: int, A: AffineMap) -> ConfigurationSpec:
    """Triples (a, b, c) with ``c - a = A (b - a)``, written ``(A-I)a - Ab + c = 0``.

    The maps are ``(A - I, -A, I)``; the polynomial sums the mapped points
    coordinate-wise (one polynomial per coordinate, so for n = 2 both
    coordinates must vanish).
    """
    if n not in (1, 2):
        raise ValueError("similarity presets exist only for n in {1, 2}")
    if A.n != n:
        raise ValueError("matrix size does not match n")
    if A.determinant() == 0:
        raise ValueError("similarity matrix must be invertible")
    if any(A.offset):
        raise ValueError("similarity matrix must be linear (zero offset)")
    V = _Vars(n, 3)
    polys = tuple(V[0][j] + V[1][j] + V[2][j] for j in range(n))
    maps = (A.minus_identity(), A.negated(), AffineMap.identity(n))
    degenerate = A.is_identity()
    params = {"n": n, "A": A}
    spec = ConfigurationSpec(
        "similarity", n, 3, polys, maps, params=params, degenerate=degenerate,
        note="degenerate: identity similarity only matches c = b" if degenerate else
        ("approximate map" if not A.exact else ""),
    )
    witness = None
    if not degenerate:
        for b in [_e(n, k) for k in range(n)]:
            c = A(b)
            a = _pt(n)
            if _distinct((a, b, c)) and spec.vanishes((a, b, c)):
                witness = (a, b, c)
                break
    return _finish(spec, witness)


def rotation90() -> AffineMap:
    return AffineMap.linear(((0, -1), (1, 0)))


# ---------------------------------------------------------------------------
# catalog

PRESET_SCHEMAS = {
    "right_angle": {"n": "int >= 2"},
    "rational_cos2": {"n": "int >= 2", "q": "rational in [0, 1]"},
    "angle_pair_equality": {"n": "int >= 1"},
    "collinear": {"n": "int >= 2"},
    "distance": {"n": "int >= 1", "r": "rational"},
    "hyperplane": {"d": "int >= 2 (n = d)"},
    "equilateral": {"n": "int >= 1"},
    "similarity": {"n": "1 or 2", "matrix": "n x n invertible rational matrix", "angle": "radians (approximate unless k*pi/2)", "scale": "rational"},
}

DEFAULT_PARAMS = {
    "right_angle": {"n": 2},
    "rational_cos2": {"n": 2, "q": Fraction(1, 2)},
    "angle_pair_equality": {"n": 2},
    "collinear": {"n": 2},
    "distance": {"n": 2, "r": Fraction(1)},
    "hyperplane": {"d": 2},
    "equilateral": {"n": 2},
    "similarity": {"n": 2, "matrix": ((0, -1), (1, 0))},
}


def builtin_preset(name: str, n: int | None = None, params: dict | None = None) -> list[ConfigurationSpec]:
    """Instantiate a named preset.  ``params`` override the catalog defaults."""
    if name not in PRESET_SCHEMAS:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESET_SCHEMAS)}")
    p = dict(DEFAULT_PARAMS[name])
    p.update(params or {})
    if n is not None:
        p["d" if name == "hyperplane" else "n"] = n
    if name == "right_angle":
        return right_angle(int(p["n"]))
    if name == "rational_cos2":
        return rational_cos2(int(p["n"]), as_fraction(p["q"]))
    if name == "angle_pair_equality":
        return angle_pair_equality(int(p["n"]))
    if name == "collinear":
        return collinear(int(p["n"]))
    if name == "distance":
        return distance(int(p["n"]), as_fraction(p["r"]))
    if name == "hyperplane":
        return hyperplane(int(p["d"]))
    if name == "equilateral":
        return equilateral(int(p["n"]))
    # similarity
    nn = int(p["n"])
    if "angle" in p:
        A = AffineMap.rotation(float(p["angle"]), as_fraction(p.get("scale", 1)))
    else:
        A = AffineMap.linear(p["matrix"])
    return [similarity_preset(nn, A)]


def catalog() -> list[dict]:
    """JSON-ready listing of every preset at its default parameters."""
    out = []
    for name in PRESET_SCHEMAS:
        for spec in builtin_preset(name):
            out.append({
                "preset": name,
                "name": spec.name,
                "n": spec.n,
                "m": spec.m,
                "degree": spec.degree,
                "parameters": PRESET_SCHEMAS[name],
                "defaults": {k: _jsonable(v) if not isinstance(v, tuple) else [[format_rational(as_fraction(c)) for c in row] for row in v]
                             for k, v in DEFAULT_PARAMS[name].items()},
            })
    return out
