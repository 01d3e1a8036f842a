"""Shifted-lattice stages that keep a polynomial away from zero.

Given an integer-coefficient polynomial P of degree d, an anchor
configuration where P vanishes with a nonzero pivot partial ``a``, and a
scale h, the stage uses the lattice ``L = Z^n / N`` (N minimal with
``sqrt(n)/N <= h``).  Lattice points in every anchor ball are kept, and
those in the pivot point's ball are shifted by ``u = e_pivot / (2 N^d a)``.
On every tuple drawn from these lists, ``N^d P`` sits within 1/5 of a
half-integer, and perturbing each point by less than ``safe_radius`` keeps
it within 1/4, so the value never reaches zero.  Outside the anchor balls
the stage is the whole complement (a membership predicate, never listed).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, isqrt
from typing import Sequence

from .polycore import RationalPoly, flatten, poly_eval, poly_partial
from .rationals import (
    as_fraction,
    as_point,
    dist2,
    format_point,
    format_rational,
    nearest_integer_distance,
)


class DegenerateAnchorError(ValueError):
    """All partial derivatives vanish at the anchor; descend the derivative chain."""


class ScaleTooCoarseError(ValueError):
    """The requested scale cannot carry the gap certificate."""

    def __init__(self, message: str, admissible_h: float | None = None, admissible_log_h: float | None = None):
        super().__init__(message)
        self.admissible_h = admissible_h
        self.admissible_log_h = admissible_log_h


# ---------------------------------------------------------------------------
# anchors


@dataclass(frozen=True)
class Anchor:
    points: tuple
    pivot: int
    pivot_value: Fraction
    radius: Fraction

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points[0])

    @property
    def pivot_point(self) -> int:
        return self.pivot // self.n

    @property
    def pivot_coord(self) -> int:
        return self.pivot % self.n


def find_pivot(P: RationalPoly, points: Sequence[Sequence]) -> tuple[int, Fraction]:
    """First variable (row-major over point, coordinate) with a nonzero partial."""
    flat = flatten(points)
    if len(flat) != P.num_vars:
        raise ValueError("anchor does not match the polynomial's variable count")
    for k in range(P.num_vars):
        v = poly_eval(poly_partial(P, k), flat)
        if v != 0:
            return k, v
    raise DegenerateAnchorError("degenerate anchor: the gradient vanishes")


def _min_pair_dist2(points: Sequence[tuple]) -> Fraction | None:
    if len(points) < 2:
        return None
    return min(dist2(p, q) for p, q in itertools.combinations(points, 2))


def _variation_bound(Q: RationalPoly, center: Sequence[Fraction], radius: Fraction) -> Fraction:
    """Bound on ``|Q(center + delta) - Q(center)|`` over ``|delta_k| <= radius``."""
    shifted = Q.shift(center)
    return shifted.abs_bound(radius) - abs(shifted.constant_term())


def choose_radius(P: RationalPoly, points: Sequence[Sequence], pivot: int, a, max_halvings: int = 200) -> Fraction:
    """Largest ``2^-k`` keeping the pivot partial within ``|a|/3`` of ``a``.

    The bound is certified over the coordinate box of half-width r around
    the anchor (it contains the product of balls).  The radius is also
    capped by a quarter of the smallest pairwise anchor distance.
    """
    a = as_fraction(a)
    if a == 0:
        raise ValueError("pivot value must be nonzero")
    pts = [as_point(p) for p in points]
    flat = flatten(pts)
    dP = poly_partial(P, pivot)
    min_d2 = _min_pair_dist2(pts)
    r = Fraction(1)
    for _ in range(max_halvings):
        cap_ok = min_d2 is None or 16 * r * r <= min_d2
        if cap_ok and _variation_bound(dP, flat, r) <= abs(a) / 3:
            return r
        r /= 2
    raise RuntimeError("radius search did not converge")  # pragma: no cover


def make_anchor(P: RationalPoly, points: Sequence[Sequence], radius=None) -> Anchor:
    pts = tuple(as_point(p) for p in points)
    if len(set(pts)) != len(pts):
        raise ValueError("anchor points must be distinct")
    flat = flatten(pts)
    if len(flat) != P.num_vars:
        raise ValueError("anchor does not match the polynomial's variable count")
    if poly_eval(P, flat) != 0:
        raise ValueError("the polynomial does not vanish at the anchor")
    pivot, a = find_pivot(P, pts)
    r = choose_radius(P, pts, pivot, a) if radius is None else as_fraction(radius)
    return Anchor(pts, pivot, a, r)


# ---------------------------------------------------------------------------
# stages


@dataclass(frozen=True)
class LatticeStage:
    poly: RationalPoly
    anchor: Anchor
    h: Fraction
    N: int
    d: int
    u: tuple
    box: tuple  # ((lo, hi), ...) per coordinate
    lip_bound: Fraction  # C'': Lipschitz bound of P on the anchor region
    second_bound: Fraction  # C': Taylor remainder along the pivot is <= C' |u|^2
    safe_c: Fraction
    scale_certified: bool
    racs_slack: Fraction = field(default=Fraction(0))

    @property
    def n(self) -> int:
        return self.anchor.n

    @property
    def m(self) -> int:
        return self.anchor.m

    @property
    def Nd(self) -> int:
        return self.N**self.d

    def in_ball(self, i: int, p: Sequence[Fraction]) -> bool:
        return dist2(p, self.anchor.points[i]) < self.anchor.radius**2

    def in_complement(self, p: Sequence[Fraction]) -> bool:
        return not any(self.in_ball(i, p) for i in range(self.m))

    def in_box(self, p: Sequence[Fraction]) -> bool:
        return all(lo <= c <= hi for c, (lo, hi) in zip(p, self.box))

    def metadata(self) -> dict:
        return {
            "N": self.N,
            "d": self.d,
            "h": format_rational(self.h),
            "u": format_point(self.u),
            "r": format_rational(self.anchor.radius),
            "c": format_rational(self.safe_c),
            "C_lipschitz": format_rational(self.lip_bound),
            "C_second": format_rational(self.second_bound),
            "safe_radius": format_rational(safe_radius(self)),
            "pivot": self.anchor.pivot,
            "pivot_value": format_rational(self.anchor.pivot_value),
            "anchor": [format_point(p) for p in self.anchor.points],
            "bounding_box": [[format_rational(lo), format_rational(hi)] for lo, hi in self.box],
            "polynomial": self.poly.to_text(),
            "scale_certified": self.scale_certified,
        }


@dataclass(frozen=True)
class StagePointSet:
    """Per-anchor-ball lattice points (the pivot ball's list already shifted)."""

    balls: tuple  # tuple of tuples of points

    def __len__(self):
        return sum(len(b) for b in self.balls)

    def all_points(self) -> list[tuple]:
        return [p for b in self.balls for p in b]


def smallest_N(h: Fraction, n: int) -> int:
    """Smallest integer N with ``sqrt(n)/N <= h``, decided exactly."""
    h = as_fraction(h)
    if h <= 0:
        raise ValueError("h must be positive")
    # N^2 h^2 >= n
    N = max(1, isqrt(math.ceil(n / (h * h))))
    while N * N * h * h < n:
        N += 1
    while N > 1 and (N - 1) ** 2 * h * h >= n:
        N -= 1
    return N


def _region_constants(P: RationalPoly, anchor: Anchor) -> tuple[Fraction, list[Fraction]]:
    """Lipschitz bound over the 2r box and sup bounds of pivot derivatives over the r box."""
    flat = flatten(anchor.points)
    r = anchor.radius
    lip = Fraction(0)
    for v in range(P.num_vars):
        dv = poly_partial(P, v)
        if not dv.is_zero():
            lip += dv.shift(flat).abs_bound(2 * r)
    sups = []
    Q = P
    for k in range(1, (P.degree if not P.is_zero() else 0) + 1):
        Q = poly_partial(Q, anchor.pivot)
        sups.append(Q.shift(flat).abs_bound(r) if not Q.is_zero() else Fraction(0))
    return lip, sups  # sups[k-1] bounds the k-th pivot derivative


def _gap_conditions(d: int, N: int, a: Fraction, r: Fraction, n: int, lip: Fraction, sups: list[Fraction]):
    """Return (ok, detail dict) for the N-dependent certificate conditions."""
    Nd = N**d
    u_abs = Fraction(1, 2 * Nd) / abs(a)
    rem = sum((sups[k - 1] * u_abs**k / factorial(k) for k in range(2, len(sups) + 1)), Fraction(0))
    racs = u_abs * abs(a) / 3 + rem
    c = min(Fraction(1, 4), Fraction(1) / (20 * lip)) if lip else Fraction(1, 4)
    rho = c / Nd
    second = rem / (u_abs * u_abs)
    ok_racs = racs <= Fraction(1, 5 * Nd)
    ok_region = u_abs + rho <= r
    # |u| <= sqrt(n)/(2N)  <=>  4 N^2 |u|^2 <= n
    ok_cover = 4 * N * N * u_abs * u_abs <= n
    detail = {
        "u_abs": u_abs, "second": second, "c": c, "rho": rho,
        "racs": ok_racs, "region": ok_region, "cover": ok_cover,
        "racs_slack": Fraction(1, 5 * Nd) - racs,
    }
    return ok_racs and ok_region and ok_cover, detail


def _scale_condition(h: Fraction, d: int, c: Fraction, N: int) -> bool:
    # h^d / ln(1/h) <= c N^-d, decided in floating point with a safety margin
    # (only used as a certificate flag; the gap itself is exact)
    if h >= 1:
        return False
    lhs = float(h) ** d / math.log(1 / float(h)) if h > 0 else 0.0
    rhs = float(c) / float(N) ** d
    return lhs <= rhs * (1 - 1e-12)


def build_stage(P: RationalPoly, anchor: Anchor, h, box=None, require_scale: bool = True,
                materialize: bool = True) -> tuple[LatticeStage, StagePointSet]:
    """Build the stage at scale ``h`` and materialize its anchor-ball lattice points.

    ``require_scale`` enforces ``h^d / ln(1/h) <= c N^-d`` (the condition tying
    the stage's h-neighbourhood to the certified perturbation radius); with
    it off the stage is built anyway and marked ``scale_certified=False``.
    The gap certificate conditions on N are always enforced.  With
    ``materialize=False`` the point lists are left empty.
    """
    h = as_fraction(h)
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    if not P.has_integer_coefficients():
        raise ValueError("P must have integer coefficients; apply clear_denominators first")
    d = P.degree
    n = anchor.n
    a = anchor.pivot_value
    lip, sups = _region_constants(P, anchor)
    N = smallest_N(h, n)
    ok, det = _gap_conditions(d, N, a, anchor.radius, n, lip, sups)
    if not ok:
        Nmin = N
        while not _gap_conditions(d, Nmin, a, anchor.radius, n, lip, sups)[0]:
            Nmin *= 2
        lo = Nmin // 2
        while lo + 1 < Nmin:
            mid = (lo + Nmin) // 2
            if _gap_conditions(d, mid, a, anchor.radius, n, lip, sups)[0]:
                Nmin = mid
            else:
                lo = mid
        hmax = math.sqrt(n) / Nmin
        failed = [k for k in ("racs", "region", "cover") if not det[k]]
        raise ScaleTooCoarseError(
            f"scale too coarse: N={N} fails {failed}; need N >= {Nmin}, i.e. h <= {hmax:.6g}",
            admissible_h=hmax,
        )
    c = det["c"]
    certified = _scale_condition(h, d, c, N)
    if require_scale and not certified:
        # N <= 2 sqrt(n)/h, so ln(1/h) >= 2^d n^(d/2) / c suffices
        log_h = -(2**d) * n ** (d / 2) / float(c)
        raise ScaleTooCoarseError(
            f"scale too coarse: h^d/ln(1/h) > c N^-d at h={float(h):.6g}; admissible once ln h <= {log_h:.6g}",
            admissible_log_h=log_h,
        )
    u = tuple(Fraction(1, 2 * N**d) / a if j == anchor.pivot_coord else Fraction(0) for j in range(n))
    if box is None:
        r = anchor.radius
        box = tuple(
            (min(p[j] for p in anchor.points) - r, max(p[j] for p in anchor.points) + r) for j in range(n)
        )
    box = tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in box)
    stage = LatticeStage(P, anchor, h, N, d, u, box, lip, det["second"], c, certified, det["racs_slack"])
    balls = []
    for i in range(anchor.m if materialize else 0):
        pts = lattice_points_in_ball(anchor.points[i], anchor.radius, N)
        if i == anchor.pivot_point:
            pts = [tuple(x + s for x, s in zip(p, u)) for p in pts]
        balls.append(tuple(p for p in pts if stage.in_box(p)))
    return stage, StagePointSet(tuple(balls))


def lattice_points_in_ball(center: Sequence[Fraction], radius: Fraction, N: int, closed: bool = False) -> list[tuple]:
    """Points of ``Z^n / N`` inside the (open by default) ball, lexicographic order."""
    ranges = []
    for c in center:
        lo = math.ceil((c - radius) * N)
        hi = math.floor((c + radius) * N)
        ranges.append(range(lo, hi + 1))
    r2 = radius * radius
    out = []
    for idx in itertools.product(*ranges):
        p = tuple(Fraction(k, N) for k in idx)
        d2 = dist2(p, center)
        if d2 < r2 or (closed and d2 == r2):
            out.append(p)
    return out


def safe_radius(stage: LatticeStage) -> Fraction:
    """Perturbation radius ``c N^-d`` within which the quarter gap is certified."""
    return stage.safe_c / stage.Nd


def gap_margin(stage: LatticeStage, z: Sequence[Sequence]) -> Fraction:
    """Exact distance of ``N^d P(z)`` to the nearest integer."""
    return nearest_integer_distance(stage.Nd * poly_eval(stage.poly, flatten(z)))


# ---------------------------------------------------------------------------
# certificate checks


@dataclass
class GapReport:
    tuples_checked: int
    min_unperturbed: Fraction | None
    perturbations: int
    min_perturbed: Fraction | None
    zero_values: int
    radius_fraction: Fraction

    @property
    def passed(self) -> bool:
        vals = [v for v in (self.min_unperturbed, self.min_perturbed) if v is not None]
        # an empty tuple set certifies nothing
        return self.tuples_checked > 0 and self.zero_values == 0 and all(v >= Fraction(1, 4) for v in vals)

    def to_dict(self) -> dict:
        return {
            "tuples_checked": self.tuples_checked,
            "min_unperturbed_margin": None if self.min_unperturbed is None else format_rational(self.min_unperturbed),
            "perturbations": self.perturbations,
            "min_perturbed_margin": None if self.min_perturbed is None else format_rational(self.min_perturbed),
            "zero_values": self.zero_values,
            "radius_fraction": format_rational(self.radius_fraction),
            "passed": self.passed,
        }


def tuples_within(stage: LatticeStage, points: StagePointSet, radius_fraction=Fraction(1, 2)) -> list[list[tuple]]:
    """Per-ball stage points within ``radius_fraction * r`` of the ball's centre.

    The pivot ball's centre is the anchor point moved by the stage vector.
    """
    lim2 = (as_fraction(radius_fraction) * stage.anchor.radius) ** 2
    out = []
    for i, ball in enumerate(points.balls):
        c = stage.anchor.points[i]
        if i == stage.anchor.pivot_point:
            # the pivot ball's lattice moved by u; measure from the moved centre
            c = tuple(x + s for x, s in zip(c, stage.u))
        out.append([p for p in ball if dist2(p, c) < lim2])
    return out


def random_perturbation(rng: random.Random, n: int, rho: Fraction, denom_bits: int = 40) -> tuple:
    """Rational vector of Euclidean length strictly below ``rho`` (rejection sampling)."""
    scale = 1 << denom_bits
    while True:
        v = tuple(rho * Fraction(rng.randint(-scale + 1, scale - 1), scale) for _ in range(n))
        if sum(x * x for x in v) < rho * rho:
            return v


def certify_gap(stage: LatticeStage, points: StagePointSet, perturbations: int = 10_000,
                seed: int = 0, radius_fraction=Fraction(1, 2)) -> GapReport:
    """Exhaustive gap margins on lattice tuples, then seeded perturbations.

    Every tuple takes one point from each ball (within ``radius_fraction * r``
    of its anchor point).  Perturbations move every point of a random tuple
    by less than ``safe_radius``.
    """
    per_ball = tuples_within(stage, points, radius_fraction)
    zero = 0
    min_u = None
    count = 0
    for tup in itertools.product(*per_ball):
        val = stage.Nd * poly_eval(stage.poly, flatten(tup))
        if val == 0:
            zero += 1
        g = nearest_integer_distance(val)
        min_u = g if min_u is None else min(min_u, g)
        count += 1
    min_p = None
    done = 0
    if perturbations and all(per_ball):
        rng = random.Random(seed)
        rho = safe_radius(stage)
        for _ in range(perturbations):
            tup = [rng.choice(b) for b in per_ball]
            z = [tuple(x + e for x, e in zip(p, random_perturbation(rng, stage.n, rho))) for p in tup]
            val = stage.Nd * poly_eval(stage.poly, flatten(z))
            if val == 0:
                zero += 1
            g = nearest_integer_distance(val)
            min_p = g if min_p is None else min(min_p, g)
            done += 1
    return GapReport(count, min_u, done, min_p, zero, as_fraction(radius_fraction))


def covered_within(stage: LatticeStage, p: Sequence[Fraction], h=None) -> bool:
    """Is ``p`` within distance ``< h`` of the stage set (complement included)?"""
    h = stage.h if h is None else as_fraction(h)
    p = as_point(p)
    r = stage.anchor.radius
    if stage.in_complement(p):
        return True
    # the complement itself may be close
    for x in stage.anchor.points:
        if r - h <= 0 or dist2(p, x) > (r - h) ** 2:
            return True
    N = stage.N
    piv = stage.anchor.pivot_point
    candidates = []
    for base in (p, tuple(c - s for c, s in zip(p, stage.u))):
        for offs in itertools.product((0, 1), repeat=stage.n):
            q = tuple(Fraction(math.floor(c * N) + o, N) for c, o in zip(base, offs))
            candidates.append(q)
    h2 = h * h
    for q in candidates:
        if stage.in_ball(piv, q):
            q = tuple(c + s for c, s in zip(q, stage.u))
        if dist2(p, q) < h2:
            return True
    return False


def probe_covering(stage: LatticeStage, pitch=None) -> tuple[int, int]:
    """Probe the bounding box on a mesh (default pitch h/10); returns (probes, failures)."""
    pitch = stage.h / 10 if pitch is None else as_fraction(pitch)
    axes = []
    for lo, hi in stage.box:
        k = int((hi - lo) / pitch)
        axes.append([lo + i * pitch for i in range(k + 1)])
    probes = fails = 0
    for p in itertools.product(*axes):
        probes += 1
        if not covered_within(stage, p):
            fails += 1
    return probes, fails


# ---------------------------------------------------------------------------
# export


def stage_points_csv(points: StagePointSet, n: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ball_index"] + [f"coord_{j}" for j in range(n)])
    for i, ball in enumerate(points.balls):
        for p in ball:
            w.writerow([i] + format_point(p))
    return buf.getvalue()


def stage_metadata_json(stage: LatticeStage) -> str:
    return json.dumps(stage.metadata(), indent=2, sort_keys=True)


def read_stage_points_csv(text: str) -> list[tuple[int, tuple]]:
    rows = list(csv.reader(io.StringIO(text)))
    return [(int(r[0]), as_point(r[1:])) for r in rows[1:] if r]
