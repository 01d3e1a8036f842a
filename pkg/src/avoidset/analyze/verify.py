"""Exhaustive exact search for forbidden configurations in a point cloud.

Every ordered m-tuple of distinct points is tested; a tuple is a
violation when every (map-composed) polynomial of the spec vanishes on it.
Coordinates are put over one common denominator and the polynomials are
compiled to integer arithmetic, so each test is a handful of integer
multiplications.  Optional pruning groups points into grid cells and skips
a whole tuple of cells when an interval enclosure of some polynomial over
those cells excludes zero.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from ..intervals import Interval, poly_range
from ..polycore import RationalPoly, flatten, poly_eval
from ..presets import ConfigurationSpec
from ..rationals import format_rational
from .cloud import PointCloud


@dataclass(frozen=True)
class Violation:
    spec: str
    indices: tuple
    values: tuple  # exact polynomial values, all zero

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "indices": list(self.indices),
            "values": [format_rational(v) for v in self.values],
        }


def integer_form(P: RationalPoly, denom: int) -> RationalPoly:
    """``Q`` with integer coefficients and ``Q(k) = L * denom^deg * P(k / denom)``."""
    if P.is_zero():
        return P
    deg = P.degree
    terms = {}
    for mono, c in P.items():
        terms[mono] = c * denom ** (deg - sum(mono))
    lcm = 1
    for c in terms.values():
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return RationalPoly(P.num_vars, {k: v * lcm for k, v in terms.items()})


def compile_poly(P: RationalPoly) -> Callable[[Sequence[int]], int]:
    """Python function evaluating an integer-coefficient polynomial on a flat vector."""
    parts = []
    for mono, c in P.sorted_terms():
        factors = [str(int(c))]
        for k, e in enumerate(mono):
            if e:
                factors.append(f"v[{k}]" if e == 1 else f"v[{k}]**{e}")
        parts.append("*".join(factors))
    src = "def f(v):\n    return " + (" + ".join(parts) if parts else "0") + "\n"
    scope: dict = {}
    exec(compile(src, "<compiled-poly>", "exec"), scope)
    return scope["f"]


class _Evaluator:
    def __init__(self, cloud: PointCloud, polys: Sequence[RationalPoly]):
        denom = 1
        for p in cloud.points:
            for c in p:
                denom = denom * c.denominator // math.gcd(denom, c.denominator)
        self.denom = denom
        self.ints = [tuple(int(c * denom) for c in p) for p in cloud.points]
        self.funcs = [compile_poly(integer_form(P, denom)) for P in polys]

    def vanishes(self, idx: Sequence[int]) -> bool:
        v = [c for i in idx for c in self.ints[i]]
        return all(f(v) == 0 for f in self.funcs)


def _check_spec(cloud: PointCloud, spec: ConfigurationSpec) -> tuple:
    if cloud.n != spec.n:
        raise ValueError(f"dimension mismatch: cloud has n={cloud.n}, spec {spec.name} has n={spec.n}")
    return spec.composed()


def _cells(cloud: PointCloud, per_axis: int):
    """Bucket points into a per_axis^n grid over the bounding box."""
    n = cloud.n
    lo = [min(p[j] for p in cloud.points) for j in range(n)]
    hi = [max(p[j] for p in cloud.points) for j in range(n)]
    width = [(h - l) / per_axis if h > l else Fraction(1) for l, h in zip(lo, hi)]
    buckets: dict[tuple, list[int]] = {}
    for i, p in enumerate(cloud.points):
        key = tuple(min(int((p[j] - lo[j]) / width[j]), per_axis - 1) for j in range(n))
        buckets.setdefault(key, []).append(i)
    boxes = {}
    for key, members in buckets.items():
        boxes[key] = [
            Interval(min(cloud.points[i][j] for i in members), max(cloud.points[i][j] for i in members))
            for j in range(n)
        ]
    return buckets, boxes


def _search_range(args) -> list[tuple]:
    cloud, polys, m, leads, pruning, per_axis = args
    ev = _Evaluator(cloud, polys)
    found = []
    if not pruning:
        others = range(len(cloud))
        for a in leads:
            for rest in itertools.permutations([i for i in others if i != a], m - 1):
                idx = (a, *rest)
                if ev.vanishes(idx):
                    found.append(idx)
        return found
    buckets, boxes = _cells(cloud, per_axis)
    keys = sorted(buckets)
    for k0 in leads:
        for tail in itertools.product(keys, repeat=m - 1):
            combo = (k0, *tail)
            box = [iv for k in combo for iv in boxes[k]]
            if any(not poly_range(P, box).contains_zero() for P in polys):
                continue
            for idx in itertools.product(*(buckets[k] for k in combo)):
                if len(set(idx)) == m and ev.vanishes(idx):
                    found.append(idx)
    return found


def verify_exclusion(cloud: PointCloud, spec: ConfigurationSpec, pruning: bool = True,
                     threads: int = 1, per_axis: int | None = None) -> list[Violation]:
    """All ordered m-tuples of distinct cloud points on which the spec vanishes."""
    polys = _check_spec(cloud, spec)
    m = spec.m
    if len(cloud) < m:
        return []
    if per_axis is None:
        # aim for a few points per cell
        per_axis = max(1, round((len(cloud) / 4) ** (1 / cloud.n)))
    if pruning:
        leads = sorted(_cells(cloud, per_axis)[0])
    else:
        leads = list(range(len(cloud)))
    if threads > 1 and len(leads) > 1:
        chunks = [leads[i::threads] for i in range(threads)]
        jobs = [(cloud, polys, m, ch, pruning, per_axis) for ch in chunks if ch]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            found = [t for part in ex.map(_search_range, jobs) for t in part]
    else:
        found = _search_range((cloud, polys, m, leads, pruning, per_axis))
    found.sort()
    zeros = tuple(Fraction(0) for _ in polys)
    return [Violation(spec.name, idx, zeros) for idx in found]


def naive_violations(cloud: PointCloud, spec: ConfigurationSpec) -> list[tuple]:
    """Reference loop: plain rational evaluation of every ordered distinct tuple."""
    polys = _check_spec(cloud, spec)
    out = []
    for idx in itertools.permutations(range(len(cloud)), spec.m):
        flat = flatten(cloud.points[i] for i in idx)
        if all(poly_eval(P, flat) == 0 for P in polys):
            out.append(idx)
    return out


def violations_report(cloud: PointCloud, spec: ConfigurationSpec, violations: Sequence[Violation], pruning: bool) -> dict:
    return {
        "spec": spec.name,
        "n": spec.n,
        "m": spec.m,
        "points": len(cloud),
        "provenance": cloud.provenance,
        "pruning": pruning,
        "violation_count": len(violations),
        "violations": [v.to_dict() for v in violations],
    }
