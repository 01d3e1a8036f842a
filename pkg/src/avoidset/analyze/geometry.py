"""Angle, distance and direction inventories of a point cloud, plus radial projection.

Angles are never materialized as reals.  An angle at vertex x between y
and z is carried as ``(dot, |y-x|^2, |z-x|^2)``; comparisons go through the
signed squared cosine ``sign(dot) * dot^2 / (|y-x|^2 |z-x|^2)``, which is an
exact rational and increases with the cosine.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from ..rationals import as_fraction, dist2, dot, format_rational, rational_sqrt, sub
from .cloud import PointCloud


@dataclass(frozen=True)
class AngleRecord:
    vertex: int
    left: int
    right: int
    dot: Fraction
    norm2_left: Fraction
    norm2_right: Fraction

    @property
    def signed_cos2(self) -> Fraction:
        s = (self.dot > 0) - (self.dot < 0)
        return s * self.dot * self.dot / (self.norm2_left * self.norm2_right)

    @property
    def cos(self) -> float:
        return float(self.dot) / math.sqrt(float(self.norm2_left) * float(self.norm2_right))

    def to_dict(self) -> dict:
        return {
            "vertex": self.vertex,
            "points": [self.left, self.right],
            "dot": format_rational(self.dot),
            "norm2": [format_rational(self.norm2_left), format_rational(self.norm2_right)],
            "signed_cos2": format_rational(self.signed_cos2),
            "cos": self.cos,
        }


def angle_certificate(x: Sequence[Fraction], y: Sequence[Fraction], z: Sequence[Fraction]) -> tuple:
    u, w = sub(y, x), sub(z, x)
    return dot(u, w), dot(u, u), dot(w, w)


def angle_inventory(cloud: PointCloud) -> list[AngleRecord]:
    """Every angle ``y x z`` (vertex x, y before z in index order)."""
    if cloud.n < 2:
        raise ValueError("angles need n >= 2")
    pts = cloud.points
    out = []
    for v in range(len(pts)):
        others = [i for i in range(len(pts)) if i != v]
        for a, b in itertools.combinations(others, 2):
            d, na, nb = angle_certificate(pts[v], pts[a], pts[b])
            out.append(AngleRecord(v, a, b, d, na, nb))
    return out


def same_angle(r1: AngleRecord, r2: AngleRecord) -> bool:
    return r1.signed_cos2 == r2.signed_cos2


def compare_angles(r1: AngleRecord, r2: AngleRecord) -> int:
    """-1, 0, 1 as the first angle is smaller than, equal to, larger than the second."""
    a, b = r1.signed_cos2, r2.signed_cos2
    return (a < b) - (a > b)


def has_cos2(r: AngleRecord, q) -> bool:
    """``cos^2`` of the angle equals the rational ``q``."""
    q = as_fraction(q)
    return r.dot * r.dot == q * r.norm2_left * r.norm2_right


def angle_report(cloud: PointCloud, targets: Iterable = ()) -> dict:
    recs = angle_inventory(cloud)
    groups: dict[Fraction, list[AngleRecord]] = defaultdict(list)
    for r in recs:
        groups[r.signed_cos2].append(r)
    repeated = {k: v for k, v in groups.items() if len(v) > 1}
    hits = []
    for q in targets:
        q = as_fraction(q)
        hits.append({
            "cos2": format_rational(q),
            "angles": [[r.vertex, r.left, r.right] for r in recs if has_cos2(r, q)],
        })
    return {
        "angles": len(recs),
        "distinct_angles": len(groups),
        "repeated_angle_classes": len(repeated),
        "right_angles": [[r.vertex, r.left, r.right] for r in recs if r.dot == 0],
        "cos2_targets": hits,
        "inventory": [r.to_dict() for r in recs],
    }


def distance_report(cloud: PointCloud, excluded: Iterable = ()) -> dict:
    """Squared distances of all pairs, with rationality, repetition and exclusion flags.

    ``excluded`` lists forbidden distances r; a pair is flagged when
    ``|a-b|^2 == r^2``.
    """
    pts = cloud.points
    pairs = []
    by_d2: dict[Fraction, list[tuple[int, int]]] = defaultdict(list)
    for i, j in itertools.combinations(range(len(pts)), 2):
        d2 = dist2(pts[i], pts[j])
        pairs.append((i, j, d2))
        by_d2[d2].append((i, j))
    rational = [(i, j) for i, j, d2 in pairs if rational_sqrt(d2) is not None]
    repeats = [
        {"distance2": format_rational(d2), "pairs": [list(p) for p in ps]}
        for d2, ps in sorted(by_d2.items()) if len(ps) > 1
    ]
    ex = sorted({as_fraction(r) for r in excluded})
    excluded_hits = [
        {"distance": format_rational(r), "pairs": [list(p) for p in by_d2.get(r * r, [])]}
        for r in ex
    ]
    return {
        "pairs": len(pairs),
        "distance2": [{"pair": [i, j], "value": format_rational(d2)} for i, j, d2 in pairs],
        "rational_distance_pairs": [list(p) for p in rational],
        "repeated": repeats,
        "unique_distances": not repeats,
        "distance_set_size": len(by_d2),
        "excluded_hits": excluded_hits,
    }


def _parallel(u: Sequence[Fraction], w: Sequence[Fraction]) -> bool:
    """All 2x2 minors vanish (a zero vector counts as parallel)."""
    return all(u[a] * w[b] == u[b] * w[a] for a, b in itertools.combinations(range(len(u)), 2))


def direction_report(cloud: PointCloud) -> dict:
    """Pairs of point pairs realizing the same direction, plus collinear triples."""
    if cloud.n < 2:
        raise ValueError("directions need n >= 2")
    pts = cloud.points
    pairs = list(itertools.combinations(range(len(pts)), 2))
    vecs = {p: sub(pts[p[1]], pts[p[0]]) for p in pairs}
    repeated = []
    projected = []
    for p, q in itertools.combinations(pairs, 2):
        u, w = vecs[p], vecs[q]
        if _parallel(u, w):
            repeated.append([list(p), list(q)])
        if _parallel(u[:2], w[:2]):
            projected.append([list(p), list(q)])
    collinear = [
        [i, j, k] for i, j, k in itertools.combinations(range(len(pts)), 3)
        if _parallel(sub(pts[j], pts[i]), sub(pts[k], pts[i]))
    ]
    return {
        "pairs": len(pairs),
        "repeated_directions": repeated,
        "projected_repeats": projected,
        "collinear_triples": collinear,
        "unique_directions": not repeated,
    }


def radial_projection(cloud: PointCloud, center_index: int) -> list[tuple]:
    """Unit vectors ``(y - x)/|y - x|`` for every other point y, in double precision."""
    x = cloud.points[center_index]
    out = []
    for i, y in enumerate(cloud.points):
        if i == center_index:
            continue
        v = sub(y, x)
        s = dot(v, v)
        if s == 0:
            raise ValueError(f"point {i} coincides with the center")
        # each coordinate from the exact ratio v_j^2 / |v|^2: one rounding before the sqrt
        out.append(tuple(math.copysign(math.sqrt(c * c / s), c) for c in v))
    return out


def chord_length(alpha: float) -> float:
    """Chord of the unit circle subtending angle ``alpha``."""
    return 2 * math.sin(alpha / 2)
