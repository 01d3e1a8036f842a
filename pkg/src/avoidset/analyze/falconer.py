"""Lattice-neighbourhood sets with a Lebesgue-null angle set, and their cosine coverings.

``A_i`` is the set of x in [0, 1] with ``||x N_i|| <= N_i^-6 / i^4``, i.e.
short intervals around the points j/N_i.  For ``a, b, c`` in the product
set ``B_i = A_i^n`` with long enough sides, the cosine of the angle at b
falls into one of ``(3 N_i^2 n)^3`` intervals of length
``3 n i^2 (2 n N_i^-6 / i^4)``; their total length is ``162 n^5 / i^2``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from scipy.stats import qmc

from ..rationals import as_fraction, dot, format_rational, sub

DYADIC_BITS = 40  # outward rounding grid for irrational interval centres
MAX_MATERIALIZED = 400_000  # index triples; beyond this coverings stay lazy
_SLACK = 2.0**-40
OFFSET_BITS = 20  # sample offsets inside an interval have denominator 2^20


@dataclass
class IntervalCovering:
    intervals: list  # merged, sorted, pairwise disjoint (lo, hi) Fractions
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._los = [lo for lo, _ in self.intervals]

    @property
    def total_length(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.intervals), Fraction(0))

    def contains(self, x) -> bool:
        x = as_fraction(x)
        k = bisect.bisect_right(self._los, x) - 1
        return k >= 0 and x <= self.intervals[k][1]

    def contains_cosine(self, p: Fraction, q: Fraction) -> bool:
        """Is ``p / sqrt(q)`` (q > 0) inside the covering?  Decided exactly."""
        if self.meta.get("lazy"):
            return _lazy_contains(p, q, self.meta["N"], self.meta["i"], self.meta["n"])
        approx = float(p) / math.sqrt(float(q))
        k = bisect.bisect_right(self._los, Fraction(approx)) - 1
        for j in (k - 1, k, k + 1):
            if 0 <= j < len(self.intervals):
                lo, hi = self.intervals[j]
                if compare_root_ratio(p, q, lo) >= 0 and compare_root_ratio(p, q, hi) <= 0:
                    return True
        return False

    def to_dict(self) -> dict:
        return {
            **self.meta,
            "intervals": [[format_rational(lo), format_rational(hi)] for lo, hi in self.intervals],
            "merged_length": format_rational(self.total_length),
        }


def compare_root_ratio(p: Fraction, q: Fraction, t: Fraction) -> int:
    """Sign of ``p / sqrt(q) - t`` for rationals p, t and q > 0, exactly."""
    # same sign as p - t sqrt(q)
    if p >= 0 and t <= 0:
        return 0 if p == 0 and t == 0 else 1
    if p <= 0 and t >= 0:
        return -1
    a, b = p * p, t * t * q
    s = (a > b) - (a < b)
    return s if p > 0 else -s


def merge_intervals(ivs: Sequence[tuple], clip: tuple | None = None) -> list[tuple]:
    out: list[list] = []
    for lo, hi in sorted(ivs):
        if clip is not None:
            lo, hi = max(lo, clip[0]), min(hi, clip[1])
            if lo > hi:
                continue
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(lo, hi) for lo, hi in out]


def intersect_coverings(a: Sequence[tuple], b: Sequence[tuple]) -> list[tuple]:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo, hi = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def a_halfwidth(N: int, i: int) -> Fraction:
    """Half-width in x of the intervals of A_i: ``||xN|| <= N^-6/i^4`` gives ``N^-7/i^4``."""
    return Fraction(1, N**7 * i**4)


def falconer_A(N: int, i: int) -> IntervalCovering:
    if N < 2 or i < 1:
        raise ValueError("need N >= 2 and i >= 1")
    delta = a_halfwidth(N, i)
    ivs = [(Fraction(j, N) - delta, Fraction(j, N) + delta) for j in range(N + 1)]
    merged = merge_intervals(ivs, clip=(Fraction(0), Fraction(1)))
    return IntervalCovering(merged, {"N": N, "i": i, "halfwidth": format_rational(delta)})


def in_A(x, N: int, i: int) -> bool:
    """Membership straight from the definition ``||xN|| <= N^-6/i^4``, x in [0, 1]."""
    x = as_fraction(x)
    if not 0 <= x <= 1:
        return False
    y = x * N
    frac = y - (y.numerator // y.denominator)
    return min(frac, 1 - frac) <= Fraction(1, N**6 * i**4)


def c_cover_constants(N: int, i: int, n: int) -> dict:
    count = (3 * N * N * n) ** 3
    length = 3 * n * i * i * (2 * n * Fraction(1, N**6 * i**4))
    return {
        "nominal_count": count,
        "interval_length": length,
        "pre_merge_length": count * length,
        "expected": Fraction(162 * n**5, i * i),
    }


def _floor_dyadic(x: float, bits: int) -> Fraction:
    return Fraction(math.floor(x * 2**bits), 2**bits)


def _ceil_dyadic(x: float, bits: int) -> Fraction:
    return Fraction(math.ceil(x * 2**bits), 2**bits)


def falconer_C_cover(N: int, i: int, n: int, materialize: bool | None = None) -> IntervalCovering:
    """Covering of the cosines realised in ``A_i^n`` (sides with squared length >= 1/i).

    The pre-merge length is the nominal ``count * length`` and must equal
    ``162 n^5 / i^2`` exactly.  Materialized intervals are centred at
    ``j1 / sqrt(j2 j3)`` for the index triples that can actually occur,
    with endpoints rounded outward to multiples of 2^-40.  Large index
    ranges (or ``materialize=False``) give a lazy covering that answers
    membership queries without listing intervals.
    """
    if N < 2 or n < 2 or i < 1:
        raise ValueError("need N >= 2, n >= 2, i >= 1")
    k = c_cover_constants(N, i, n)
    if k["pre_merge_length"] != k["expected"]:
        raise AssertionError("covering identity failed")  # pragma: no cover
    meta = {
        "N": N, "i": i, "n": n,
        "nominal_count": k["nominal_count"],
        "interval_length": format_rational(k["interval_length"]),
        "pre_merge_length": format_rational(k["pre_merge_length"]),
    }
    half = k["interval_length"] / 2
    jmin, jmax = _index_range(N, i, n)
    if materialize is None:
        materialize = (jmax - jmin + 1) ** 2 * (2 * jmax + 1) <= MAX_MATERIALIZED
    if not materialize:
        # membership is still decidable, interval by interval
        return IntervalCovering([], {**meta, "lazy": True})
    # float centres carry relative error below 2^-51; 2^-40 outward rounding absorbs it
    slack = _SLACK * (n + 1)
    ivs = []
    roots: dict[int, float] = {}
    for j2 in range(jmin, jmax + 1):
        for j3 in range(jmin, jmax + 1):
            q = j2 * j3
            if q not in roots:
                roots[q] = math.sqrt(q)
            r = roots[q]
            for j1 in range(-jmax, jmax + 1):
                t = j1 / r
                if t + float(half) < -1.001 or t - float(half) > 1.001:
                    continue
                ivs.append((_floor_dyadic(t - slack, DYADIC_BITS) - half, _ceil_dyadic(t + slack, DYADIC_BITS) + half))
    merged = merge_intervals(ivs, clip=(Fraction(-1), Fraction(1)))
    meta["materialized_count"] = len(ivs)
    return IntervalCovering(merged, meta)


def _index_range(N: int, i: int, n: int) -> tuple[int, int]:
    """Range of the squared-side indices j with j/N^2 near a squared side >= 1/i."""
    eta = n * Fraction(1, N**6 * i**4)
    N2 = N * N
    return max(1, math.ceil((Fraction(1, i) - eta) * N2) - 1), N2 * n


def _cover_interval(j1: int, j2: int, j3: int, half: Fraction, n: int) -> tuple:
    t = j1 / math.sqrt(j2 * j3)
    slack = _SLACK * (n + 1)
    return _floor_dyadic(t - slack, DYADIC_BITS) - half, _ceil_dyadic(t + slack, DYADIC_BITS) + half


def _in_interval(p: Fraction, q: Fraction, iv: tuple) -> bool:
    return compare_root_ratio(p, q, iv[0]) >= 0 and compare_root_ratio(p, q, iv[1]) <= 0


def _lazy_contains(p: Fraction, q: Fraction, N: int, i: int, n: int) -> bool:
    half = c_cover_constants(N, i, n)["interval_length"] / 2
    jmin, jmax = _index_range(N, i, n)
    cos = float(p) / math.sqrt(float(q))
    for j2 in range(jmin, jmax + 1):
        for j3 in range(jmin, jmax + 1):
            r = math.sqrt(j2 * j3)
            j1 = round(cos * r)
            for jj in (j1 - 1, j1, j1 + 1):
                if abs(jj) <= jmax and _in_interval(p, q, _cover_interval(jj, j2, j3, half, n)):
                    return True
    return False


def _sample_points(A: Sequence[tuple], n: int, seed: int):
    """Endless low-discrepancy stream of point triples of ``A^n`` (rational coordinates)."""
    sampler = qmc.Halton(d=3 * n, scramble=True, seed=seed)
    K = len(A)
    scale = 2**OFFSET_BITS
    while True:
        for row in sampler.random(256):
            pts = []
            for p in range(3):
                coords = []
                for j in range(n):
                    v = row[p * n + j] * K
                    idx = min(int(v), K - 1)
                    lo, hi = A[idx]
                    frac = Fraction(min(int((v - idx) * scale), scale), scale)
                    coords.append(lo + (hi - lo) * frac)
                pts.append(tuple(coords))
            yield pts


def nearest_cover_interval(p: Fraction, s1: Fraction, s2: Fraction, N: int, i: int, n: int) -> tuple:
    """The covering interval indexed by the lattice values nearest to (p, s1, s2).

    Returns exact rational bounds of ``j1/sqrt(j2 j3) -+ length/2`` rounded
    outward, or None when an index falls outside the covering's range.
    """
    N2 = N * N
    j1, j2, j3 = (round(v * N2) for v in (p, s1, s2))
    if j2 <= 0 or j3 <= 0 or abs(j1) > N2 * n or j2 > N2 * n or j3 > N2 * n:
        return None
    half = c_cover_constants(N, i, n)["interval_length"] / 2
    return _cover_interval(j1, j2, j3, half, n)


def falconer_angle_check(N_list: Sequence[int], i_max: int, n: int, sample: int = 200, seed: int = 0,
                         max_draws: int = 1_000_000) -> dict:
    """Test ``sample`` cosines from triples of ``A^n`` (A the truncated intersection).

    Triples come from a scrambled Halton stream.  At level i a triple is
    tested against the i-th covering when both squared sides from the
    vertex are at least 1/i, and is exempt at that level otherwise.  Draws
    continue until ``sample`` triples were tested at some level.
    """
    if len(N_list) < i_max:
        raise ValueError("need one N per level up to i_max")
    A = falconer_A(N_list[0], 1).intervals
    for i in range(2, i_max + 1):
        A = intersect_coverings(A, falconer_A(N_list[i - 1], i).intervals)
    report = {
        "N_list": list(N_list[:i_max]),
        "i_max": i_max,
        "n": n,
        "seed": seed,
        "requested": sample,
    }
    if not A:
        return {**report, "status": "empty approximation", "triples": 0, "checked": 0, "exempt": 0,
                "escapes": 0, "passed": True}
    covers = {i: falconer_C_cover(N_list[i - 1], i, n) for i in range(1, i_max + 1)}
    triples = checked = exempt = degenerate = draws = 0
    escapes = []
    for a, b, c in _sample_points(A, n, seed):
        if triples >= sample or draws >= max_draws:
            break
        draws += 1
        if a == b or b == c or a == c:
            degenerate += 1
            continue
        u, w = sub(a, b), sub(c, b)
        p, s1, s2 = dot(u, w), dot(u, u), dot(w, w)
        tested = False
        for i, cov in covers.items():
            if s1 < Fraction(1, i) or s2 < Fraction(1, i):
                exempt += 1
                continue
            tested = True
            checked += 1
            near = nearest_cover_interval(p, s1, s2, N_list[i - 1], i, n)
            if near is not None and _in_interval(p, s1 * s2, near):
                continue
            if not cov.contains_cosine(p, s1 * s2):
                escapes.append({"i": i, "points": [[format_rational(x) for x in pt] for pt in (a, b, c)]})
        triples += tested
    return {
        **report,
        "status": "ok" if not escapes else "escapes",
        "intervals_in_A": len(A),
        "draws": draws,
        "triples": triples,
        "checked": checked,
        "exempt": exempt,
        "degenerate": degenerate,
        "escapes": len(escapes),
        "escape_examples": escapes[:5],
        "passed": not escapes and triples >= sample,
    }
