"""Scale schedules, nested ball trees, their measures and box counting.

The tree starts from one closed ball of radius 1.  At level i every ball
of radius ``b_i`` receives exactly ``ceil(c b_i^n h_{i+1}^-n)`` children of
radius ``b_{i+1} = h^d / (2 ln(1/h))`` (rounded down to a rational), chosen
in lexicographic order from an ``h_{i+1}``-separated net of candidates.
The normalized Lebesgue measure on the leaves gives the measures used in
the mass-distribution check.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from mpmath import iv, mp, mpf
from scipy import stats

from .polycore import RationalPoly
from .rationals import as_fraction, as_point, dist2, format_point, format_rational, mpf_to_fraction

# exact 10^-k is kept as a rational up to this many digits
MAX_EXACT_DIGITS = 10_000
WORK_PREC = 120

# Mass-bound constant for the gauge r^(n/d) (ln 1/r)^(n+1).  Fitted once on
# a calibration run (calibrate_mass_constant: 10^4 balls, seed 12345, on the
# n=1, d=1, ratio 1/40 three-level grid tree gave 49.74, x2 safety included).
FROZEN_MASS_CONSTANT = 50.0


class PackingFailure(RuntimeError):
    def __init__(self, level: int, message: str):
        super().__init__(f"packing failure at level {level}: {message}")
        self.level = level


class ScheduleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Level:
    h: Fraction | None  # None when the value is only known through its logarithm
    log_h: mpf

    @classmethod
    def exact(cls, h) -> "Level":
        h = as_fraction(h)
        if h <= 0:
            raise ScheduleError("scale must be positive")
        with mp.workprec(WORK_PREC):
            return cls(h, mp.log(mpf(h.numerator)) - mp.log(mpf(h.denominator)))

    @classmethod
    def logarithmic(cls, log_h) -> "Level":
        return cls(None, mpf(log_h))

    def log_interval(self):
        if self.h is not None:
            return iv.log(iv.mpf(self.h.numerator)) - iv.log(iv.mpf(self.h.denominator))
        return iv.mpf(self.log_h)

    def describe(self) -> dict:
        return {
            "h": None if self.h is None else format_rational(self.h),
            "ln_h": mp.nstr(self.log_h, 15),
        }


@dataclass(frozen=True)
class Schedule:
    n: int
    d: int
    levels: tuple
    mode: str = "relaxed"

    def __len__(self):
        return len(self.levels)

    @property
    def strict(self) -> bool:
        return self.mode == "strict"

    def h(self, i: int) -> Fraction:
        """Exact scale of level i (1-based)."""
        lv = self.levels[i - 1]
        if lv.h is None:
            raise ScheduleError(f"level {i} is only known in log-space (ln h = {mp.nstr(lv.log_h, 8)})")
        return lv.h

    def is_materializable(self) -> bool:
        return all(lv.h is not None for lv in self.levels)

    def scaled(self, level: int, factor) -> "Schedule":
        """Copy with level ``level`` multiplied by ``factor``."""
        factor = as_fraction(factor)
        lv = self.levels[level - 1]
        if lv.h is not None:
            new = Level.exact(lv.h * factor)
        else:
            with mp.workprec(WORK_PREC):
                new = Level.logarithmic(lv.log_h + mp.log(mpf(factor.numerator)) - mp.log(mpf(factor.denominator)))
        levels = list(self.levels)
        levels[level - 1] = new
        return Schedule(self.n, self.d, tuple(levels), self.mode)

    def replaced(self, level: int, h) -> "Schedule":
        levels = list(self.levels)
        levels[level - 1] = Level.exact(h)
        return Schedule(self.n, self.d, tuple(levels), self.mode)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "mode": self.mode,
            "strict": self.strict,
            "levels": [lv.describe() for lv in self.levels],
        }


def _tul2_log_bound(sched_levels: Sequence[Level], j: int, n: int, d: int):
    """Interval for ``-prod_{i<j} h_i^-(dn+1)``, the log of the (tul2)-type cap."""
    s = iv.mpf(0)
    for lv in sched_levels[: j - 1]:
        s = s - lv.log_interval()
    return -iv.exp((d * n + 1) * s)


def _lo(x) -> mpf:
    """Lower endpoint of an interval as a plain mpf."""
    with mp.workprec(WORK_PREC):
        return mpf(x.a)


def _tul1_log_bound(prev: Level, d: int):
    return (d + 1) * prev.log_interval() - iv.log(6)


def make_schedule(n: int, d: int, k: int, mode: str = "relaxed", ratio=Fraction(1, 4), h1=Fraction(1, 10)) -> Schedule:
    """Scales h_1..h_k starting from ``h1``.

    ``strict`` takes each level as the largest power of ten (or, past
    MAX_EXACT_DIGITS digits, a log-space value just below the cap) meeting
    both decay conditions.  ``relaxed`` decays geometrically by ``ratio``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"unknown mode {mode!r}")
    levels = [Level.exact(h1)]
    if mode == "relaxed":
        ratio = as_fraction(ratio)
        if not 0 < ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        for _ in range(1, k):
            levels.append(Level.exact(levels[-1].h * ratio))
        return Schedule(n, d, tuple(levels), mode)
    old = iv.prec
    iv.prec = WORK_PREC
    try:
        ln10 = iv.log(10)
        for j in range(2, k + 1):
            cap = _tul1_log_bound(levels[-1], d)
            cap2 = _tul2_log_bound(levels, j, n, d)
            lo_cap = min(_lo(cap), _lo(cap2))  # certified lower end of the cap
            with mp.workprec(WORK_PREC):
                estimate = -lo_cap / mp.log(10)
            if estimate <= MAX_EXACT_DIGITS:
                # fewest digits whose power of ten is certified below the cap
                digits = max(1, int(mp.ceil(estimate)))
                while _lo(digits * ln10) < -lo_cap:
                    digits += 1
                while digits > 1 and _lo((digits - 1) * ln10) >= -lo_cap:
                    digits -= 1
                levels.append(Level.exact(Fraction(1, 10**digits)))
            else:
                with mp.workprec(WORK_PREC):
                    slack = abs(mpf(lo_cap)) * mpf(2) ** (-WORK_PREC // 2)
                    levels.append(Level.logarithmic(mpf(lo_cap) - slack))
    finally:
        iv.prec = old
    return Schedule(n, d, tuple(levels), mode)


def _certified_le(lhs, rhs) -> tuple[bool, object]:
    """``lhs <= rhs`` certified over intervals; returns (passed, margin lower bound)."""
    margin = _lo(rhs - lhs)
    return bool(margin >= 0), margin


def validate_schedule(s: Schedule) -> dict:
    """Per-level pass/fail for both decay conditions (never raises)."""
    old = iv.prec
    iv.prec = WORK_PREC
    rows = []
    try:
        for j, lv in enumerate(s.levels, start=1):
            row = {"level": j, **lv.describe()}
            if j == 1:
                if lv.h is not None:
                    ok1 = lv.h <= Fraction(1, 10)
                    margin1 = None
                else:
                    ok1, m = _certified_le(lv.log_interval(), -iv.log(10))
                    margin1 = mp.nstr(m, 10)
                row["tul1"] = {"pass": ok1, "bound": "1/10", "log_margin": margin1}
                row["tul2"] = {"pass": True, "vacuous": True}
            else:
                prev = s.levels[j - 2]
                if lv.h is not None and prev.h is not None:
                    ok1 = lv.h <= prev.h ** (s.d + 1) / 6
                    ok1_m, m1 = _certified_le(lv.log_interval(), _tul1_log_bound(prev, s.d))
                    row["tul1"] = {"pass": ok1, "exact": True, "log_margin": mp.nstr(m1, 10)}
                else:
                    ok1, m1 = _certified_le(lv.log_interval(), _tul1_log_bound(prev, s.d))
                    row["tul1"] = {"pass": ok1, "exact": False, "log_margin": mp.nstr(m1, 10)}
                ok2, m2 = _certified_le(lv.log_interval(), _tul2_log_bound(s.levels, j, s.n, s.d))
                row["tul2"] = {"pass": ok2, "log_margin": mp.nstr(m2, 10)}
            row["pass"] = row["tul1"]["pass"] and row["tul2"]["pass"]
            rows.append(row)
    finally:
        iv.prec = old
    failed = [r["level"] for r in rows if not r["pass"]]
    return {
        "mode": s.mode,
        "strict": s.strict,
        "n": s.n,
        "d": s.d,
        "levels": rows,
        "failed_levels": failed,
        "passed": not failed,
    }


# ---------------------------------------------------------------------------
# radii and packing constants


@dataclass(frozen=True)
class RadiusB:
    value: Fraction  # rounded down
    error: Fraction  # exact value lies in [value, value + error]
    sandwich_lower: bool
    sandwich_upper: bool | None  # None when h > e^-2 (not asserted)


def radius_b(h, d: int, prec: int = 80) -> RadiusB:
    """``h^d / (2 ln(1/h))`` rounded down to a dyadic rational."""
    h = as_fraction(h)
    if not 0 < h < 1:
        raise ValueError("radius_b needs 0 < h < 1")
    old = iv.prec
    iv.prec = prec
    try:
        hv = iv.mpf(h.numerator) / iv.mpf(h.denominator)
        log_inv = iv.log(iv.mpf(h.denominator)) - iv.log(iv.mpf(h.numerator))
        b = hv**d / (2 * log_inv)
        with mp.workprec(prec):
            lo = mpf_to_fraction(mpf(b.a))
            hi = mpf_to_fraction(mpf(b.b))
        lower_ok = h ** (d + 1) / 2 <= lo
        upper = None
        if mpf(log_inv.a) >= 2:
            upper = hi <= h**d / 4
    finally:
        iv.prec = old
    return RadiusB(lo, hi - lo, lower_ok, upper)


def packing_constants(n: int) -> tuple[Fraction, Fraction]:
    """Conservative net-packing constants ``(c, C) = (8^-n, 8^n)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return Fraction(1, 8**n), Fraction(8**n)


def child_count(c, b, h, n: int) -> int:
    """``ceil(c b^n h^-n)`` exactly."""
    q = as_fraction(c) * as_fraction(b) ** n / as_fraction(h) ** n
    return -((-q.numerator) // q.denominator)


# ---------------------------------------------------------------------------
# nets


def separated_subset(points: Iterable[Sequence], h) -> list[tuple]:
    """Greedy lexicographic scan keeping points at distance >= h from all kept ones."""
    pts = sorted(set(as_point(p) for p in points))
    h = as_fraction(h)
    if h <= 0 or not pts:
        return pts
    h2 = h * h
    n = len(pts[0])
    cells: dict[tuple, list[tuple]] = {}
    kept = []
    for p in pts:
        key = tuple(math.floor(c / h) for c in p)
        ok = True
        for off in _neighbour_offsets(n):
            for q in cells.get(tuple(k + o for k, o in zip(key, off)), ()):
                if dist2(p, q) < h2:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            kept.append(p)
            cells.setdefault(key, []).append(p)
    return kept


_OFFSETS: dict[int, list[tuple]] = {}


def _neighbour_offsets(n: int) -> list[tuple]:
    if n not in _OFFSETS:

        _OFFSETS[n] = list(itertools.product((-1, 0, 1), repeat=n))
    return _OFFSETS[n]


def grid_points_in_ball(center: Sequence[Fraction], radius: Fraction, pitch: Fraction) -> list[tuple]:
    """Points of ``pitch * Z^n`` in the closed ball, lexicographic order."""
    ranges = [range(math.ceil((c - radius) / pitch), math.floor((c + radius) / pitch) + 1) for c in center]
    r2 = radius * radius
    out = []
    for idx in itertools.product(*ranges):
        p = tuple(k * pitch for k in idx)
        if dist2(p, center) <= r2:
            out.append(p)
    return out


def count_in_ball(net: Sequence[tuple], x: Sequence[Fraction], r: Fraction) -> int:
    r2 = r * r
    return sum(1 for y in net if dist2(x, y) <= r2)


def count_contained(net: Sequence[tuple], x: Sequence[Fraction], r: Fraction, b: Fraction) -> int:
    """Net points y whose closed ball B(y, b) lies in the closed ball B(x, r)."""
    if b > r:
        return 0
    lim = (r - b) ** 2
    return sum(1 for y in net if dist2(x, y) <= lim)


def _stream_candidates(stream) -> list[tuple]:
    out = []
    for _, batch in stream:
        out.extend(batch)
    out.sort()
    return out


def take_separated(stream, h, count: int | None = None) -> list[tuple]:
    """Greedy lexicographic h-separated selection over a slab stream.

    ``stream`` yields ``(complete_below, batch)``: every point still to
    come has first coordinate ``>= complete_below``.  Points below that
    bound are final, so they are fed to the greedy scan in sorted order
    and the scan can stop once ``count`` points are kept.  The result equals
    ``separated_subset(all candidates, h)[:count]``.
    """
    import bisect

    h = as_fraction(h)
    h2 = h * h
    pending: list[tuple] = []
    kept: list[tuple] = []

    def feed(limit):
        cut = len(pending) if limit is None else bisect.bisect_left(pending, (limit,))
        for p in pending[:cut]:
            if count is not None and len(kept) >= count:
                break
            # kept points closer than h in the first coordinate sit at the tail
            ok = True
            for q in reversed(kept):
                if p[0] - q[0] >= h:
                    break
                if dist2(p, q) < h2:
                    ok = False
                    break
            if ok:
                kept.append(p)
        del pending[:cut]

    for bound, batch in stream:
        for p in batch:
            bisect.insort(pending, p)
        feed(bound)
        if count is not None and len(kept) >= count:
            return kept
    feed(None)
    return kept if count is None else kept[:count]


class GridGenerator:
    """Level sets ``E_i = h_i Z^n``; their h-neighbourhoods cover space for n <= 4."""

    name = "grid"

    def stream(self, h: Fraction, center: Sequence[Fraction], radius: Fraction):

        r2 = radius * radius
        lead, *rest = [range(math.ceil((c - radius) / h), math.floor((c + radius) / h) + 1) for c in center]
        for k in lead:
            batch = []
            for tail in itertools.product(*rest):
                p = tuple(j * h for j in (k, *tail))
                if dist2(p, center) <= r2:
                    batch.append(p)
            yield (k + 1) * h, batch

    def candidates(self, level: int, h: Fraction, center: Sequence[Fraction], radius: Fraction, n: int) -> list[tuple]:
        return _stream_candidates(self.stream(h, center, radius))


class StageGenerator:
    """Level sets drawn from shifted-lattice stages of one polynomial.

    Lattice points inside the pivot anchor ball are shifted by the stage
    vector; all other lattice points are kept as they are (they lie in the
    other anchor balls or in the complement region, both part of the stage).
    """

    name = "stage"

    def __init__(self, poly: RationalPoly, anchor):
        from .stagebuild import build_stage  # local: keeps nested importable alone

        self.poly = poly
        self.anchor = anchor
        self._build = build_stage
        self._stages: dict[Fraction, object] = {}

    def stage(self, h: Fraction):
        if h not in self._stages:
            self._stages[h] = self._build(self.poly, self.anchor, h, require_scale=False, materialize=False)[0]
        return self._stages[h]

    def stream(self, h: Fraction, center: Sequence[Fraction], radius: Fraction):

        st = self.stage(h)
        N = st.N
        shift = st.u
        slack = max(abs(s) for s in shift)
        lead, *rest = [range(math.ceil((c - radius - slack) * N), math.floor((c + radius + slack) * N) + 1) for c in center]
        # integer tests on N-scaled coordinates: (k - N x)^2 summed against (N r)^2
        px = [N * c for c in st.anchor.points[st.anchor.pivot_point]]
        pr2 = (N * st.anchor.radius) ** 2
        cx = [N * c for c in center]
        r2 = (N * radius) ** 2
        Nshift = [N * s for s in shift]
        for k in lead:
            batch = []
            for tail in itertools.product(*rest):
                idx = (k, *tail)
                if sum((j - a) ** 2 for j, a in zip(idx, px)) < pr2:
                    q = [j + s for j, s in zip(idx, Nshift)]
                else:
                    q = idx
                if sum((j - a) ** 2 for j, a in zip(q, cx)) <= r2:
                    batch.append(tuple(Fraction(j) / N for j in q))
            yield Fraction(k + 1, N) - slack, batch

    def candidates(self, level: int, h: Fraction, center: Sequence[Fraction], radius: Fraction, n: int) -> list[tuple]:
        return _stream_candidates(self.stream(h, center, radius))


# ---------------------------------------------------------------------------
# trees


@dataclass
class BallNode:
    center: tuple
    radius: Fraction
    level: int
    children: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "center": format_point(self.center),
            "radius": format_rational(self.radius),
            "level": self.level,
            "children": [ch.to_dict() for ch in self.children],
        }


@dataclass
class BallTree:
    root: BallNode
    schedule: Schedule
    radii: list  # b_0..b_k
    counts: list  # children per parent at each level
    c: Fraction
    C: Fraction
    generator: str = "grid"

    @property
    def depth(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return len(self.root.center)

    def level_nodes(self, level: int) -> list[BallNode]:
        nodes = [self.root]
        for _ in range(level):
            nodes = [ch for nd in nodes for ch in nd.children]
        return nodes

    def leaves(self) -> list[BallNode]:
        return self.level_nodes(self.depth)

    def expected_leaf_count(self) -> int:
        return math.prod(self.counts)

    def check(self) -> dict:
        """Exact structural checks: containment, same-level disjointness, counts, radii."""
        contained = True
        disjoint = True
        for lvl in range(self.depth):
            for parent in self.level_nodes(lvl):
                kids = parent.children
                if len(kids) != self.counts[lvl]:
                    contained = False
                for ch in kids:
                    lim = parent.radius - ch.radius
                    if lim < 0 or dist2(ch.center, parent.center) > lim * lim:
                        contained = False
            nodes = self.level_nodes(lvl + 1)
            disjoint = disjoint and _pairwise_disjoint(nodes)
        radii_ok = all(nd.radius == self.radii[lvl] for lvl in range(self.depth + 1) for nd in self.level_nodes(lvl))
        leaves = len(self.leaves())
        return {
            "containment": contained,
            "disjoint": disjoint,
            "radii": radii_ok,
            "leaf_count": leaves,
            "expected_leaf_count": self.expected_leaf_count(),
            "leaf_count_ok": leaves == self.expected_leaf_count(),
        }

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule.describe(),
            "radii": [format_rational(b) for b in self.radii],
            "counts": self.counts,
            "c": format_rational(self.c),
            "C": format_rational(self.C),
            "generator": self.generator,
            "root": self.root.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _pairwise_disjoint(nodes: Sequence[BallNode]) -> bool:
    if len(nodes) < 2:
        return True
    b = max(nd.radius for nd in nodes)
    cells: dict[tuple, list[BallNode]] = {}
    for nd in nodes:
        key = tuple(math.floor(c / (2 * b)) for c in nd.center)
        for off in _neighbour_offsets(len(key)):
            for other in cells.get(tuple(k + o for k, o in zip(key, off)), ()):
                s = nd.radius + other.radius
                if dist2(nd.center, other.center) <= s * s:
                    return False
        cells.setdefault(key, []).append(nd)
    return True


def build_tree(schedule: Schedule, generator=None, center=None, c=None, depth: int | None = None) -> BallTree:
    """Nested ball tree over the schedule's levels (all must be exact)."""
    n, d = schedule.n, schedule.d
    generator = generator or GridGenerator()
    k = len(schedule) if depth is None else depth
    if k > len(schedule):
        raise ScheduleError("depth exceeds the schedule length")
    for i in range(1, k + 1):
        schedule.h(i)  # raises for log-only levels
    c_default, C = packing_constants(n)
    c = c_default if c is None else as_fraction(c)
    center = tuple(Fraction(0) for _ in range(n)) if center is None else as_point(center)
    radii = [Fraction(1)]
    for i in range(1, k + 1):
        radii.append(radius_b(schedule.h(i), d).value)
    root = BallNode(center, radii[0], 0)
    counts = []
    parents = [root]
    for i in range(k):
        h = schedule.h(i + 1)
        b_parent, b_child = radii[i], radii[i + 1]
        if 2 * b_child >= h:
            raise PackingFailure(i + 1, "child radius too large for the net separation")
        count = child_count(c, b_parent, h, n)
        counts.append(count)
        nxt = []
        for parent in parents:
            if hasattr(generator, "stream"):
                net = take_separated(generator.stream(h, parent.center, b_parent - b_child), h, count)
            else:
                cands = generator.candidates(i + 1, h, parent.center, b_parent - b_child, n)
                net = separated_subset(cands, h)[:count]
            if len(net) < count:
                raise PackingFailure(i + 1, f"need {count} children, only {len(net)} candidates fit")
            parent.children = [BallNode(y, b_child, i + 1) for y in net]
            nxt.extend(parent.children)
        parents = nxt
    return BallTree(root, schedule, radii, counts, c, C, getattr(generator, "name", "custom"))


# ---------------------------------------------------------------------------
# measures


def _ball_volume(n: int, r: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n


class MeasureEstimate:
    """Normalized Lebesgue measure restricted to the leaves of a tree."""

    def __init__(self, tree: BallTree, samples: int = 100_000, seed: int = 0):
        self.tree = tree
        self.leaves = tree.leaves()
        self.b = tree.radii[-1]
        self.samples = samples
        self.seed = seed
        self.n = tree.n
        if self.n == 1:
            self._ivs = sorted((nd.center[0] - self.b, nd.center[0] + self.b) for nd in self.leaves)
            self._lefts = [lo for lo, _ in self._ivs]
        else:
            self._centers = np.array([[float(c) for c in nd.center] for nd in self.leaves])

    @property
    def total(self) -> Fraction | float:
        """Lebesgue measure of the leaf union (exact for n = 1)."""
        if self.n == 1:
            return 2 * self.b * len(self.leaves)
        return len(self.leaves) * _ball_volume(self.n, float(self.b))

    def mass(self, x, r):
        """``mu(B(x, r))``; exact Fraction when n = 1, Monte Carlo float otherwise."""
        if self.n == 1:
            return self._mass_1d(as_fraction(x[0]) if isinstance(x, (tuple, list)) else as_fraction(x), as_fraction(r))
        return self.mass_mc(x, r)[0]

    def _mass_1d(self, x: Fraction, r: Fraction) -> Fraction:
        import bisect

        lo, hi = x - r, x + r
        i = max(bisect.bisect_left(self._lefts, lo - 2 * self.b) - 1, 0)
        acc = Fraction(0)
        while i < len(self._ivs) and self._ivs[i][0] <= hi:
            a, b = self._ivs[i]
            overlap = min(b, hi) - max(a, lo)
            if overlap > 0:
                acc += overlap
            i += 1
        return acc / self.total

    def mass_mc(self, x, r) -> tuple[float, float]:
        """Monte Carlo estimate and a 95% Hoeffding half-width."""
        xf = np.array([float(c) for c in x])
        rf = float(r)
        bf = float(self.b)
        near = self._centers[np.linalg.norm(self._centers - xf, axis=1) <= rf + bf]
        if len(near) == 0:
            return 0.0, 0.0
        rng = np.random.default_rng(self.seed)
        g = rng.standard_normal((self.samples, self.n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = rf * rng.random(self.samples) ** (1.0 / self.n)
        pts = xf + g * rad[:, None]
        hit = np.zeros(self.samples, dtype=bool)
        for ctr in near:
            hit |= np.sum((pts - ctr) ** 2, axis=1) <= bf * bf
        frac = hit.mean()
        vol = _ball_volume(self.n, rf)
        half = math.sqrt(math.log(2 / 0.05) / (2 * self.samples))
        return frac * vol / self.total, half * vol / self.total


def gauge(r: float, n: int, d: int) -> float:
    return r ** (n / d) * math.log(1 / r) ** (n + 1)


def _mass_trial_chunk(args):
    tree, rows, samples, seed = args
    meas = MeasureEstimate(tree, samples=samples, seed=seed)
    out = []
    for x, r in rows:
        m = meas.mass(x, r)
        out.append(float(m))
    return out


def _random_balls(tree: BallTree, trials: int, seed: int):
    """Centers uniform in the root's bounding box, radii log-uniform in [b_k/2, h_1/4)."""
    rng = np.random.default_rng(seed)
    n = tree.n
    ctr = np.array([float(c) for c in tree.root.center])
    r_min = float(tree.radii[-1]) / 2
    r_max = float(tree.schedule.h(1)) / 4
    rows = []
    for _ in range(trials):
        x = ctr + rng.uniform(-1.0, 1.0, size=n) * float(tree.root.radius)
        r = math.exp(rng.uniform(math.log(r_min), math.log(r_max)))
        rows.append((tuple(Fraction(v) for v in x), Fraction(r)))
    return rows


def mass_ratios(tree: BallTree, trials: int, seed: int, samples: int = 100_000, threads: int = 1) -> list[tuple]:
    """(radius, mass, mass / gauge) for seeded random balls."""
    rows = _random_balls(tree, trials, seed)
    if threads > 1 and trials > 1:
        step = math.ceil(len(rows) / threads)
        chunks = [(tree, rows[i:i + step], samples, seed) for i in range(0, len(rows), step)]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            masses = [m for part in ex.map(_mass_trial_chunk, chunks) for m in part]
    else:
        masses = _mass_trial_chunk((tree, rows, samples, seed))
    n, d = tree.n, tree.schedule.d
    return [(float(r), m, m / gauge(float(r), n, d)) for (x, r), m in zip(rows, masses)]


def calibrate_mass_constant(tree: BallTree, trials: int = 1000, seed: int = 12345, safety: float = 2.0) -> float:
    """Largest observed mass/gauge ratio times ``safety``."""
    return safety * max(q for _, _, q in mass_ratios(tree, trials, seed))


def ball_mass_bound_check(tree: BallTree, trials: int = 1000, seed: int = 0, constant: float | None = None,
                          samples: int = 100_000, threads: int = 1) -> dict:
    """Compare ``mu(B(x, r))`` with ``C r^(n/d) (ln 1/r)^(n+1)`` on seeded random balls."""
    const = FROZEN_MASS_CONSTANT if constant is None else constant
    data = mass_ratios(tree, trials, seed, samples=samples, threads=threads)
    n, d = tree.n, tree.schedule.d
    violations = [(r, m) for r, m, _ in data if m > const * gauge(r, n, d)]
    worst = max((q for _, _, q in data), default=0.0)
    return {
        "trials": trials,
        "seed": seed,
        "constant": const,
        "max_ratio": worst,
        "violations": len(violations),
        "examples": [{"r": r, "mass": m} for r, m in violations[:5]],
        "exact_volumes": tree.n == 1,
        "passed": not violations,
    }


# ---------------------------------------------------------------------------
# box counting


@dataclass
class BoxCountResult:
    scales: list
    counts: list
    slope: float
    stderr: float
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "scales": [float(s) for s in self.scales],
            "counts": self.counts,
            "slope": self.slope,
            "stderr": self.stderr,
            "degenerate": self.degenerate,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scale", "count"])
        for s, c in zip(self.scales, self.counts):
            w.writerow([format_rational(s) if isinstance(s, Fraction) else repr(float(s)), c])
        return buf.getvalue()


def box_counts(points: Sequence[Sequence], scale) -> int:
    """Occupied boxes ``floor(p / scale)``; exact when points and scale are rationals."""
    return len({tuple(math.floor(c / scale) for c in p) for p in points})


def interval_box_counts(intervals: Sequence[tuple], scale) -> int:
    """Boxes of a 1-D grid meeting a union of closed intervals."""
    boxes: set[int] = set()
    for lo, hi in intervals:
        boxes.update(range(math.floor(lo / scale), math.floor(hi / scale) + 1))
    return len(boxes)


def box_counting_dimension(data, scales: Sequence, intervals: bool = False) -> BoxCountResult:
    """Least-squares slope of log(count) against log(1/scale).

    ``data`` is a point list, a BallTree (its leaf centers), or with
    ``intervals=True`` a list of closed 1-D intervals.
    """
    if isinstance(data, BallTree):
        data = [nd.center for nd in data.leaves()]
    scales = list(scales)
    if len(scales) < 3:
        raise ValueError("need at least 3 scales")
    if any(s <= 0 for s in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be positive and strictly decreasing")
    counter = interval_box_counts if intervals else box_counts
    counts = [counter(data, s) for s in scales]
    if len(set(counts)) == 1:
        return BoxCountResult(scales, counts, 0.0, 0.0, counts[0] <= 1)
    x = np.array([-math.log(float(s)) for s in scales])
    y = np.log(np.array(counts, dtype=float))
    fit = stats.linregress(x, y)
    return BoxCountResult(scales, counts, float(fit.slope), float(fit.stderr), False)


def geometric_scales(hi, lo, count: int) -> list[float]:
    """``count`` scales spaced evenly in log between ``hi`` and ``lo``."""
    return [float(v) for v in np.geomspace(float(hi), float(lo), count)]


def resolved_window(points: Sequence[Sequence]) -> tuple[float, float]:
    """(smallest nearest-neighbour spacing, diameter) of a finite point set.

    Box counts of a finite set only carry information between these two
    scales: below the spacing every point has its own box, above the
    diameter everything shares one.
    """
    arr = np.array([[float(c) for c in p] for p in points])
    if len(arr) < 2:
        raise ValueError("need at least two points")
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(arr).query(arr, k=2)
    spacing = float(dist[:, 1].min())
    diam = float(np.max(np.ptp(arr, axis=0))) * math.sqrt(arr.shape[1])
    return spacing, diam


def cantor_endpoints(stages: int) -> list[tuple]:
    """Endpoints of the middle-thirds construction after ``stages`` steps."""
    ivs = [(Fraction(0), Fraction(1))]
    for _ in range(stages):
        nxt = []
        for a, b in ivs:
            t = (b - a) / 3
            nxt.extend([(a, a + t), (b - t, b)])
        ivs = nxt
    return sorted({(e,) for a, b in ivs for e in (a, b)})


def tree_boxcounts_csv(result: BoxCountResult) -> str:
    return result.to_csv()
