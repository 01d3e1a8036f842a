"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py`` (lines appear in the terminal
output) or ``python tests/test_acceptance.py`` for just the summary.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from fractions import Fraction

import pytest
import sympy

from avoidset.analyze import PointCloud, naive_violations, verify_exclusion
from avoidset.analyze.falconer import falconer_angle_check, falconer_C_cover
from avoidset.nested import (
    FROZEN_MASS_CONSTANT,
    StageGenerator,
    ball_mass_bound_check,
    box_counting_dimension,
    build_tree,
    cantor_endpoints,
    child_count,
    geometric_scales,
    make_schedule,
    packing_constants,
    radius_b,
    resolved_window,
    validate_schedule,
)
from avoidset.polycore import RationalPoly, clear_denominators, poly_eval, poly_partial, restrict_to_line, top_monomial_chain
from avoidset.presets import PRESET_SCHEMAS, builtin_preset
from avoidset.stagebuild import build_stage, certify_gap, make_anchor

RIGHT_ANCHOR = [(0, 0), (1, 0), (0, 1)]
RESULTS: dict[int, str] = {}


def emit(k: int, ok: bool, detail: str, capsys=None) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)


def criterion_1_stage():
    spec = builtin_preset("right_angle", 2)[1]
    P = spec.polys[0]
    anchor = make_anchor(P, RIGHT_ANCHOR)
    return spec, build_stage(P, anchor, Fraction(15, 100), require_scale=False)


# -- 1 ------------------------------------------------------------------------


def check_1():
    t0 = time.perf_counter()
    _, (stage, pts) = criterion_1_stage()
    rep = certify_gap(stage, pts, perturbations=10_000, seed=2024)
    elapsed = time.perf_counter() - t0
    ok = (
        stage.N <= 12
        and rep.tuples_checked >= 1
        and rep.perturbations == 10_000
        and rep.zero_values == 0
        and rep.min_unperturbed >= Fraction(1, 4)
        and rep.min_perturbed >= Fraction(1, 4)
        and elapsed <= 60
    )
    detail = (f"N={stage.N} tuples={rep.tuples_checked} min_margin={float(rep.min_unperturbed):.4f} "
              f"min_perturbed={float(rep.min_perturbed):.4f} zeros={rep.zero_values} ({elapsed:.1f}s <= 60s)")
    return ok, detail


# -- 2 ------------------------------------------------------------------------


def check_2():
    spec, (stage, pts) = criterion_1_stage()
    cloud = PointCloud.from_points(pts.all_points(), provenance="stage")
    stage_found = verify_exclusion(cloud, spec)
    grid = PointCloud.from_points([(i, j) for i in range(4) for j in range(4)], provenance="grid")
    counts = []
    for s in builtin_preset("right_angle", 2):
        fast = len(verify_exclusion(grid, s))
        oracle = len(naive_violations(grid, s))
        counts.append((s.name, fast, oracle))
    ok = not stage_found and all(f == o for _, f, o in counts)
    detail = f"stage cloud {len(cloud)} pts -> {len(stage_found)} violations; 4x4 grid " + ", ".join(
        f"{name}: {f}=={o}" for name, f, o in counts)
    return ok, detail


# -- 3 ------------------------------------------------------------------------


def check_3():
    t0 = time.perf_counter()
    bad = []
    for n, i in itertools.product((2, 3), (1, 2, 3)):
        for N in (2, 4):
            got = Fraction(falconer_C_cover(N, i, n, materialize=False).meta["pre_merge_length"])
            if got != Fraction(162 * n**5, i * i):
                bad.append((N, n, i, got))
    rep = falconer_angle_check([4], 1, 2, sample=200, seed=0)
    elapsed = time.perf_counter() - t0
    ok = not bad and rep["escapes"] == 0 and rep["triples"] == 200 and elapsed <= 30
    detail = (f"identity mismatches={len(bad)}; angle check triples={rep['triples']} "
              f"escapes={rep['escapes']} exempt={rep['exempt']} ({elapsed:.1f}s <= 30s)")
    return ok, detail


# -- 4 ------------------------------------------------------------------------


def _margins_ok(val: dict) -> bool:
    for row in val["levels"]:
        for key in ("tul1", "tul2"):
            m = row[key].get("log_margin")
            if m is not None and float(m) < 0:
                return False
    return True


def check_4():
    problems = []
    for n, d, k in itertools.product((1, 2), (1, 2), (1, 2, 3)):
        s = make_schedule(n, d, k, "strict")
        val = validate_schedule(s)
        if not (val["passed"] and _margins_ok(val)):
            problems.append(f"strict n={n} d={d} k={k}")
        mut1 = validate_schedule(s.replaced(1, Fraction(1, 2)))
        if mut1["failed_levels"] != [1]:
            problems.append(f"h1 mutation n={n} d={d} k={k}: {mut1['failed_levels']}")
        if k >= 2:
            mut2 = validate_schedule(s.scaled(2, 10))
            if mut2["failed_levels"] != [2]:
                problems.append(f"h2 mutation n={n} d={d} k={k}: {mut2['failed_levels']}")
    return not problems, "12 strict schedules, 20 mutations; " + ("all as required" if not problems else "; ".join(problems))


# -- 5 ------------------------------------------------------------------------


def check_5():
    problems = []
    worst = 0.0
    for ratio in (Fraction(1, 40), Fraction(1, 100), Fraction(1, 200)):
        s = make_schedule(1, 1, 3, "relaxed", ratio=ratio)
        tree = build_tree(s)
        c, _ = packing_constants(1)
        b = [Fraction(1)] + [radius_b(s.h(i), 1).value for i in (1, 2, 3)]
        product = math.prod(child_count(c, b[i], s.h(i + 1), 1) for i in range(3))
        chk = tree.check()
        if not (chk["leaf_count"] == product and chk["containment"] and chk["disjoint"]):
            problems.append(f"ratio {ratio}: {chk}")
        mass = ball_mass_bound_check(tree, trials=1000, seed=7)
        worst = max(worst, mass["max_ratio"])
        if mass["violations"]:
            problems.append(f"ratio {ratio}: {mass['violations']} mass violations")
    detail = f"3 trees, leaf counts = product formula; mass max ratio {worst:.2f} vs frozen C={FROZEN_MASS_CONSTANT}"
    return not problems, detail if not problems else "; ".join(problems)


# -- 6 ------------------------------------------------------------------------


def check_6():
    t0 = time.perf_counter()
    cantor = box_counting_dimension(cantor_endpoints(6), [Fraction(1, 3**k) for k in range(1, 7)])
    spec = builtin_preset("equilateral", 1)[0]
    P, _ = clear_denominators(spec.polys[0])
    anchor = make_anchor(P, spec.witness)
    sched = make_schedule(1, P.degree, 2, "relaxed", ratio=Fraction(1, 10**5))
    tree = build_tree(sched, StageGenerator(P, anchor), center=(Fraction(1),))
    pts = [nd.center for nd in tree.leaves()]
    lo, hi = resolved_window(pts)
    composed = box_counting_dimension(pts, geometric_scales(hi, lo, 12))
    elapsed = time.perf_counter() - t0
    ok = (abs(cantor.slope - 0.6309) <= 0.05 and 0.35 <= composed.slope <= 0.75
          and tree.check()["leaf_count_ok"] and elapsed <= 120)
    detail = (f"cantor slope {cantor.slope:.4f}; stage-composed n=1 d=2 slope {composed.slope:.3f} "
              f"(target 0.5, {len(pts)} leaves, window [{lo:.2e}, {hi:.2e}]) ({elapsed:.1f}s <= 120s)")
    return ok, detail


# -- 7 ------------------------------------------------------------------------


def _sympy_of(P: RationalPoly):
    xs = sympy.symbols(f"x0:{P.num_vars}")
    expr = sympy.Integer(0)
    for mono, c in P.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for k, e in enumerate(mono):
            term *= xs[k] ** e
        expr += term
    return expr, xs


def _random_poly(rng: random.Random) -> RationalPoly:
    nv = rng.randint(1, 6)
    terms = {}
    for _ in range(rng.randint(1, 5)):
        mono = [0] * nv
        for _ in range(rng.randint(0, 4)):
            mono[rng.randrange(nv)] += 1
        terms[tuple(mono)] = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
    return RationalPoly(nv, terms)


def check_7():
    chains = 0
    problems = []
    for name in PRESET_SCHEMAS:
        for spec in builtin_preset(name):
            for P in spec.composed():
                ch = top_monomial_chain(P)
                chains += 1
                if not (ch.polys[-1].is_constant() and ch.constant() != 0):
                    problems.append(f"{spec.name}: chain end")
                expr, xs = _sympy_of(P)
                for k, var in enumerate(ch.var_order):
                    expr = sympy.diff(expr, xs[var])
                    if ch.polys[k + 1] != poly_partial(ch.polys[k], var) or sympy.expand(expr - _sympy_of(ch.polys[k + 1])[0]) != 0:
                        problems.append(f"{spec.name}: step {k}")
    rng = random.Random(500)
    t = sympy.Symbol("t")
    for _ in range(500):
        P = _random_poly(rng)
        x = [Fraction(rng.randint(-20, 20), rng.randint(1, 7)) for _ in range(P.num_vars)]
        e = [Fraction(rng.randint(-20, 20), rng.randint(1, 7)) for _ in range(P.num_vars)]
        lhs = sum(ej * poly_eval(poly_partial(P, j), x) for j, ej in enumerate(e))
        coeffs = restrict_to_line(P, x, e)
        ours = coeffs[1] if len(coeffs) > 1 else Fraction(0)
        expr, xs = _sympy_of(P)
        line = sympy.expand(expr.subs({s: sympy.Rational(a.numerator, a.denominator) + t * sympy.Rational(b.numerator, b.denominator)
                                       for s, a, b in zip(xs, x, e)}, simultaneous=True))
        oracle = line.coeff(t, 1)
        if not (lhs == ours and Fraction(int(sympy.numer(oracle)), int(sympy.denom(oracle))) == lhs):
            problems.append("directional identity")
    return not problems, f"{chains} preset chains end in nonzero constants; 500 directional-derivative instances exact" if not problems else "; ".join(problems[:5])


# -- 8 ------------------------------------------------------------------------


def check_8():
    problems = []
    count = 0
    for name in PRESET_SCHEMAS:
        for spec in builtin_preset(name):
            count += 1
            if not all(v == 0 for v in spec.evaluate(spec.witness)):
                problems.append(f"{spec.name} witness")
            vals = spec.evaluate(spec.anti_witness)
            if not any(v != 0 for v in vals) or not all(isinstance(v, Fraction) for v in vals):
                problems.append(f"{spec.name} anti-witness")
    return not problems, f"{count} specs over {len(PRESET_SCHEMAS)} presets" if not problems else "; ".join(problems)


CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6, 7: check_7, 8: check_8}


@pytest.mark.parametrize("k", sorted(CHECKS))
def test_criterion(k, capsys):
    ok, detail = CHECKS[k]()
    emit(k, ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    for k, fn in CHECKS.items():
        emit(k, *fn())
