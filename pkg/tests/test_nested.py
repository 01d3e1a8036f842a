from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from avoidset.nested import (
    FROZEN_MASS_CONSTANT,
    BallTree,
    GridGenerator,
    Level,
    MeasureEstimate,
    PackingFailure,
    Schedule,
    ScheduleError,
    ball_mass_bound_check,
    box_counting_dimension,
    build_tree,
    cantor_endpoints,
    child_count,
    count_contained,
    count_in_ball,
    geometric_scales,
    grid_points_in_ball,
    make_schedule,
    packing_constants,
    radius_b,
    resolved_window,
    separated_subset,
    validate_schedule,
)
from avoidset.rationals import dist2

from conftest import points

# -- schedules ----------------------------------------------------------------


def test_strict_two_level_example():
    s = make_schedule(1, 1, 2, "strict")
    assert s.h(1) == Fraction(1, 10)
    assert s.levels[1].log_h <= -100
    assert validate_schedule(s)["passed"]


def test_relaxed_geometric():
    s = make_schedule(1, 1, 3, "relaxed", ratio=Fraction(1, 4))
    assert [s.h(i) for i in (1, 2, 3)] == [Fraction(1, 10), Fraction(1, 40), Fraction(1, 160)]
    assert not s.strict


def test_h1_too_large_rejected():
    s = make_schedule(1, 1, 2, "strict").replaced(1, Fraction(1, 2))
    rep = validate_schedule(s)
    assert not rep["passed"] and 1 in rep["failed_levels"]


def test_first_decay_condition_example():
    s = Schedule(1, 1, (Level.exact(Fraction(1, 10)), Level.exact(Fraction(1, 100))), "custom")
    rep = validate_schedule(s)
    assert rep["failed_levels"] == [2]
    assert rep["levels"][1]["tul1"]["pass"] is False


def test_single_level_passes():
    assert validate_schedule(Schedule(2, 2, (Level.exact(Fraction(1, 10)),)))["passed"]


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("d", [1, 2])
def test_strict_growth_in_log_space(n, d):
    s = make_schedule(n, d, 3, "strict")
    with mpmath.workprec(200):
        logs = [mpmath.mpf(lv.log_h) if lv.h is None else mpmath.log(mpmath.mpf(lv.h.numerator) / lv.h.denominator)
                for lv in s.levels]
        for j in range(1, len(logs)):
            # -ln h_j >= prod_{i<j} h_i^-(dn+1), compared through one more log
            rhs = -(d * n + 1) * sum(logs[:j])
            assert mpmath.log(-logs[j]) >= rhs
            assert logs[j] <= (d + 1) * logs[j - 1] - mpmath.log(6)


def test_log_only_levels_are_not_materializable():
    s = make_schedule(2, 2, 3, "strict")
    assert not s.is_materializable()
    with pytest.raises(ScheduleError):
        s.h(3)


# -- radii --------------------------------------------------------------------


def test_radius_examples():
    b2 = radius_b(Fraction(1, 10), 2)
    assert b2.value == pytest.approx(0.01 / (2 * math.log(10)), rel=1e-12)
    assert abs(float(b2.value) - 2.1715e-3) < 1e-7
    b1 = radius_b(Fraction(1, 10), 1)
    assert abs(float(b1.value) - 0.021715) < 1e-6
    assert Fraction(5, 1000) <= b1.value <= Fraction(25, 1000)
    assert b1.sandwich_lower and b1.sandwich_upper


def test_radius_enclosure():
    b = radius_b(Fraction(1, 7), 3)
    with mpmath.workprec(300):
        exact = mpmath.mpf(1) / 7**3 / (2 * mpmath.log(7))
        lo = mpmath.mpf(b.value.numerator) / b.value.denominator
        hi = mpmath.mpf((b.value + b.error).numerator) / (b.value + b.error).denominator
        assert lo <= exact <= hi
    assert b.error < Fraction(1, 2**60)


def test_radius_monotone():
    assert radius_b(Fraction(1, 20), 1).value < radius_b(Fraction(1, 10), 1).value


def test_radius_upper_sandwich_skipped_above_e_minus_2():
    assert radius_b(Fraction(1, 2), 1).sandwich_upper is None


def test_radius_domain():
    with pytest.raises(ValueError):
        radius_b(Fraction(1), 1)


# -- nets ---------------------------------------------------------------------


def test_separated_example():
    assert separated_subset([(0,), (Fraction(1, 20),), (Fraction(1, 5),)], Fraction(1, 10)) == [(0,), (Fraction(1, 5),)]


def test_separated_trivial_cases():
    pts = [(Fraction(1),), (Fraction(0),)]
    assert separated_subset(pts, 0) == sorted(pts)
    assert separated_subset([(Fraction(3),)], Fraction(1)) == [(Fraction(3),)]


@given(st.lists(points(2, max_num=10, max_den=4), max_size=30), st.fractions(Fraction(1, 8), Fraction(3)))
def test_separated_is_separated_and_maximal(pts, h):
    kept = separated_subset(pts, h)
    for i, p in enumerate(kept):
        for q in kept[i + 1:]:
            assert dist2(p, q) >= h * h
    for p in pts:
        assert any(dist2(p, q) < h * h for q in kept) or tuple(p) in kept


def test_packing_constants():
    assert packing_constants(1) == (Fraction(1, 8), Fraction(8))
    c, C = packing_constants(2)
    # at r = h/4 the upper bound must allow the single net point a ball can hold
    assert C * Fraction(1, 4) ** 2 >= 1
    # at r = 3h the lower bound asks for at least one child
    assert child_count(c, 3, 1, 2) >= 1


def test_child_count_example():
    assert child_count(Fraction(3, 10), Fraction(1, 10), Fraction(1, 100), 1) == 3


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("h", [Fraction(1, 8), Fraction(1, 16)])
def test_net_counting_bounds(n, h):
    c, C = packing_constants(n)
    rng = random.Random(100 * n + h.denominator)
    net = grid_points_in_ball(tuple(Fraction(0) for _ in range(n)), Fraction(2), h)
    b = radius_b(h, 1).value
    for _ in range(100):
        x = tuple(Fraction(rng.randint(-64, 64), 64) for _ in range(n))
        r_up = h / 4 + Fraction(rng.randint(0, 32), 64)
        assert count_in_ball(net, x, r_up) <= C * r_up**n / h**n
        r_lo = 3 * h + Fraction(rng.randint(0, 32), 64)  # stays inside the grid
        assert count_contained(net, x, r_lo, b) >= child_count(c, r_lo, h, n)


# -- trees --------------------------------------------------------------------


def grid_tree(ratio=Fraction(1, 40), k=3, n=1, d=1, c=None):
    return build_tree(make_schedule(n, d, k, "relaxed", ratio=ratio), GridGenerator(), c=c)


def test_depth_zero_is_root():
    t = build_tree(make_schedule(1, 1, 2), depth=0)
    assert t.leaves() == [t.root]
    assert t.root.radius == 1
    assert t.expected_leaf_count() == 1


def test_leaf_count_product():
    t = grid_tree(ratio=Fraction(1, 200), c=Fraction(3, 10))
    expected = [child_count(Fraction(3, 10), t.radii[i], t.schedule.h(i + 1), 1) for i in range(3)]
    assert t.counts == expected
    check = t.check()
    assert check["leaf_count"] == math.prod(expected)
    assert all(check[k] for k in ("containment", "disjoint", "radii", "leaf_count_ok"))


@pytest.mark.parametrize("ratio", [Fraction(1, 40), Fraction(1, 100), Fraction(1, 200)])
def test_tree_geometry(ratio):
    t = grid_tree(ratio)
    chk = t.check()
    assert chk["containment"] and chk["disjoint"] and chk["radii"] and chk["leaf_count_ok"]
    for lvl in range(1, t.depth + 1):
        assert all(nd.radius == radius_b(t.schedule.h(lvl), 1).value for nd in t.level_nodes(lvl))


def test_two_dimensional_tree():
    t = grid_tree(Fraction(1, 10), k=2, n=2)
    chk = t.check()
    assert chk["containment"] and chk["disjoint"] and chk["leaf_count_ok"]


def test_packing_failure_is_loud():
    with pytest.raises(PackingFailure) as err:
        grid_tree(Fraction(1, 40), c=Fraction(1000))
    assert err.value.level == 1


def test_tree_json_shape():
    import json

    t = grid_tree()
    doc = json.loads(t.to_json())
    assert doc["root"]["radius"] == "1"
    assert doc["schedule"]["mode"] == "relaxed"
    child = doc["root"]["children"][0]
    assert set(child) == {"center", "radius", "level", "children"}


# -- measure ------------------------------------------------------------------


def test_measure_normalization():
    t = grid_tree()
    meas = MeasureEstimate(t)
    assert meas.mass(t.root.center, t.root.radius) == 1
    assert meas.mass((Fraction(5),), Fraction(1, 2)) == 0


def test_mass_bound_two_level():
    t = grid_tree(Fraction(1, 40), k=2)
    rep = ball_mass_bound_check(t, trials=1000, seed=3)
    assert rep["violations"] == 0
    assert rep["constant"] == FROZEN_MASS_CONSTANT


def test_mass_bound_thread_independent():
    t = grid_tree()
    a = ball_mass_bound_check(t, trials=60, seed=9, threads=1)
    b = ball_mass_bound_check(t, trials=60, seed=9, threads=2)
    assert a == b


def test_monte_carlo_mass_in_two_dimensions():
    t = grid_tree(Fraction(1, 10), k=2, n=2)
    meas = MeasureEstimate(t, samples=20000, seed=1)
    m, half = meas.mass_mc((Fraction(0), Fraction(0)), Fraction(3))
    assert abs(m - 1) <= half + 1e-9


# -- box counting -------------------------------------------------------------


def test_full_grid_slope():
    k = 8
    pts = [(Fraction(i, 2**k),) for i in range(2**k)]
    res = box_counting_dimension(pts, [Fraction(1, 2**j) for j in range(1, k + 1)])
    assert abs(res.slope - 1) <= 0.05


def test_cantor_slope():
    res = box_counting_dimension(cantor_endpoints(6), [Fraction(1, 3**j) for j in range(1, 7)])
    assert abs(res.slope - math.log(2) / math.log(3)) <= 0.05


def test_single_point_degenerate():
    res = box_counting_dimension([(Fraction(1, 3),)], [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
    assert res.slope == 0 and res.degenerate


def test_box_counting_needs_three_decreasing_scales():
    with pytest.raises(ValueError):
        box_counting_dimension([(0,)], [1, 0.5])
    with pytest.raises(ValueError):
        box_counting_dimension([(0,)], [0.5, 1, 0.25])


def test_box_counts_csv_and_window():
    pts = cantor_endpoints(3)
    lo, hi = resolved_window(pts)
    assert lo == pytest.approx(1 / 27) and hi == pytest.approx(1)
    res = box_counting_dimension(pts, geometric_scales(hi, lo, 5))
    lines = res.to_csv().splitlines()
    assert lines[0] == "scale,count" and len(lines) == 6
