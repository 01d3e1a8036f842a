from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from avoidset.polycore import (
    NEG_INF,
    RationalPoly,
    clear_denominators,
    parse_poly,
    poly_degree,
    poly_eval,
    poly_partial,
    restrict_to_line,
    top_monomial_chain,
)
from avoidset.presets import builtin_preset
from avoidset.rationals import as_fraction, nearest_integer_distance, parse_rational, rational_sqrt

from conftest import rationals


def right_angle_pairs() -> RationalPoly:
    return builtin_preset("right_angle", 2)[0].polys[0]


def to_sympy(P: RationalPoly):
    xs = sympy.symbols(f"x0:{P.num_vars}")
    expr = sympy.Integer(0)
    for mono, c in P.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for k, e in enumerate(mono):
            term *= xs[k] ** e
        expr += term
    return expr, xs


def from_sympy(expr, xs) -> RationalPoly:
    poly = sympy.Poly(sympy.expand(expr), *xs)
    terms = {m: Fraction(int(c.p), int(c.q)) for m, c in zip(poly.monoms(), poly.coeffs())}
    return RationalPoly(len(xs), terms)


@st.composite
def polys(draw, num_vars=None, max_deg=4, max_terms=6):
    nv = num_vars or draw(st.integers(1, 8))
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        mono = [0] * nv
        for _ in range(draw(st.integers(0, max_deg))):
            mono[draw(st.integers(0, nv - 1))] += 1
        terms[tuple(mono)] = draw(rationals())
    return RationalPoly(nv, terms)


# -- evaluation ---------------------------------------------------------------


def test_eval_orthogonal_unit_vectors():
    P = right_angle_pairs()
    assert poly_eval(P, [1, 0, 0, 0, 0, 1, 0, 0]) == 0


def test_eval_against_hand_sum():
    # (1-0)(1-0) + (0-0)(1-0)
    assert poly_eval(right_angle_pairs(), [1, 0, 0, 0, 1, 1, 0, 0]) == 1


def test_zero_poly_evaluates_to_zero():
    assert poly_eval(RationalPoly.zero(3), [5, Fraction(1, 3), -2]) == 0


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        poly_eval(right_angle_pairs(), [1, 2, 3])


def test_eval_rejects_floats():
    with pytest.raises(TypeError):
        poly_eval(RationalPoly.variable(1, 0), [0.5])


@given(polys(num_vars=4), polys(num_vars=4), st.lists(rationals(), min_size=4, max_size=4))
def test_eval_is_a_ring_homomorphism(P, Q, x):
    assert poly_eval(P + Q, x) == poly_eval(P, x) + poly_eval(Q, x)
    assert poly_eval(P * Q, x) == poly_eval(P, x) * poly_eval(Q, x)


@given(polys(), st.data())
def test_eval_matches_sympy(P, data):
    x = data.draw(st.lists(rationals(), min_size=P.num_vars, max_size=P.num_vars))
    expr, xs = to_sympy(P)
    val = expr.subs({s: sympy.Rational(v.numerator, v.denominator) for s, v in zip(xs, x)})
    assert poly_eval(P, x) == Fraction(int(sympy.numer(val)), int(sympy.denom(val)))


# -- derivatives --------------------------------------------------------------


def test_partial_power_rule():
    P = parse_poly("x0^2 * x1", 2)
    assert poly_partial(P, 0) == parse_poly("2 * x0 * x1", 2)


def test_partial_absent_variable():
    assert poly_partial(parse_poly("x0^2", 2), 1).is_zero()


def test_partial_of_right_angle_form():
    # d/dx_0 of sum (x_i - y_i)(z_i - v_i): variables x=0,1 y=2,3 z=4,5 v=6,7
    P = right_angle_pairs()
    expr, xs = to_sympy(P)
    assert poly_partial(P, 0) == from_sympy(sympy.diff(expr, xs[0]), xs)
    assert poly_partial(P, 0) == parse_poly("x4 + -1 * x6", 8)


def test_partial_index_out_of_range():
    with pytest.raises(IndexError):
        poly_partial(parse_poly("x0", 1), 1)


@given(polys(), st.data())
def test_partial_matches_sympy(P, data):
    var = data.draw(st.integers(0, P.num_vars - 1))
    expr, xs = to_sympy(P)
    assert poly_partial(P, var) == from_sympy(sympy.diff(expr, xs[var]), xs)


@given(polys(max_deg=4), st.data())
def test_directional_derivative_identity(P, data):
    nv = P.num_vars
    x = data.draw(st.lists(rationals(), min_size=nv, max_size=nv))
    e = data.draw(st.lists(rationals(), min_size=nv, max_size=nv))
    coeffs = restrict_to_line(P, x, e)
    t1 = coeffs[1] if len(coeffs) > 1 else Fraction(0)
    assert t1 == sum(ej * poly_eval(poly_partial(P, j), x) for j, ej in enumerate(e))


# -- degree -------------------------------------------------------------------


def test_degrees():
    assert poly_degree(right_angle_pairs()) == 2
    assert poly_degree(builtin_preset("angle_pair_equality", 2)[0].polys[0]) == 8
    assert poly_degree(RationalPoly.zero(2)) is NEG_INF
    assert NEG_INF < -(10**9)
    assert NEG_INF != -1


# -- derivative chain ---------------------------------------------------------


def test_chain_of_product():
    ch = top_monomial_chain(parse_poly("x0 * x1", 2))
    assert ch.var_order == (0, 1)
    assert list(ch.polys) == [parse_poly(t, 2) for t in ("x0 * x1", "x1", "1")]


def test_chain_of_square():
    ch = top_monomial_chain(parse_poly("x0^2", 1))
    assert ch.polys[1] == parse_poly("2 * x0", 1)
    assert ch.constant() == 2


def test_chain_right_angle():
    ch = top_monomial_chain(right_angle_pairs())
    assert len(ch) == 3
    assert ch.polys[-1].is_constant() and ch.constant() != 0
    assert ch.constant().denominator == 1
    assert ch.check()


def test_chain_of_zero_rejected():
    with pytest.raises(ValueError):
        top_monomial_chain(RationalPoly.zero(2))


@given(polys(max_deg=4))
def test_chain_contract_random(P):
    if P.is_zero():
        return
    ch = top_monomial_chain(P)
    assert len(ch) == P.degree + 1
    assert ch.polys[-1].is_constant() and ch.constant() != 0
    for k, var in enumerate(ch.var_order):
        assert ch.polys[k + 1] == poly_partial(ch.polys[k], var)


# -- clear_denominators -------------------------------------------------------


def test_clear_denominators_example():
    Q, lam = clear_denominators(parse_poly("1/2 * x0 + 1/3", 1))
    assert Q == parse_poly("3 * x0 + 2", 1)
    assert lam == 6


def test_clear_denominators_identity_and_zero():
    P = parse_poly("3 * x0 + 2", 1)
    assert clear_denominators(P) == (P, 1)
    Z = RationalPoly.zero(2)
    assert clear_denominators(Z) == (Z, 1)


@given(polys())
def test_clear_denominators_invariants(P):
    import math

    Q, lam = clear_denominators(P)
    assert lam > 0
    assert Q.has_integer_coefficients()
    if not P.is_zero():
        assert math.gcd(*(int(c) for _, c in Q.items())) == 1
    assert set(Q.terms) == set(P.terms)
    assert Q == P * lam


# -- text format --------------------------------------------------------------


@given(polys())
def test_text_round_trip(P):
    text = P.to_text()
    assert parse_poly(text, P.num_vars) == P
    assert parse_poly(text, P.num_vars).to_text() == text


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_poly("3 * y0", 1)


# -- rational helpers ---------------------------------------------------------


def test_rational_helpers():
    assert parse_rational("-3/6") == Fraction(-1, 2)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert rational_sqrt(Fraction(9, 16)) == Fraction(3, 4)
    assert rational_sqrt(Fraction(2)) is None
    assert nearest_integer_distance(Fraction(7, 2)) == Fraction(1, 2)
    assert nearest_integer_distance(Fraction(-13, 5)) == Fraction(2, 5)
    with pytest.raises(TypeError):
        as_fraction(0.1)
