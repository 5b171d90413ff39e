"""Sparse polynomials, rational functions, and the shared text syntax."""

import random

import pytest

from hsderiv.errors import DivisionByZero, UnknownVariable
from hsderiv.gf import FqContext
from hsderiv.poly import MultiPoly, RationalFunc, term_key
from hsderiv.textform import (
    format_poly,
    format_ratfunc,
    format_scalar,
    parse_poly,
    parse_ratfunc,
    parse_scalar,
)


def _rand_poly(ctx, vars, rng, deg=3, nterms=5):
    terms = {}
    for _ in range(nterms):
        e = tuple(rng.randrange(deg) for _ in vars)
        terms[e] = ctx.random_scalar(rng)
    return MultiPoly(ctx, vars, terms)


def test_term_order_is_degree_then_first_variable_heavy():
    assert term_key((1, 0)) < term_key((0, 1))
    assert term_key((2, 0)) < term_key((1, 1)) < term_key((0, 2))
    assert term_key((0, 0)) < term_key((1, 0))


def test_square_of_sum():
    ctx = FqContext(3, 1)
    vars = ("x", "y")
    x = MultiPoly.var(ctx, vars, "x")
    y = MultiPoly.var(ctx, vars, "y")
    f = (x + y) ** 2
    assert f == x**2 + 2 * x * y + y**2
    # char 3 kills the cross term at cube
    assert (x + y) ** 3 == x**3 + y**3


def test_format_poly_canonical_order():
    ctx = FqContext(2, 1)
    vars = ("v1", "w1")
    v = MultiPoly.var(ctx, vars, "v1")
    w = MultiPoly.var(ctx, vars, "w1")
    assert format_poly(v + w + v * w) == "v1 + w1 + v1*w1"
    assert format_poly(MultiPoly.zero(ctx, vars)) == "0"
    ctx3 = FqContext(3, 1)
    x = MultiPoly.var(ctx3, ("x", "y"), "x")
    y = MultiPoly.var(ctx3, ("x", "y"), "y")
    assert format_poly(x * y**2 + x**2 * y) == "x^2*y + x*y^2"


def test_parse_poly_round_trip_random():
    rng = random.Random(2024)
    for p, d in ((2, 1), (3, 1), (3, 2)):
        ctx = FqContext(p, d)
        vars = ("x1", "x2", "v1")
        for _ in range(25):
            f = _rand_poly(ctx, vars, rng)
            assert parse_poly(ctx, vars, format_poly(f)) == f


def test_parse_poly_syntax_features():
    ctx = FqContext(5, 1)
    vars = ("x1", "x2")
    f = parse_poly(ctx, vars, "3*x1^2*x2 + x2 - 2")
    x1 = MultiPoly.var(ctx, vars, "x1")
    x2 = MultiPoly.var(ctx, vars, "x2")
    assert f == 3 * x1**2 * x2 + x2 - 2
    assert parse_poly(ctx, vars, "-x1 + (x1 + 1)^2") == x1**2 + x1 + 1
    with pytest.raises(UnknownVariable):
        parse_poly(ctx, vars, "x3 + 1")
    with pytest.raises(UnknownVariable):
        parse_poly(ctx, vars, "g*x1")
    with pytest.raises(ValueError):
        parse_poly(ctx, vars, "x1 +")


def test_scalar_format_and_parse_extension_field():
    ctx = FqContext(3, 2)
    g = ctx.gen
    s = 2 * g + 1
    assert format_scalar(s) == "2*g + 1"
    assert parse_scalar(ctx, "2*g + 1") == s
    assert parse_scalar(ctx, "g^2") == g**2
    assert parse_scalar(ctx, 4) == ctx.scalar(1)
    rng = random.Random(5)
    for _ in range(20):
        a = ctx.random_scalar(rng)
        assert parse_scalar(ctx, format_scalar(a)) == a


def test_extension_coefficients_round_trip_in_polynomials():
    ctx = FqContext(2, 2)
    vars = ("x1",)
    g = ctx.gen
    x = MultiPoly.var(ctx, vars, "x1")
    f = MultiPoly.const(ctx, vars, g + 1) * x**2 + MultiPoly.const(ctx, vars, g) * x
    text = format_poly(f)
    assert parse_poly(ctx, vars, text) == f


def test_exact_division():
    ctx = FqContext(5, 1)
    vars = ("x", "y")
    rng = random.Random(99)
    for _ in range(20):
        a = _rand_poly(ctx, vars, rng, deg=3, nterms=4)
        b = _rand_poly(ctx, vars, rng, deg=3, nterms=3)
        if not b:
            continue
        assert (a * b).exact_div(b) == a
    x = MultiPoly.var(ctx, vars, "x")
    y = MultiPoly.var(ctx, vars, "y")
    with pytest.raises(ValueError):
        (x**2 + y).exact_div(y**2)
    with pytest.raises(DivisionByZero):
        x.exact_div(MultiPoly.zero(ctx, vars))


def test_monomial_content_and_shift():
    ctx = FqContext(3, 1)
    vars = ("x", "y")
    x = MultiPoly.var(ctx, vars, "x")
    y = MultiPoly.var(ctx, vars, "y")
    f = x**2 * y + 2 * x * y**2
    assert f.monomial_content() == (1, 1)
    g = f.shift_down((1, 1))
    assert g == x + 2 * y


def test_ratfunc_normalization_and_equality():
    ctx = FqContext(5, 1)
    vars = ("x",)
    x = MultiPoly.var(ctx, vars, "x")
    one = MultiPoly.one(ctx, vars)
    r = RationalFunc(one, 2 * x)
    # denominator normalized monic
    assert r.den == x
    assert r.num == 3 * one  # 1/2 = 3 mod 5
    assert RationalFunc(one, x) == RationalFunc(x, x**2)
    assert RationalFunc(MultiPoly.zero(ctx, vars), x).den == one
    with pytest.raises(DivisionByZero):
        RationalFunc(one, MultiPoly.zero(ctx, vars))
    with pytest.raises(DivisionByZero):
        RationalFunc(MultiPoly.zero(ctx, vars), one).inverse()


def test_ratfunc_arithmetic():
    ctx = FqContext(3, 1)
    vars = ("x",)
    x = RationalFunc.from_poly(MultiPoly.var(ctx, vars, "x"))
    inv = 1 / x
    assert x * inv == 1
    assert (x + inv) * x == x**2 + 1
    assert x - x == 0
    assert (x**-2) * x**2 == 1
    assert bool(x) and not bool(x - x)


def test_ratfunc_format_parse_round_trip():
    ctx = FqContext(3, 1)
    vars = ("x1", "x2")
    rng = random.Random(31)
    for _ in range(20):
        num = _rand_poly(ctx, vars, rng, nterms=3)
        den = _rand_poly(ctx, vars, rng, nterms=2)
        if not den:
            continue
        r = RationalFunc(num, den)
        assert parse_ratfunc(ctx, vars, format_ratfunc(r)) == r
    assert format_ratfunc(RationalFunc.from_poly(MultiPoly.one(ctx, vars))) == "1"
