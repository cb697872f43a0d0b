from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from curvepattern.polyalg import (
    RatPoly, combine, isolate_roots, linear_relations, matrix_rank, nullspace,
    poly_gcd, square_free, sturm_root_count,
)
from curvepattern.polyparse import PolySyntaxError, UnsupportedVariable, parse_poly

P = parse_poly


@pytest.mark.parametrize("text, coeffs", [
    ("t^2 - 1", (-1, 0, 1)),
    ("2t^3 - t^2 - 1", (-1, 0, -1, 2)),
    ("0", ()),
    ("-t", (0, -1)),
    ("(t-1)^2", (1, -2, 1)),
    ("3/2*t + 1/4", (F(1, 4), F(3, 2))),
])
def test_parse(text, coeffs):
    assert P(text).coeffs == tuple(F(c) for c in coeffs)


@pytest.mark.parametrize("bad", ["t^", "2**", "(t+1", "t t +"])
def test_parse_errors(bad):
    with pytest.raises(PolySyntaxError):
        P(bad)


def test_unknown_variable():
    with pytest.raises(UnsupportedVariable):
        P("x^2")


def test_derivative():
    assert P("t^3+5t-6").derivative() == P("3t^2+5")
    assert P("t^2").derivative(2) == P("2")
    assert P("7").derivative().is_zero()


@pytest.mark.parametrize("polys, g", [
    (["t^2-1", "t-1"], "t-1"),
    (["t^2-1", "t^3+5t-6", "2t^3-t^2-1"], "t-1"),
    (["t+1", "t^3+2t+1"], "1"),
])
def test_gcd(polys, g):
    assert poly_gcd([P(x) for x in polys]) == P(g)


@pytest.mark.parametrize("p, a, b, n", [
    ("t^2-1", 0, 2, 1), ("t^2+1", -10, 10, 0), ("(t-1)^2", 0, 2, 1), ("t^3-t", -2, 2, 3),
])
def test_sturm(p, a, b, n):
    assert sturm_root_count(P(p), a, b) == n


def test_isolate_roots_irrational():
    roots = isolate_roots(P("t^2-2"), 0, 2)
    assert len(roots) == 1
    r = roots[0].refine(F(1, 10 ** 12))
    assert abs(r.approx() - 2 ** 0.5) < 1e-11
    assert r.vanishes(P("t^4-4"))
    assert not r.vanishes(P("t-1"))


def test_linear_relations():
    rel = linear_relations([P("t^2-1"), P("t^3+5t-6"), P("2t^3-t^2-1")])
    assert rel["rank"] == 3 and rel["nullspace_basis"] == []
    rel = linear_relations([P("t-2"), P("t^2-2t"), P("t^2+t-6")])
    assert rel["rank"] == 2
    (u,) = rel["nullspace_basis"]
    assert [x / u[2] for x in u] == [-3, -1, 1]
    rel = linear_relations([P("t")] * 3)
    assert rel["rank"] == 1 and len(rel["nullspace_basis"]) == 2
    for u in rel["nullspace_basis"]:
        assert combine(u, [P("t")] * 3).is_zero()


def test_rank_and_nullspace():
    rows = [[F(1), F(2)], [F(2), F(4)]]
    assert matrix_rank(rows) == 1
    (v,) = nullspace(rows)
    assert v[0] + 2 * v[1] == 0


def test_square_free():
    assert square_free(P("(t-1)^3*(t+2)")) == P("(t-1)*(t+2)")


coef = st.fractions(min_value=-5, max_value=5, max_denominator=6)
polys = st.lists(coef, min_size=0, max_size=6).map(RatPoly)


@settings(max_examples=150, deadline=None)
@given(polys, polys.filter(lambda p: not p.is_zero()))
def test_divmod_identity(a, b):
    q, r = divmod(a, b)
    assert q * b + r == a
    assert r.is_zero() or r.degree < b.degree


@settings(max_examples=100, deadline=None)
@given(polys, polys, polys)
def test_gcd_divides(a, b, c):
    if (a * c).is_zero() and (b * c).is_zero():
        return
    g = poly_gcd([a * c, b * c])
    for p in (a * c, b * c):
        assert (p % g).is_zero()


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=4, unique=True))
def test_sturm_counts_planted_roots(roots):
    p = RatPoly([1])
    for r in roots:
        p = p * RatPoly([-r, 1])
    assert sturm_root_count(p, -5, 5) == len(roots)
    assert len(isolate_roots(p, -5, 5)) == len(roots)
