from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from curvepattern.pow2field import ONE, P2, ZERO, pmin, psum


def test_sqrt2_squares_to_two():
    r = P2.pow2(F(1, 2))
    assert r * r == P2.rational(2)
    assert r.sign() == 1 and (r - ONE).sign() == 1 and (r - P2.rational(F(3, 2))).sign() == -1


def test_mixed_denominators():
    a = P2.pow2(F(1, 3))
    b = P2.pow2(F(1, 2))
    prod = a * a * a * b * b
    assert prod == P2.rational(4)


def test_inverse_and_division():
    x = P2.rational(3) + P2.pow2(F(1, 4))
    assert x * x.inverse() == ONE
    assert (x / x) == ONE


def test_sum_min_and_zero():
    xs = [P2.pow2(F(-k, 3)) for k in range(5)]
    assert abs(float(psum(xs)) - sum(2 ** (-k / 3) for k in range(5))) < 1e-14
    assert pmin(xs[1], xs[2]) == xs[2]
    assert ZERO.is_zero() and ZERO.sign() == 0


def test_hash_and_json():
    a = P2.pow2(F(3, 2))
    b = P2.rational(2) * P2.pow2(F(1, 2))
    assert a == b and hash(a) == hash(b)
    assert a.to_json()["exact"]


exps = st.fractions(min_value=-3, max_value=3, max_denominator=4)
coefs = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(coefs, exps), min_size=1, max_size=4),
       st.lists(st.tuples(coefs, exps), min_size=1, max_size=4))
def test_order_matches_floats(xs, ys):
    a = psum(P2.rational(c) * P2.pow2(e) for c, e in xs)
    b = psum(P2.rational(c) * P2.pow2(e) for c, e in ys)
    fa, fb = float(a), float(b)
    if abs(fa - fb) > 1e-9:
        assert (a < b) == (fa < fb)
    assert (a - b) + b == a
