from fractions import Fraction as F

import pytest

from curvepattern.curvecore import (
    INFINITE, CurveFormatError, CurveSpec, CurveStd, NotAZero, certify_bounds, check_standard_form,
    find_common_zeros, make_curve, parse_curve_spec, render_curve_spec, rescale, safe_scale,
    standardize, type_at, vanishing_pattern,
)
from curvepattern.polyparse import parse_poly as P


def test_parse_and_render_roundtrip():
    c = parse_curve_spec("d=3; I=[0,3]; phi1=t-2; phi2=t^2-2t; phi3=t^2+t-6")
    assert c.d == 3 and c.interval == (0, 3)
    assert parse_curve_spec(render_curve_spec(c)) == c
    assert CurveSpec.from_json(c.to_json()) == c
    assert parse_curve_spec('{"d": 2, "I": ["0", "1"], "components": ["t", "t^2"]}').d == 2


@pytest.mark.parametrize("text", [
    "d=2; I=[0,1]; phi1=t",          # wrong count
    "d=2; I=[1,0]; phi1=t; phi2=t^2",  # bad interval
    "d=1; I=[0,1]; phi1=t",
    "nonsense",
])
def test_bad_specs(text):
    with pytest.raises((CurveFormatError, ValueError)):
        parse_curve_spec(text)


@pytest.mark.parametrize("comps, interval, zeros", [
    (["t^2-1", "t^3+5t-6", "2t^3-t^2-1"], (0, 1), [1]),
    (["t-2", "t^2-2t", "t^2+t-6"], (0, 3), [2]),
    (["t+1", "t^2-1", "t^3+2t+1"], (0, 1), []),
])
def test_common_zeros(comps, interval, zeros):
    assert find_common_zeros(make_curve(comps, interval)) == [F(z) for z in zeros]


@pytest.mark.parametrize("comps, pattern, N", [
    (["t^2", "t^3+t^4"], (2, 3), 3),
    (["t", "t^2"], (1, 2), 2),
    (["t+t^2", "t+t^3"], (1, 1), 2),
])
def test_pattern_and_type(comps, pattern, N):
    c = make_curve(comps)
    assert vanishing_pattern(c, F(0)).orders == pattern
    assert type_at(c, F(0)) == N


def test_infinite_type():
    c = make_curve(["t-2", "t^2-2t", "t^2+t-6"], (0, 3))
    assert type_at(c, F(2)) == INFINITE


def test_not_a_zero():
    with pytest.raises(NotAZero):
        standardize(make_curve(["t+1", "t^2"]), F(0))


def test_standardize_elimination():
    c = make_curve(["t+t^2", "t+t^3"])
    std = standardize(c)
    assert std.pattern == (1, 2) and std.type_N == 2
    assert std.components[0] == P("t+t^2")
    assert std.components[1] == P("t^2-t^3")
    assert check_standard_form(std, c) == []


def test_standardize_parabola_identity():
    std = standardize(make_curve(["t", "t^2"]))
    assert std.pattern == (1, 2)
    assert std.transform_L == [[1, 0], [0, 1]]
    assert std.K_N == 4


def test_standardize_23_and_rescale():
    c = make_curve(["t^2", "t^3+t^4"])
    std = standardize(c)
    assert std.pattern == (2, 3) and std.type_N == 3
    for j in range(5):
        a, b = rescale(std, j)
        assert a == P("t^2")
        assert b == P("t^3") + P("t^4") * F(1, 2 ** j)
    assert rescale(std, 0) == std.components


def test_rescale_monomial_invariant():
    std = standardize(make_curve(["t", "t^3"]))
    for j in range(4):
        assert rescale(std, j) == std.components


def test_standardize_shifted_zero():
    c = make_curve(["t^2-1", "t^3+5t-6", "2t^3-t^2-1"], (0, 2))
    std = standardize(c, F(1))
    assert check_standard_form(std, c) == []
    assert std.base_point == 1


def test_safe_scale_certifies():
    std = standardize(make_curve(["t+3t^2", "t^2+5t^5"]))
    J = safe_scale(std)
    assert certify_bounds(std, J)
    assert J == 0 or not certify_bounds(std, J - 1)


def test_curvestd_json_roundtrip():
    std = standardize(make_curve(["t^2", "t^3+t^4"]))
    assert CurveStd.from_json(std.to_json()) == std


def test_jet_curve_carries_remainder():
    c = make_curve(["t", "t^2"], jet_order=3, remainder=F(1, 10))
    std = standardize(c)
    assert std.truncated and std.remainder > 0
    assert check_standard_form(std) == []
