import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from curvepattern.anisotropic.boxes import (
    BoxFormatError, BoxSet, DyadicBox, ZeroMass, anisotropic_dim_bounds, cantor_set, full_set,
    locate, random_set, rho_distance, unit_box,
)
from curvepattern.anisotropic.content import (
    EmptySet, NoBox, content, content_bruteforce, content_table, cover_cost, covers, frostman,
    high_density_box,
)
from curvepattern.anisotropic.energy import (
    ExponentOutOfRange, box_energy, box_kernel, energy, energy_direct, energy_whitney, whitney_bound,
)
from curvepattern.anisotropic.pipeline import blow_up, build_pipeline_measure
from curvepattern.constants import compute_bundle
from curvepattern.measures import DiscreteMeasure, point_mass, uniform_cube
from curvepattern.pow2field import P2


# boxes ------------------------------------------------------------------------

def test_rescaling_map_example():
    Q = DyadicBox((1, 3), 1, (1, 2))
    assert Q.lower() == (F(1, 2), F(1, 4)) and Q.upper() == (1, F(3, 8))
    assert Q.T((F(3, 4), F(5, 16))) == (F(1, 2), F(1, 2))
    y = (F(1, 3), F(5, 7))
    assert Q.T(Q.T_inv(y)) == y


def test_children_and_parents():
    b = DyadicBox((1, 2), 2, (3, 9))
    kids = b.children()
    assert len(kids) == 8 and len(set(kids)) == 8
    assert all(k.parent() == b and b.is_ancestor_of(k) for k in kids)
    assert sum(k.volume() for k in kids) == b.volume()
    assert len(list(b.descendants(2))) == 64


def test_T_box_roundtrip():
    Q = DyadicBox((1, 2), 1, (1, 3))
    for q in Q.descendants(2):
        assert Q.T_inv_box(Q.T_box(q)) == q
        assert Q.T_box(q).lower() == Q.T(q.lower())


def test_locate():
    b = locate((F(3, 4), F(5, 16)), (1, 3), 1)
    assert b == DyadicBox((1, 3), 1, (1, 2))


def test_boxset_text_and_json_roundtrip(tmp_path):
    E = random_set((1, 2), 2, np.random.default_rng(0))
    assert BoxSet.from_text(E.to_text()) == E
    assert BoxSet.from_json(E.to_json()) == E
    p = tmp_path / "e.txt"
    p.write_text(E.to_text())
    assert BoxSet.load(p) == E


@pytest.mark.parametrize("text", ["", "boxset d=2 n=1 depth=1\n0 0", "nothing here", "boxset d=x"])
def test_boxset_format_errors(text):
    with pytest.raises(BoxFormatError):
        BoxSet.from_text(text)


def test_boxset_rejects_outside_leaf():
    with pytest.raises(ValueError):
        BoxSet((1, 1), 1, [(2, 0)])


def test_restrict_and_contains():
    E = full_set((1, 1), 2)
    q = DyadicBox((1, 1), 1, (1, 0))
    R = E.restrict(q)
    assert len(R) == 4 and R.root == q
    assert E.contains_box(q) and E.contains_box(DyadicBox((1, 1), 3, (7, 7)))
    C = cantor_set((1, 1), 2, [0])
    assert not C.contains_box(q)


def test_rho_distance():
    assert rho_distance((0, 0), (F(1, 2), F(1, 8)), (1, 3)) == pytest.approx(1.0)
    x, y = (0.1, 0.7), (0.4, 0.2)
    assert rho_distance(x, y, (1, 1)) == pytest.approx(2 * 0.5)
    assert rho_distance(x, x, (1, 2)) == 0
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b, c = rng.random((3, 2))
        assert rho_distance(a, c, (1, 2)) <= rho_distance(a, b, (1, 2)) + rho_distance(b, c, (1, 2)) + 1e-12
        assert rho_distance(a, b, (1, 2)) == rho_distance(b, a, (1, 2))


def test_dim_bounds_isotropic():
    lo, hi = anisotropic_dim_bounds(1.5, (1, 1))
    assert lo == 1.5 and hi == 2


# content ----------------------------------------------------------------------

def test_content_examples():
    one = BoxSet((1, 2), 1, [(0, 0)])
    assert content(one, 1) == P2.rational(F(1, 2))
    all8 = full_set((1, 2), 1)
    assert content(all8, 3) == P2.rational(1)
    assert content_bruteforce(all8, 3) == P2.rational(1)
    assert content(BoxSet((1, 2), 2, []), 1) == P2.rational(0)
    assert content(all8, F(7, 2)) == P2.rational(0)


def test_content_irrational_exponent_field():
    E = BoxSet((1, 1), 1, [(0, 0)])
    assert content(E, F(1, 2)) == P2.pow2(F(-1, 2))


def test_optimal_cover_attains_content():
    rng = np.random.default_rng(11)
    for _ in range(30):
        E = random_set((1, 2), 2, rng, 0.3)
        if not E:
            continue
        s = F(int(rng.integers(1, 7)), 2)
        t = content_table(E, s)
        cov = t.optimal_cover()
        assert covers(cov, E)
        assert cover_cost(cov, s) == t.value


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 16 - 1), st.sampled_from([F(1, 2), F(1), F(3, 2), F(2)]))
def test_dp_matches_bruteforce_n11(mask, s):
    anchors = list(itertools.product(range(4), range(4)))
    E = BoxSet((1, 1), 2, [a for i, a in enumerate(anchors) if mask >> i & 1])
    assert content(E, s) == content_bruteforce(E, s)


def test_bruteforce_limit():
    with pytest.raises(ValueError):
        content_bruteforce(full_set((1, 2), 2), 1)


# frostman ----------------------------------------------------------------------

def test_frostman_full_root():
    cert = frostman(full_set((1, 2), 1), 2)
    assert cert.total == P2.rational(1) and cert.valid


def test_frostman_single_box():
    for s in (F(1, 2), F(1), F(5, 2)):
        E = BoxSet((1, 2), 2, [(1, 5)])
        cert = frostman(E, s)
        assert cert.total == P2.pow2(-2 * s) == content(E, s)


def test_frostman_random_valid():
    rng = np.random.default_rng(5)
    for _ in range(40):
        E = random_set((1, 2), int(rng.integers(1, 4)), rng, 0.4)
        if not E:
            continue
        s = F(int(rng.integers(1, 6)), 2)
        cert = frostman(E, s)
        assert cert.valid and cert.total == content(E, s)
        m = cert.measure()
        assert m.mass == pytest.approx(float(cert.total))


def test_frostman_empty():
    with pytest.raises(EmptySet):
        frostman(BoxSet((1, 1), 1, []), 1)


def test_high_density_box():
    assert high_density_box(full_set((1, 2), 2), 2, 0) == unit_box((1, 2))
    K = cantor_set((1, 2), 4, range(7))
    Q = high_density_box(K, F(5, 2), F(1, 4))
    assert content(K.restrict(Q), F(5, 2)) >= P2.rational(F(3, 4)) * Q.ell_pow(F(5, 2))
    with pytest.raises(NoBox):
        high_density_box(BoxSet((1, 2), 2, []), 1, F(1, 4))


# energy ------------------------------------------------------------------------

def test_two_atoms_energy():
    m = DiscreteMeasure([[0, 0], [1, 0]], [0.5, 0.5])
    assert energy_direct(m, 1) == pytest.approx(0.5)
    assert energy_whitney(DiscreteMeasure([[0.2, 0.2], [1.2, 0.2]], [0.5, 0.5]), 1)["value"] == pytest.approx(0.5)


def test_whitney_equals_direct_random():
    rng = np.random.default_rng(2)
    m = DiscreteMeasure(rng.random((300, 2)) * 1.99, rng.random(300))
    w = energy_whitney(m, 1.3)
    assert w["value"] == pytest.approx(energy_direct(m, 1.3), rel=1e-12)
    assert w["dyadic_upper"] >= w["value"]


def test_sigma_range():
    with pytest.raises(ExponentOutOfRange):
        energy_direct(point_mass([0, 0]), 2)
    with pytest.raises(ExponentOutOfRange):
        whitney_bound(2, 1, 1.5, 1.0, 2)


@pytest.mark.parametrize("offset", [(0, 0), (1, 0), (1, 1), (3, -2)])
def test_box_kernel_matches_dblquad(offset):
    h = (0.5, 0.25)
    sigma = 1.2
    c = (offset[0] * h[0], offset[1] * h[1])

    def dens(y, x):
        return ((h[0] - abs(x - c[0])) * (h[1] - abs(y - c[1])) * (x * x + y * y) ** (-sigma / 2)
                / (h[0] * h[1]) ** 2)

    pts_x = sorted({c[0] - h[0], c[0], c[0] + h[0], 0.0})
    total = 0.0
    for x0, x1 in zip(pts_x, pts_x[1:]):
        ys = sorted({c[1] - h[1], c[1], c[1] + h[1], 0.0})
        for y0, y1 in zip(ys, ys[1:]):
            if x0 >= c[0] + h[0] or x1 <= c[0] - h[0] or y0 >= c[1] + h[1] or y1 <= c[1] - h[1]:
                continue
            total += integrate.dblquad(dens, x0, x1, y0, y1, epsabs=1e-11, epsrel=1e-10)[0]
    assert box_kernel(offset, h, sigma) == pytest.approx(total, rel=1e-6)


def test_box_energy_uniform_square():
    # E|X - Y|^-1 for X, Y uniform on the unit square
    val = box_energy(uniform_cube(2, 0), 1.0)
    exact = 4 * (math.log(1 + math.sqrt(2)) - (math.sqrt(2) - 1) / 3)
    assert val == pytest.approx(exact, rel=1e-9)
    assert box_energy(uniform_cube(2, 3), 1.0) == pytest.approx(exact, rel=1e-9)


def test_energy_report_with_bound():
    cert = frostman(full_set((1, 1), 3), F(3, 2))
    rep = energy(cert.measure(), 0.25, 1.5, 2, 1.0)
    assert rep["within_bound"] and rep["value"] <= rep["whitney_bound"]


# pipeline ------------------------------------------------------------------------

def test_blow_up_uniform_and_point():
    Q = DyadicBox((1, 2), 1, (1, 2))
    nu = uniform_cube(2, 3)
    mu = blow_up(nu, Q)
    assert mu.mass == pytest.approx(1) and np.allclose(mu.weights, mu.weights[0])
    assert np.all((mu.points >= 0) & (mu.points < 1))
    pm = blow_up(point_mass([float(x) for x in Q.lower()], 0.3), Q)
    assert np.allclose(pm.points, 0) and pm.weights[0] == pytest.approx(1)
    with pytest.raises(ZeroMass):
        blow_up(point_mass([0.0, 0.0]), Q)


def test_pipeline_full_cube():
    b = compute_bundle(2, 2, "demo", demo_T=2)
    res = build_pipeline_measure(full_set((1, 2), 2), 3, b)
    c = res.certificates
    assert c["nu_mass_equals_ell_Q_s"] and c["frostman_4_ok"]
    assert c["equality_on_cubes"] and c["weights_sum_to_one"]
    assert res.mu_measure().mass == pytest.approx(1)
    assert any("spectral" in f for f in res.flags) or "spectral_proxy" in res.diagnostics
