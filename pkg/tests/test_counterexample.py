import math

import numpy as np
import pytest

from curvepattern.classifier import classify
from curvepattern.counterexample import (
    BudgetExceeded, FbmGraphSample, RadiusConstants, FLAT_CONSTANTS, avoidance_experiment,
    avoidance_radius, box_counts, densest_cell, exact_avoidance, fbm_graph, fbm_path,
    flat_curve, graph_dim_estimate, holder_estimate, holder_gamma, holder_window,
    parabola_curve, rotation_to, separation,
)
from curvepattern.curvecore import make_curve

DEPENDENT = make_curve(["t-2", "t^2-2t", "t^2+t-6"], (0, 1))


def test_gamma_formula():
    assert holder_gamma(1.5, 2) == pytest.approx(1.0)
    assert holder_window(1.5, 2) == pytest.approx(0.5)
    assert holder_gamma(2.5, 3) == pytest.approx(min(2 / 2.5, 2 * 0.5 / 2))
    # the two branches meet at s = d - 1 only when d = 2
    assert holder_gamma(1.0, 2) == pytest.approx(2.0)
    for bad in ((0.5, 2), (2.0, 2)):
        with pytest.raises(ValueError):
            holder_gamma(*bad)


def test_fbm_reproducible_and_shaped():
    a = fbm_graph(1.5, 3, 2 ** 10, seed=4)
    b = fbm_graph(1.5, 3, 2 ** 10, seed=4)
    c = fbm_graph(1.5, 3, 2 ** 10, seed=5)
    assert a.values.shape == (2 ** 10, 2)
    assert np.array_equal(a.values, b.values) and not np.array_equal(a.values, c.values)
    assert a.values[0] == pytest.approx([0, 0])
    assert not np.allclose(a.values[:, 0], a.values[:, 1])


def test_fbm_bad_size():
    with pytest.raises(ValueError):
        fbm_graph(1.5, 2, 1000, seed=0)


def test_fbm_path_linear_for_h1():
    x, method = fbm_path(64, 1.0, np.random.default_rng(0))
    t = np.linspace(0, 1, 64)
    assert np.allclose(x, x[-1] * t)


def test_save_load(tmp_path):
    g = fbm_graph(1.5, 2, 2 ** 10, seed=1)
    data, side = g.save(tmp_path / "g")
    assert data.exists() and side.exists()
    h = FbmGraphSample.load(tmp_path / "g")
    assert np.array_equal(h.values, g.values) and h.meta() == g.meta()


def _line(n=2 ** 14):
    t = np.linspace(0, 1, n)
    return FbmGraphSample(1.0, 2, 2.0, 1.0, t, (0.3 * t)[:, None], 0, "line")


def test_dimension_of_line():
    est = graph_dim_estimate(_line())
    assert est.dim == pytest.approx(1.0, abs=0.05)


def test_box_counts_line_exact():
    t = np.linspace(0, 1, 2 ** 12)
    counts = box_counts(t, np.zeros_like(t)[:, None], [2, 3, 4])
    assert counts == [4, 8, 16]


def test_holder_constant_path():
    t = np.linspace(0, 1, 1024)
    g = FbmGraphSample(1.5, 2, 1.0, 0.5, t, np.full((1024, 1), 2.5), 0, "const")
    h = holder_estimate(g, 0.4)
    assert h.seminorm == 0 and h.value == pytest.approx(2.5)


def test_holder_of_line():
    # |0.3 h| / h^0.5 peaks at the longest lag
    h = holder_estimate(_line(2 ** 10), 0.5)
    assert 0 < h.seminorm <= 0.3 * (1 + 1e-9)
    assert h.sup_norm == pytest.approx(0.3)
    with pytest.raises(ValueError):
        holder_estimate(_line(2 ** 10), 1.0)


def test_rotation_to():
    for u in ((0, 1), (1, 0), (3, -4), (1, 2, 2)):
        U = rotation_to(u)
        assert np.allclose(U @ U.T, np.eye(len(u)))
        e1 = np.zeros(len(u))
        e1[0] = 1
        assert np.allclose(U @ e1, np.asarray(u) / np.linalg.norm(u))


def test_radius_monotone_in_norm():
    rc = RadiusConstants(**FLAT_CONSTANTS, alpha=0.4)
    assert avoidance_radius(rc, 10) > avoidance_radius(rc, 100) > 0


def test_densest_cell():
    P = np.array([[0.1, 0.1], [0.15, 0.12], [0.9, 0.9]])
    lo, count = densest_cell(P, 0.25)
    assert count == 2 and np.allclose(lo, 0)


def test_separation_simple():
    K = np.array([[0.0, 0.0], [1.0, 0.0]])
    gam = np.array([[0.0, 0.5], [0.5, 0.0], [1.0, 0.0]])
    rep = separation(gam, K, tol=1e-3)
    assert rep["separation"] == 0.0 and rep["argmin"] == [1.0, 0.0]
    with pytest.raises(BudgetExceeded):
        separation(gam, K, 1e-3, budget=5)


def test_exact_avoidance():
    cert = exact_avoidance(DEPENDENT)
    u = cert.u
    assert cert.identity_holds and [x / u[2] for x in u] == [-3, -1, 1]
    rep = avoidance_experiment(DEPENDENT)
    assert rep.mode == "exact" and rep.positive
    with pytest.raises(ValueError):
        exact_avoidance(make_curve(["t", "t^2"]))
    assert classify(DEPENDENT).status == "avoidable"


def test_parabola_hits_grid():
    xs = np.arange(16) / 16
    K = np.array([[a, b] for a in xs for b in xs])
    rep = avoidance_experiment(parabola_curve(), K=K, tol=1e-3)
    assert rep.separation == 0.0 and not rep.positive


def test_flat_curve_separation_positive():
    g = fbm_graph(1.5, 2, 2 ** 14, seed=0)
    rc = RadiusConstants(**FLAT_CONSTANTS, alpha=0.4)
    rep = avoidance_experiment(flat_curve(), g, u=(0.0, 1.0), constants=rc)
    assert rep.positive and math.isfinite(rep.separation)
    assert rep.details["r"] < rep.details["radius_bound"]
    assert any("densest" in f for f in rep.flags)
