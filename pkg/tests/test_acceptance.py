"""End-to-end acceptance checks, one test per criterion.

Each test records a pass/fail line; the lines are printed in the terminal
summary.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import json
import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from curvepattern.anisotropic.boxes import BoxSet, DyadicBox, full_set, random_set
from curvepattern.anisotropic.content import (
    content, content_table, cover_cost, covers, frostman, min_cover_all,
)
from curvepattern.anisotropic.energy import energy, energy_direct, energy_whitney
from curvepattern.anisotropic.pipeline import build_pipeline_measure
from curvepattern.classifier import CommonZero, Dependence, NoCommonZero, classify, verify_certificate
from curvepattern.constants import compute_bundle, verify_C
from curvepattern.counterexample import (
    FLAT_CONSTANTS, RadiusConstants, avoidance_experiment, exact_avoidance, fbm_graph, flat_curve,
    graph_dim_estimate, increment_variance_test,
)
from curvepattern.curvecore import NotFiniteType, check_standard_form, make_curve, rescale, standardize
from curvepattern.measures import (
    CurveMeasureParams, DiscreteMeasure, ball_sweep, configuration_integral, curve_measure, measure_scale_J,
    pattern_witness, point_mass, uniform_cube, verify_decay,
)
from curvepattern.polyalg import RatPoly
from curvepattern.pow2field import P2

pytestmark = pytest.mark.slow

UNAVOIDABLE = make_curve(["t^2-1", "t^3+5t-6", "2t^3-t^2-1"], (0, 1))
DEPENDENT = make_curve(["t-2", "t^2-2t", "t^2+t-6"], (0, 1))
NO_ZERO = make_curve(["t+1", "t^2-1", "t^3+2t+1"], (0, 1))


def test_c01_golden_triple(record):
    t0 = time.perf_counter()
    v1, v2, v3 = classify(UNAVOIDABLE), classify(DEPENDENT), classify(NO_ZERO)
    dt = time.perf_counter() - t0
    u = v2.certificate.u if isinstance(v2.certificate, Dependence) else None
    ok = (v1.status == "unavoidable" and isinstance(v1.certificate, CommonZero)
          and v2.status == "avoidable" and u is not None and [x / u[2] for x in u] == [-3, -1, 1]
          and v3.status == "avoidable" and isinstance(v3.certificate, NoCommonZero)
          and all(verify_certificate(c, v) for c, v in ((UNAVOIDABLE, v1), (DEPENDENT, v2), (NO_ZERO, v3)))
          and dt < 1.0)
    assert record(1, ok, f"{dt:.3f}s"), (v1, v2, v3, dt)


def _random_curve(rng: random.Random):
    d = rng.choice((2, 3))
    comps = []
    for _ in range(d):
        deg = rng.randint(1, 6)
        # vanish at 0 so there is a rational base point
        comps.append(RatPoly([0] + [rng.randint(-4, 4) for _ in range(deg)]))
    return make_curve(comps, (0, 1))


def test_c02_standardization(record):
    rng = random.Random(2024)
    done, bad = 0, []
    while done < 200:
        c = _random_curve(rng)
        if any(p.is_zero() for p in c.components):
            continue
        try:
            std = standardize(c)
        except NotFiniteType:
            continue
        done += 1
        problems = check_standard_form(std, c)
        if problems:
            bad.append((c.to_json(), problems))
    std = standardize(make_curve(["t^2", "t^3+t^4"]))
    remark = std.pattern == (2, 3)
    for j in range(4):
        want = (RatPoly([0, 0, 1]), RatPoly([0, 0, 0, 1, F(1, 2 ** j)]))
        remark = remark and rescale(std, j) == want
    ok = not bad and remark
    assert record(2, ok, f"{done} curves, {len(bad)} failures, (2,3) remark {'ok' if remark else 'bad'}"), bad[:3]


# keep probabilities giving a few hundred leaves at depth 3
KEEP = {(1, 1): 0.6, (1, 2): 0.35, (2, 3): 0.2}


def _exhaustive(n_vec, depth, s_values):
    """Compare the DP with a global set-cover table over every subset of leaves."""
    full = full_set(n_vec, depth)
    leaves = full.leaf_boxes()
    idx = {b.anchor: i for i, b in enumerate(leaves)}
    mismatches, checked = 0, 0
    for s in s_values:
        cands = []
        for k in range(depth + 1):
            for anc in full.level(k):
                b = DyadicBox(n_vec, k, anc)
                mask = 0
                for leaf in b.descendants(depth - k):
                    mask |= 1 << idx[leaf.anchor]
                cands.append((mask, b.ell_pow(s)))
        best = min_cover_all(len(leaves), cands)
        for mask in range(1 << len(leaves)):
            E = BoxSet(n_vec, depth, [leaves[i].anchor for i in range(len(leaves)) if mask >> i & 1])
            checked += 1
            if content(E, s) != best[mask]:
                mismatches += 1
    return checked, mismatches


def test_c03_content_oracle(record):
    checked = mismatches = 0
    for n_vec, depth, svals in (((1, 1), 1, [F(1, 2), F(1), F(3, 2), F(2)]),
                                ((1, 1), 2, [F(1, 2), F(3, 2)]),
                                ((1, 2), 1, [F(1), F(2), F(5, 2)]),
                                ((2, 2), 1, [F(3, 2), F(7, 2)])):
        c, m = _exhaustive(n_vec, depth, svals)
        checked, mismatches = checked + c, mismatches + m
    rng = np.random.default_rng(33)
    sampled_bad = 0
    for _ in range(200):
        n_vec = ((1, 1), (1, 2), (2, 3))[int(rng.integers(3))]
        E = random_set(n_vec, 3, rng, KEEP[n_vec])
        s = F(int(rng.integers(1, 2 * E.S + 1)), 2)
        t = content_table(E, s)
        opt = t.optimal_cover()
        if not (covers(opt, E) and cover_cost(opt, s) == t.value):
            sampled_bad += 1
        # random covers: replace each leaf by a random ancestor
        for _ in range(5):
            cov = {b.ancestor(int(rng.integers(0, E.depth + 1))) for b in E.leaf_boxes()}
            if cover_cost(cov, s) < t.value:
                sampled_bad += 1
    ok = mismatches == 0 and sampled_bad == 0
    assert record(3, ok, f"{checked} exhaustive sets, {mismatches} mismatches; 200 sampled, {sampled_bad} bad")


def test_c04_frostman(record):
    rng = np.random.default_rng(44)
    bad = 0
    trials = 0
    while trials < 200:
        n_vec = ((1, 1), (1, 2), (2, 3))[int(rng.integers(3))]
        E = random_set(n_vec, int(rng.integers(1, 4)), rng, KEEP[n_vec])
        if not E:
            continue
        trials += 1
        s = F(int(rng.integers(1, 2 * E.S + 1)), 2)
        cert = frostman(E, s)
        # independent box masses: accumulate every leaf into each of its ancestors
        acc: dict = {}
        for b in E.leaf_boxes():
            for k in range(E.depth + 1):
                a = b.ancestor(k)
                acc[a] = acc.get(a, P2.rational(0)) + cert.leaf_mass[b.anchor]
        capped = all(m <= a.ell_pow(s) for a, m in acc.items())
        root_mass = acc[E.root]
        if not (capped and root_mass >= content(E, s) and cert.valid):
            bad += 1
    assert record(4, bad == 0, f"{trials} sets, {bad} failures"), bad


def test_c05_energy(record):
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(3):
        xs = (np.arange(64) + 0.5) / 64
        pts = np.array([[a, b] for a in xs for b in xs])
        m_pts = DiscreteMeasure(pts, rng.random(len(pts)))
        for sigma in (0.5, 1.25, 1.9):
            w = energy_whitney(m_pts, sigma)["value"]
            dr = energy_direct(m_pts, sigma)
            worst = max(worst, abs(w - dr) / dr)
    over = 0
    trials = 0
    for n_vec, s in (((1, 1), F(3, 2)), ((1, 2), F(5, 2))):
        S, d = sum(n_vec), 2
        sigma = float(s) - 0.25 - S + d
        for _ in range(10):
            E = random_set(n_vec, 3 if n_vec == (1, 1) else 2, rng, 0.6)
            if not E:
                continue
            trials += 1
            rep = energy(frostman(E, s).measure(), sigma, float(s), S, 1.0)
            over += not rep["within_bound"]
    ok = worst <= 1e-12 and over == 0
    assert record(5, ok, f"whitney/direct rel err {worst:.2e}; {trials} Frostman trials, {over} over bound")


def test_c06_ball_condition(record):
    t0 = time.perf_counter()
    rep = ball_sweep(standardize(make_curve(["t", "t^2"])))
    dt = time.perf_counter() - t0
    ok = rep["violations"] == 0 and dt < 60
    assert record(6, ok, f"{len(rep['rows'])} cases, {rep['violations']} violations, {dt:.1f}s")


def test_c07_fourier_decay(record):
    t0 = time.perf_counter()
    lines, ok = [], True
    for comps in (["t", "t^2"], ["t^2", "t^3"]):
        std = standardize(make_curve(comps))
        b = compute_bundle(2, std.type_N)
        J = measure_scale_J(std)
        rep = verify_decay(std, b, [J, J + 2], [1.0, 0.5, 1e-3], r_max=1e4)
        ok = ok and rep["ok"]
        lines.append(f"{'/'.join(comps)} max ratio {rep['max_ratio']:.3g} <= L_N {rep['L_N']:.3g}")
        if comps == ["t", "t^2"]:
            slopes = [r["slope"] for r in rep["rows"] if not math.isnan(r["slope"])]
            ok = ok and bool(slopes) and max(slopes) <= -0.45
            lines.append(f"parabola slope {max(slopes):.3f}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    assert record(7, ok, "; ".join(lines) + f"; {dt:.0f}s")


def test_c08_configuration_integral(record):
    std = standardize(make_curve(["t", "t^2"]))
    c = 1e-3
    mu = uniform_cube(2, 5)
    pi = curve_measure(CurveMeasureParams(std, 0, c, 2048))
    coarse = curve_measure(CurveMeasureParams(std, 0, c, 1024))
    rep = configuration_integral(mu, pi, pi_coarse=coarse)
    oracle = 5 / 12 - (c - c ** 2 / 2 - c ** 3 / 3 + c ** 4 / 4)
    rel = (rep.proxy - oracle) / oracle
    pm = configuration_integral(point_mass([0.5, 0.5]), pi)
    k = next(i for i, dl in enumerate(pm.deltas) if dl <= 2.0 ** -12)
    decay_ok = pm.values[k] < 1e-6
    wit_ok = True
    if rep.quad_error is not None and rep.proxy > 2 * rep.quad_error[-1]:
        dl = rep.deltas[-1]
        wit_ok = pattern_witness(mu, pi, dl).residual <= math.sqrt(dl)
    ok = abs(rel) <= 0.02 and decay_ok and wit_ok
    assert record(8, ok, f"proxy {rep.proxy:.6f} vs {oracle:.6f} ({100 * rel:+.2f}%); "
                         f"point mass {pm.values[k]:.1e}; witness {'ok' if wit_ok else 'bad'}")


def test_c09_constants(record):
    b = compute_bundle(2, 2, "rigorous")
    margins_ok = all(e.margin >= 0 for e in b.audit)
    eps_ok = b.log2_epsilon <= -4 and b.log2_epsilon <= -1
    same = json.dumps(b.to_json(), sort_keys=True, default=str) == json.dumps(
        compute_bundle(2, 2, "rigorous").to_json(), sort_keys=True, default=str)
    ok = margins_ok and eps_ok and same and verify_C(b)
    assert record(9, ok, f"{len(b.audit)} audit entries, log2 eps {float(b.log2_epsilon):.1f}, C {float(b.C):.2f}")


def test_c10_demo_pipeline(record):
    b = compute_bundle(2, 2, "demo", demo_T=2)
    res = build_pipeline_measure(full_set((1, 2), 2), 3, b)
    c = res.certificates
    ok = c["nu_mass_equals_ell_Q_s"] and c["frostman_4_ok"] and c["equality_on_cubes"]
    assert record(10, ok, f"max ratio {c['max_mu_ratio_float']:.3f}")


def test_c11_fbm(record):
    t0 = time.perf_counter()
    dims = [graph_dim_estimate(fbm_graph(1.5, 2, 2 ** 16, seed)).dim for seed in range(10)]
    inside = sum(1.35 <= x <= 1.65 for x in dims)
    rows = increment_variance_test(1.5, 2, 2 ** 12, range(200))
    zmax = max(abs(r["z"]) for r in rows)
    dt = time.perf_counter() - t0
    ok = inside >= 8 and zmax <= 3 and dt < 120
    assert record(11, ok, f"dims {min(dims):.3f}..{max(dims):.3f} ({inside}/10 in range); "
                          f"max |z| {zmax:.2f}; {dt:.0f}s")


def test_c12_avoidance(record):
    cert = exact_avoidance(DEPENDENT)
    u = cert.u
    exact_ok = cert.identity_holds and [x / u[2] for x in u] == [-3, -1, 1]
    seps = []
    for seed in range(10):
        g = fbm_graph(1.5, 2, 2 ** 16, seed)
        rc = RadiusConstants(**FLAT_CONSTANTS, alpha=0.4)
        rep = avoidance_experiment(flat_curve(), g, u=(0.0, 1.0), tol=1e-3, constants=rc)
        seps.append(rep.separation)
    positive = sum(x > 0 for x in seps)
    ok = exact_ok and positive == 10
    assert record(12, ok, f"exact {'certified' if exact_ok else 'failed'}; "
                          f"{positive}/10 positive, min separation {min(seps):.2e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
