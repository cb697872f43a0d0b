"""Blow-ups and the demo-scale measure pipeline.

Given K (a BoxSet), an exponent s and a demo constant bundle, the pipeline
picks a high-density box Q, builds Frostman measures theta_q on K cap q for
the generation-T descendants q of Q, glues them with bump weights
w(q) = int_{T_Q(q)} phi into nu, and blows nu up to mu on the unit box.
Every structural identity is certified in exact arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np

from ..bump import PlateauBump
from ..measures import DiscreteMeasure, fourier
from ..pow2field import ZERO, psum
from .boxes import BoxSet, DyadicBox, ZeroMass, unit_box
from .content import DensityUnmet, content, frostman, high_density_box, max_density_ratio, node_masses
from .energy import box_energy


def blow_up(nu: DiscreteMeasure, Q: DyadicBox) -> DiscreteMeasure:
    """nu^Q: restrict to Q, push forward by T_Q, normalise."""
    lo = np.array([float(x) for x in Q.lower()])
    hi = np.array([float(x) for x in Q.upper()])
    scale = np.array([2.0 ** (n * Q.j) for n in Q.n_vec])
    inside = np.all((nu.points >= lo) & (nu.points < hi), axis=1)
    mass = math.fsum(nu.weights[inside])
    if mass <= 0:
        raise ZeroMass("nu(Q) = 0")
    pts = (nu.points[inside] - lo) * scale
    cell = None if nu.cell is None else nu.cell * scale
    return DiscreteMeasure(pts, nu.weights[inside] / mass, nu.label, cell)


@dataclass
class PipelineResult:
    Q: DyadicBox
    s: Fraction
    T: int
    nu_leaves: dict
    mu_leaves: dict
    mu_set: BoxSet
    certificates: dict
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def mu_measure(self) -> DiscreteMeasure:
        boxes = self.mu_set.leaf_boxes()
        pts = np.array([[float(x) for x in b.centre()] for b in boxes])
        w = np.array([float(self.mu_leaves[b.anchor]) for b in boxes])
        return DiscreteMeasure(pts, w, "frostman", [float(h) for h in boxes[0].sides()])

    def to_json(self) -> dict:
        return {"Q": self.Q.to_json(), "s": str(self.s), "T": self.T,
                "certificates": self.certificates, "flags": self.flags,
                "diagnostics": self.diagnostics,
                "mu_leaves": len(self.mu_leaves)}


def spectral_proxy(mu: DiscreteMeasure, A: float, B: float, n_r: int = 48, n_dir: int = 64) -> float:
    """Polar-grid quadrature of int_{A <= |xi| <= B} |mu_hat|^2 (d = 2)."""
    if mu.d != 2:
        raise NotImplementedError("spectral proxy grid is for d = 2")
    t, w = np.polynomial.legendre.leggauss(n_r)
    r = (A + B) / 2 + (B - A) / 2 * t
    wr = w * (B - A) / 2 * r
    th = np.linspace(0, 2 * np.pi, n_dir, endpoint=False)
    xi = (r[:, None, None] * np.stack([np.cos(th), np.sin(th)], -1)[None]).reshape(-1, 2)
    vals = np.abs(fourier(mu, xi)) ** 2
    return float(np.sum(vals.reshape(n_r, n_dir).mean(axis=1) * 2 * np.pi * wr))


def build_pipeline_measure(K: BoxSet, s, bundle, curve=None, J_min: int = 0,
                           check_spectral: bool = True, check_energy: bool = True) -> PipelineResult:
    s = Fraction(s)
    T = int(bundle.T)
    S, d = K.S, K.d
    flags = [f"bundle: {e.constraint} (margin {e.margin:.3g})" for e in bundle.flags]
    N = max(K.n_vec)
    if curve is not None:
        from ..measures import measure_scale_J

        if tuple(sorted(curve.pattern)) != tuple(sorted(K.n_vec)):
            flags.append(f"curve pattern {curve.pattern} differs from n_vec {K.n_vec}")
        J = measure_scale_J(curve)
        J_min_curve = J
    else:
        J_min_curve = None
    # s must lie in (S - N eps, S]
    eps = bundle.epsilon
    if not (S - N * eps < float(s) <= S):
        flags.append(f"s={s} outside (S - N*eps, S] with eps=2^{float(bundle.log2_epsilon):.4g}")

    delta = Fraction(1, 2 ** (S * T + 2))
    Q = high_density_box(K, s, delta, J_min, K.generation - T)
    if J_min_curve is not None and Q.j < J_min_curve:
        flags.append(f"Q has generation {Q.j} < J(Phi) = {J_min_curve}")

    bump = PlateauBump.for_dimension(d)
    ellQ = Q.ell_pow(s)
    nu: dict = {}
    weights = {}
    for q in Q.descendants(T):
        Kq = K.restrict(q)
        half = q.ell_pow(s) * Fraction(1, 2)
        if not Kq or content(Kq, s) < half:
            raise DensityUnmet(f"moderate density fails on {q.anchor} at generation {q.j}")
        theta = frostman(Kq, s)
        u = Q.T_box(q)
        w = bump.box_integral(u.lower(), u.upper())
        weights[q.anchor] = w
        if w == 0:
            continue
        factor = ellQ * w / theta.total
        for a, m in theta.leaf_mass.items():
            nu[a] = m * factor
    nu_total = psum(nu.values())

    # blow-up to the unit box: T_Q maps leaves to generation K.generation - Q.j
    gen = K.generation
    mu_leaves = {}
    for a, m in nu.items():
        b = Q.T_box(DyadicBox(K.n_vec, gen, a))
        mu_leaves[b.anchor] = m / nu_total
    mu_set = BoxSet(K.n_vec, gen - Q.j, mu_leaves.keys())
    masses = node_masses(mu_set, mu_leaves)
    max_ratio = max_density_ratio(mu_set, masses, s)

    # equality on cubes: mu(Q'') = phi(Q'') on generation-T boxes of the unit box
    eq_ok = True
    level_T = masses[T] if T <= mu_set.depth else {}
    for b in unit_box(K.n_vec).descendants(T):
        want = bump.box_integral(b.lower(), b.upper())
        have = level_T.get(b.anchor, ZERO)
        if not have == want:
            eq_ok = False
            break

    certs = {
        "nu_mass_equals_ell_Q_s": bool(nu_total == ellQ),
        "nu_mass": nu_total.to_json(),
        "max_mu_ratio": max_ratio.to_json(),
        "max_mu_ratio_float": float(max_ratio),
        "frostman_4_ok": bool(max_ratio <= 4),
        "equality_on_cubes": eq_ok,
        "weights_sum_to_one": sum(weights.values()) == 1,
    }
    res = PipelineResult(Q, s, T, nu, mu_leaves, mu_set, certs, flags)

    mu = res.mu_measure()
    A, B = float(bundle.A), float(bundle.B)
    if check_spectral and d == 2:
        val = spectral_proxy(mu, A, B)
        target = A ** (-4 * d)
        res.diagnostics["spectral_proxy"] = {"value": val, "target": target, "A": A, "B": B}
        if val > target:
            flags.append(f"spectral proxy {val:.3g} exceeds A^(-4d) = {target:.3g}")
    if check_energy and d == 2:
        sigma = float(bundle.sigma_N)
        I = box_energy(mu, sigma)
        C = float(bundle.C)
        res.diagnostics["energy"] = {"sigma": sigma, "value": I, "C": C}
        if I > C:
            flags.append(f"energy {I:.4g} exceeds C = {C:.4g}")
    return res
