"""Admissible constant chain K_N, sigma_N, gamma_N, E, C, L_N, A, B, T, epsilon.

Two profiles:

``rigorous``
    Every defining inequality is honoured and re-checked in interval
    arithmetic; margins go into ``audit``.  B and epsilon are astronomically
    large/small, so only their base-2 logarithms are stored.

``demo``
    Small user-chosen (A, B, T) for desk-scale runs.  The same inequalities
    are evaluated, and the ones that fail are reported in ``flags``.  The
    audit then only contains checks that hold by construction in demo mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import mpmath

from .bump import PlateauBump

DEFAULT_DPS = 40


class OutOfRange(ValueError):
    pass


class NonpositiveT(ValueError):
    pass


class ProfileInfeasible(RuntimeError):
    pass


def vdc_constant(n: int, table: Optional[Mapping[int, float]] = None) -> float:
    """Van der Corput constant c_n (default 5*2^(n-1) - 2)."""
    if table and n in table:
        return float(table[n])
    return 5 * 2 ** (n - 1) - 2


def riesz_constant(d: int, sigma, dps: int = DEFAULT_DPS):
    """gamma(d, sigma) = pi^(sigma - d/2) Gamma((d - sigma)/2) / Gamma(sigma/2)."""
    with mpmath.workdps(dps):
        s = mpmath.mpf(Fraction(sigma).numerator) / Fraction(sigma).denominator
        if not 0 < s < d:
            raise OutOfRange(f"need 0 < sigma < d, got sigma={sigma}, d={d}")
        return +(mpmath.pi ** (s - mpmath.mpf(d) / 2)
                 * mpmath.gamma((d - s) / 2) / mpmath.gamma(s / 2))


def energy_constant(d: int, t, dps: int = DEFAULT_DPS):
    """E(t) = 6^d / (1 - 2^-t)."""
    t = Fraction(t)
    if t <= 0:
        raise NonpositiveT(f"t must be positive, got {t}")
    with mpmath.workdps(dps):
        tt = mpmath.mpf(t.numerator) / t.denominator
        return +(mpmath.mpf(6) ** d / -mpmath.expm1(-tt * mpmath.ln2))


def unit_ball_volume(d: int, ctx=mpmath.mp):
    return ctx.pi ** (ctx.mpf(d) / 2) / ctx.gamma(ctx.mpf(d) / 2 + 1)


@dataclass
class AuditEntry:
    constraint: str
    lhs: str
    rhs: str
    margin: float
    satisfied: bool
    scale: str = "linear"

    def to_json(self):
        margin = self.margin if math.isfinite(self.margin) else str(self.margin)
        return {"constraint": self.constraint, "lhs": self.lhs, "rhs": self.rhs,
                "margin": margin, "satisfied": self.satisfied, "scale": self.scale}


@dataclass
class ConstantBundle:
    d: int
    N: int
    K_N: int
    sigma_N: Fraction
    gamma_N: mpmath.mpf
    E_value: mpmath.mpf
    C: mpmath.mpf
    L_N: mpmath.mpf
    log2_A: int
    log2_B: mpmath.mpf
    T: int
    log2_epsilon: mpmath.mpf
    profile: str
    audit: list[AuditEntry] = field(default_factory=list)
    flags: list[AuditEntry] = field(default_factory=list)
    derivation: dict = field(default_factory=dict)

    @property
    def A(self) -> int:
        return 2 ** self.log2_A

    @property
    def B(self):
        return mpmath.mpf(2) ** self.log2_B

    @property
    def epsilon(self):
        return mpmath.mpf(2) ** self.log2_epsilon

    @property
    def ok(self) -> bool:
        return all(e.satisfied for e in self.audit)

    def to_json(self) -> dict:
        s = lambda x: mpmath.nstr(x, 30)
        return {
            "d": self.d, "N": self.N, "profile": self.profile,
            "K_N": self.K_N, "sigma_N": str(self.sigma_N),
            "gamma_N": s(self.gamma_N), "E_value": s(self.E_value), "C": s(self.C),
            "L_N": s(self.L_N), "A": self.A, "log2_A": self.log2_A,
            "log2_B": s(self.log2_B), "T": self.T, "log2_2^-T": -self.T,
            "log2_epsilon": s(self.log2_epsilon),
            "audit": [e.to_json() for e in self.audit],
            "flags": [e.to_json() for e in self.flags],
            "derivation": {k: (s(v) if isinstance(v, mpmath.mpf) else v)
                           for k, v in self.derivation.items()},
        }


def _ivq(x: Fraction):
    return mpmath.iv.mpf(x.numerator) / x.denominator


def _entry(name, lhs_iv, rhs_iv, scale="linear") -> AuditEntry:
    """Record lhs <= rhs; the margin is the certified lower end of rhs - lhs."""
    diff = rhs_iv - lhs_iv
    lo = diff.a
    mid = lambda x: mpmath.nstr(mpmath.mpf(x.mid.a), 20)
    return AuditEntry(name, mid(lhs_iv), mid(rhs_iv),
                      float(lo), bool(lo >= 0), scale)


def _L_chain(d: int, N: int, vdc: Optional[Mapping[int, float]]):
    """Interval enclosure of L_N together with its ingredients."""
    iv = mpmath.iv
    K = 2 * math.factorial(N)
    ball = unit_ball_volume(d, iv)
    b = iv.sqrt(iv.log(iv.mpf(2)) / iv.pi)  # psi(x) >= 1/2 on |x| <= b
    a0 = ball / (2 * iv.mpf(15) ** d)
    c = a0 * b ** d / iv.mpf(2) ** (d + 1)
    M1 = iv.mpf(4 * d * K) / (b * c)  # dominates 4dK/b since c < 1
    a = iv.mpf(1) / (8 * d * K)
    cmax = max(vdc_constant(n, vdc) for n in range(2, N + 1))
    M2_case1 = 2 * d * a ** (-d) * iv.mpf(cmax)
    # first-order directions: one integration by parts with |phi'| >= 1/4
    ibp = (8 + iv.mpf(32 * d * K)) / (2 * iv.pi)
    M2_case2 = 1 + d * ibp
    sigma = Fraction(2 * d * N - 1, 2 * N)
    s = _ivq(sigma)
    gam = iv.pi ** (s - iv.mpf(d) / 2) * iv.gamma((d - s) / 2) / iv.gamma(s / 2)
    M3 = 2 * iv.pi * ball + 2 + 2 / gam
    parts = {"M1": M1, "M2_case1": M2_case1, "M2_case2": M2_case2, "M3": M3}
    L = max(parts.values(), key=lambda x: x.b)
    # take an upper endpoint as the working value so every L-inequality is safe
    L = iv.mpf(L.b)
    return L, parts, {"a0": a0, "b": b, "c": c, "a": a, "c_max": cmax}


def _find_A(bump: PlateauBump, L, d: int, max_log2: int = 4096) -> int:
    iv = mpmath.iv
    for k in range(1, max_log2):
        A = iv.mpf(2) ** k
        if (A ** d - 4 * L ** 2).a < 0:
            continue
        if (iv.mpf(0.5) * A ** (-4 * d) - bump.tail_bound(A)).a >= 0:
            return k
    raise ProfileInfeasible("no admissible A below 2^%d" % max_log2)


def _log2_epsilon(d: int, N: int, T: int):
    # log2(eps) for eps = min(log2(1 + 2^(-dNT-2))/(NT), 1/(4N^2))
    x = mpmath.mpf(2) ** (-(d * N * T) - 2)
    first = mpmath.log(mpmath.log1p(x) / mpmath.ln2 / (N * T), 2)
    second = mpmath.log(mpmath.mpf(1) / (4 * N * N), 2)
    return min(first, second)


def compute_bundle(d: int, N: int, profile: str = "rigorous", *,
                   demo_A: int = 2, demo_B: int = 8, demo_T: int = 2,
                   vdc_table: Optional[Mapping[int, float]] = None,
                   dps: int = DEFAULT_DPS) -> ConstantBundle:
    if not (N >= d >= 2):
        raise OutOfRange(f"need N >= d >= 2, got d={d}, N={N}")
    if profile not in ("rigorous", "demo"):
        raise OutOfRange(f"unknown profile {profile!r}")
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = max(int(dps * 3.33) + 16, 120)
    try:
        with mpmath.workdps(dps):
            return _bundle(d, N, profile, demo_A, demo_B, demo_T, vdc_table, dps)
    finally:
        iv.prec = saved


def _bundle(d, N, profile, demo_A, demo_B, demo_T, vdc_table, dps):
    iv = mpmath.iv
    K = 2 * math.factorial(N)
    sigma = Fraction(2 * d * N - 1, 2 * N)
    gamma = riesz_constant(d, sigma, dps)
    E = energy_constant(d, Fraction(1, 4 * N), dps)
    C = 4 * E
    L_iv, parts, inner = _L_chain(d, N, vdc_table)
    bump = PlateauBump.for_dimension(d)

    t = iv.mpf(1) / (4 * N)
    C_iv = 4 * iv.mpf(6) ** d / (1 - iv.mpf(2) ** (-t))
    ball = unit_ball_volume(d, iv)

    if profile == "rigorous":
        log2_A = _find_A(bump, L_iv, d)
        rhs = 2 * N * (iv.log(L_iv, 2) + 4 * d * log2_A + iv.log(C_iv, 2))
        log2_B = int(math.ceil(float(rhs.b)))
        # T: smallest integer with 4 pi sqrt(d) |B(0,1)| B^(d+1) 2^-T <= 1/2 A^(-4d)
        need = iv.log(4 * iv.pi * iv.sqrt(iv.mpf(d)) * ball, 2) + (d + 1) * log2_B + 1 + 4 * d * log2_A
        T = int(math.ceil(float(need.b)))
    else:
        log2_A = int(round(math.log2(demo_A)))
        if 2 ** log2_A != demo_A:
            raise OutOfRange("demo A must be a power of two")
        log2_B = int(round(math.log2(demo_B)))
        if 2 ** log2_B != demo_B:
            raise OutOfRange("demo B must be a power of two")
        T = int(demo_T)
        if T < 1:
            raise OutOfRange("demo T must be positive")
    log2_eps = _log2_epsilon(d, N, T)

    A = iv.mpf(2) ** log2_A
    checks = [
        _entry("A^d >= 4 L_N^2 [log2]", iv.log(4 * L_iv ** 2, 2), iv.mpf(d * log2_A), "log2"),
        _entry("bump tail <= A^(-4d)/2", bump.tail_bound(A), iv.mpf(0.5) * A ** (-4 * d)),
        _entry("B >= (L_N A^(4d) C)^(2N) [log2]",
               2 * N * (iv.log(L_iv, 2) + 4 * d * log2_A + iv.log(C_iv, 2)),
               iv.mpf(log2_B), "log2"),
        _entry("choice of T [log2]",
               iv.log(4 * iv.pi * iv.sqrt(iv.mpf(d)) * ball, 2) + (d + 1) * log2_B - T,
               -1 - 4 * d * iv.mpf(log2_A), "log2"),
    ]
    always = [
        _entry("C >= 1", iv.mpf(1), C_iv),
        _entry("||phi||_inf <= 2", _ivq(bump.sup_norm), iv.mpf(2)),
        _entry("epsilon <= 1/(4N^2) [log2]", iv.mpf(log2_eps),
               iv.log(iv.mpf(1) / (4 * N * N), 2), "log2"),
        _entry("epsilon <= (d-1)/N [log2]", iv.mpf(log2_eps),
               iv.log(iv.mpf(d - 1) / N, 2), "log2"),
    ]
    if profile == "rigorous":
        audit, flags = checks + always, []
    else:
        audit = always
        flags = [e for e in checks if not e.satisfied]

    deriv = {k: mpmath.mpf(v.b) for k, v in parts.items()}
    deriv.update({k: (mpmath.mpf(v.mid.a) if isinstance(v, type(iv.mpf(1))) else v)
                  for k, v in inner.items()})
    deriv["bump"] = {"w": str(bump.w), "b": str(bump.b), "order": bump.m}
    deriv["riesz_formula"] = "pi^(s-d/2) Gamma((d-s)/2)/Gamma(s/2) (Mattila)"
    return ConstantBundle(
        d=d, N=N, K_N=K, sigma_N=sigma, gamma_N=gamma, E_value=E, C=C,
        L_N=mpmath.mpf(L_iv.b), log2_A=log2_A, log2_B=mpmath.mpf(log2_B), T=T,
        log2_epsilon=log2_eps, profile=profile, audit=audit, flags=flags,
        derivation=deriv,
    )


def verify_C(bundle: ConstantBundle, dps: int = 30) -> bool:
    """Recompute C = 4 E(1/(4N)) independently at dps digits and compare."""
    with mpmath.workdps(dps + 10):
        t = mpmath.mpf(1) / (4 * bundle.N)
        ref = 4 * mpmath.mpf(6) ** bundle.d / (1 - mpmath.power(2, -t))
        return abs(ref - bundle.C) <= abs(ref) * mpmath.mpf(10) ** (-dps)
