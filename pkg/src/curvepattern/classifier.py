"""Unavoidability verdicts for polynomial curves, with checkable certificates."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .curvecore import (
    INFINITE,
    CurveSpec,
    CurveStd,
    find_common_zeros,
    standardize,
    type_at,
)
from .polyalg import (
    IsolatedRoot,
    RatPoly,
    combine,
    linear_relations,
    poly_gcd,
    render,
    sturm_root_count,
)


class InvalidSubtype(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdBounds:
    s_bar: Fraction
    eps_upper: Fraction
    subtype_m: int
    type_N: int

    def to_json(self) -> dict:
        return {"s_bar": str(self.s_bar), "eps_upper": str(self.eps_upper),
                "subtype_m": self.subtype_m, "type_N": self.type_N}


def threshold_bounds(d: int, N: int, m: int) -> ThresholdBounds:
    """Partial-avoidance dimension s_bar and the upper bound (d-1)/N on epsilon."""
    if m < 1 or N < m + d - 1:
        raise InvalidSubtype(f"need m >= 1 and N >= m + d - 1 (got d={d}, N={N}, m={m})")
    s_bar = min(Fraction(N, m), d - Fraction((d - 1) * m, N))
    return ThresholdBounds(s_bar, Fraction(d - 1, N), m, N)


@dataclass(frozen=True)
class CommonZero:
    t: Union[Fraction, IsolatedRoot]
    N: int
    std: Optional[CurveStd]
    kind: str = "common_zero"

    def to_json(self):
        t = self.t if isinstance(self.t, IsolatedRoot) else str(self.t)
        return {"kind": self.kind, "t": t.to_json() if isinstance(t, IsolatedRoot) else t,
                "N": self.N, "standard_form": self.std.to_json() if self.std else None}


@dataclass(frozen=True)
class Dependence:
    u: tuple[Fraction, ...]
    kind: str = "dependence"

    def to_json(self):
        return {"kind": self.kind, "u": [str(x) for x in self.u]}


@dataclass(frozen=True)
class NoCommonZero:
    gcd: RatPoly
    kind: str = "no_common_zero"

    def to_json(self):
        return {"kind": self.kind, "gcd": render(self.gcd)}


Certificate = Union[CommonZero, Dependence, NoCommonZero]


@dataclass(frozen=True)
class Verdict:
    status: str  # "unavoidable" | "avoidable"
    certificate: Certificate
    bounds: Optional[ThresholdBounds] = None

    @property
    def unavoidable(self) -> bool:
        return self.status == "unavoidable"

    def to_json(self) -> dict:
        cert = self.certificate
        zero = None
        type_N = None
        if isinstance(cert, CommonZero):
            zero = cert.t.to_json() if isinstance(cert.t, IsolatedRoot) else str(cert.t)
            type_N = cert.N
        return {
            "status": self.status,
            "certificate": cert.to_json(),
            "type_N": type_N,
            "zero": zero,
            "s_bar": str(self.bounds.s_bar) if self.bounds else None,
            "eps_upper": str(self.bounds.eps_upper) if self.bounds else None,
        }


def graph_subtype(c: CurveSpec, t0) -> Optional[int]:
    """Order m of the first component at t0 when it is t^m times a zero-free factor on I."""
    if isinstance(t0, IsolatedRoot):
        return None
    p = c.components[0]
    if p.is_zero():
        return None
    lin = RatPoly([-t0, 1])
    m = 0
    while not p.is_zero() and p(t0) == 0:
        p = p // lin
        m += 1
    a, b = c.interval
    if m == 0 or sturm_root_count(p, a, b) != 0:
        return None
    return m


def classify(c: CurveSpec) -> Verdict:
    rel = linear_relations(c.components)
    if rel["rank"] < c.d:
        return Verdict("avoidable", Dependence(tuple(rel["nullspace_basis"][0])))
    zeros = find_common_zeros(c)
    if not zeros:
        return Verdict("avoidable", NoCommonZero(poly_gcd(c.components)))
    typed = [(type_at(c, z), i, z) for i, z in enumerate(zeros)]
    N, _, best = min(typed, key=lambda x: (x[0], x[1]))
    if N == INFINITE:
        # independent polynomials always have finite type at a zero
        raise AssertionError("independent components with infinite type")
    std = None if isinstance(best, IsolatedRoot) else standardize(c, best, int(N))
    bounds = None
    m = graph_subtype(c, best)
    if m is not None:
        try:
            bounds = threshold_bounds(c.d, int(N), m)
        except InvalidSubtype:
            bounds = None
    return Verdict("unavoidable", CommonZero(best, int(N), std), bounds)


def verify_certificate(c: CurveSpec, v: Verdict) -> bool:
    cert = v.certificate
    if isinstance(cert, Dependence):
        return any(cert.u) and combine(cert.u, c.components).is_zero()
    if isinstance(cert, NoCommonZero):
        a, b = c.interval
        g = poly_gcd(c.components)
        return g == cert.gcd and (g.degree == 0 or sturm_root_count(g, a, b) == 0)
    t = cert.t
    a, b = c.interval
    if isinstance(t, IsolatedRoot):
        return a <= t.lo and t.hi <= b and all(t.vanishes(p) for p in c.components)
    return a <= t <= b and all(p(t) == 0 for p in c.components)


@dataclass(frozen=True)
class Contained:
    u: tuple[Fraction, ...]
    offset: Fraction = Fraction(0)


class NotContained:
    def __repr__(self):
        return "NotContained()"

    def __eq__(self, other):
        return isinstance(other, NotContained)


def hyperplane_test(c: CurveSpec, affine: bool = False):
    """Find u != 0 (and offset) with u . Phi(t) == offset for all t."""
    polys = list(c.components)
    if affine:
        polys.append(RatPoly([1]))
    basis = [u for u in linear_relations(polys)["nullspace_basis"] if any(u[: c.d])]
    if not basis:
        return NotContained()
    u = basis[0]
    if affine:
        return Contained(tuple(u[: c.d]), -u[c.d])
    return Contained(tuple(u))
