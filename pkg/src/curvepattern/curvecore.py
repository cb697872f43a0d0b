"""Curves, vanishing patterns, type, and reduction to standard form."""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .polyalg import (
    IsolatedRoot,
    RatPoly,
    isolate_roots,
    matrix_rank,
    nullspace,
    poly_gcd,
    render,
    det,
)
from .polyparse import parse_poly

INFINITE = math.inf

Zero = Union[Fraction, IsolatedRoot]


class ZeroComponent(ValueError):
    pass


class NotFiniteType(ValueError):
    pass


class NotAZero(ValueError):
    pass


class CurveFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CurveSpec:
    """A polynomial curve Phi: [a, b] -> R^d.

    If ``jet_order`` is set the components are Taylor polynomials about
    t = 0 of some smooth curve, truncated after degree ``jet_order``; the
    neglected tail R satisfies |R^(l)(t)| <= remainder * |t|^(jet_order+1-l).
    """

    components: tuple[RatPoly, ...]
    interval: tuple[Fraction, Fraction]
    jet_order: int | None = None
    remainder: Fraction = Fraction(0)

    def __post_init__(self):
        comps = tuple(c if isinstance(c, RatPoly) else parse_poly(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        a, b = (Fraction(x) for x in self.interval)
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "remainder", Fraction(self.remainder))
        if len(comps) < 2:
            raise CurveFormatError("need d >= 2 components")
        if not a < b:
            raise CurveFormatError("interval must satisfy a < b")
        if self.jet_order is not None:
            if any(p.degree > self.jet_order for p in comps):
                raise CurveFormatError("jet component exceeds declared truncation order")

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def truncated(self) -> bool:
        return self.jet_order is not None

    def __call__(self, t):
        return tuple(p(t) for p in self.components)

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "I": [str(self.interval[0]), str(self.interval[1])],
            "components": [render(p) for p in self.components],
        }
        if self.truncated:
            out["jet_order"] = self.jet_order
            out["remainder"] = str(self.remainder)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "CurveSpec":
        comps = obj.get("components")
        if comps is None:
            comps = [obj[f"phi{i + 1}"] for i in range(int(obj["d"]))]
        spec = cls(
            tuple(parse_poly(str(c)) for c in comps),
            tuple(Fraction(str(x)) for x in obj["I"]),
            obj.get("jet_order"),
            Fraction(str(obj.get("remainder", 0))),
        )
        if "d" in obj and int(obj["d"]) != spec.d:
            raise CurveFormatError("d does not match number of components")
        return spec


def make_curve(components: Sequence, interval=(0, 1), **kw) -> CurveSpec:
    return CurveSpec(tuple(components), tuple(interval), **kw)


_FIELD = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.*?)\s*$", re.S)


def parse_curve_spec(text: str) -> CurveSpec:
    """Parse ``d=2; I=[0,1]; phi1=t; phi2=t^2`` (or the JSON mirror)."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return CurveSpec.from_json(json.loads(stripped))
    fields: dict[str, str] = {}
    for chunk in re.split(r"[;\n]", stripped):
        if not chunk.strip() or chunk.strip().startswith("#"):
            continue
        m = _FIELD.match(chunk)
        if not m:
            raise CurveFormatError(f"cannot read field {chunk.strip()!r}")
        fields[m.group(1)] = m.group(2)
    if "d" not in fields or "I" not in fields:
        raise CurveFormatError("curve spec needs d=... and I=[a,b]")
    d = int(fields["d"])
    im = re.fullmatch(r"\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]", fields["I"])
    if not im:
        raise CurveFormatError("I must look like [a,b]")
    try:
        comps = [parse_poly(fields[f"phi{i + 1}"]) for i in range(d)]
    except KeyError as e:
        raise CurveFormatError(f"missing component {e.args[0]}") from None
    extra = set(fields) - {"d", "I", "jet_order", "remainder"} - {f"phi{i + 1}" for i in range(d)}
    if extra:
        raise CurveFormatError(f"unknown fields {sorted(extra)}")
    jet = int(fields["jet_order"]) if "jet_order" in fields else None
    return CurveSpec(
        tuple(comps),
        (Fraction(im.group(1).strip()), Fraction(im.group(2).strip())),
        jet,
        Fraction(fields.get("remainder", "0")),
    )


def render_curve_spec(c: CurveSpec) -> str:
    parts = [f"d={c.d}", f"I=[{c.interval[0]},{c.interval[1]}]"]
    parts += [f"phi{i + 1}={render(p)}" for i, p in enumerate(c.components)]
    if c.truncated:
        parts += [f"jet_order={c.jet_order}", f"remainder={c.remainder}"]
    return "; ".join(parts)


# zeros ---------------------------------------------------------------------

def find_common_zeros(c: CurveSpec) -> list[Zero]:
    """All t in I with Phi(t) = 0, exact or as isolating intervals."""
    g = poly_gcd(c.components)
    a, b = c.interval
    if c.truncated:
        # only the expansion point is meaningful for a jet
        return [Fraction(0)] if g(Fraction(0)) == 0 and a <= 0 <= b else []
    if g.degree == 0:
        return []
    return [r.value if r.is_exact else r for r in isolate_roots(g, a, b)]


def _check_zero(c: CurveSpec, t0: Zero) -> Zero:
    if isinstance(t0, IsolatedRoot):
        if t0.is_exact:
            t0 = t0.value
        elif not all(t0.vanishes(p) for p in c.components):
            raise NotAZero("curve does not vanish at the given root")
        else:
            return t0
    t0 = Fraction(t0)
    if any(p(t0) != 0 for p in c.components):
        raise NotAZero(f"Phi({t0}) != 0")
    return t0


@dataclass(frozen=True)
class VanishingPattern:
    orders: tuple[int, ...]
    base_point: Zero


def vanishing_pattern(c: CurveSpec, t0: Zero) -> VanishingPattern:
    t0 = _check_zero(c, t0)
    orders = []
    for i, p in enumerate(c.components):
        if p.is_zero():
            raise ZeroComponent(f"component {i + 1} is identically zero")
        if isinstance(t0, IsolatedRoot):
            k = 0
            while t0.vanishes(p.derivative(k)):
                k += 1
            orders.append(k)
        else:
            orders.append(p.shift(t0).low_order())
    return VanishingPattern(tuple(orders), t0)


def _max_order(c: CurveSpec) -> int:
    deg = max(p.degree for p in c.components)
    return min(deg, c.jet_order) if c.truncated else deg


def type_at(c: CurveSpec, t0: Zero) -> int | float:
    """Smallest N with Phi'(t0), ..., Phi^(N)(t0) spanning R^d, else INFINITE."""
    t0 = _check_zero(c, t0)
    d = c.d
    top = _max_order(c)
    if isinstance(t0, IsolatedRoot):
        derivs = [[p.derivative(n) for p in c.components] for n in range(1, top + 1)]
        for N in range(d, top + 1):
            for rows in itertools.combinations(range(N), d):
                if rows[-1] != N - 1:
                    continue
                minor = det([derivs[r] for r in rows])
                if not t0.vanishes(minor):
                    return N
        return INFINITE
    shifted = [p.shift(t0) for p in c.components]
    rows = []
    for n in range(1, top + 1):
        rows.append([q.coeff(n) for q in shifted])
        if n >= d and matrix_rank(rows) == d:
            return n
    return INFINITE


# standard form -------------------------------------------------------------

def _identity(d: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]


@dataclass
class CurveStd:
    """Curve in standard form on [0, 1].

    ``components[i]`` equals ``sum_j transform_L[i][j] * Phi_j(base_point + domain_scale * t)``.
    """

    components: tuple[RatPoly, ...]
    pattern: tuple[int, ...]
    type_N: int
    transform_L: list[list[Fraction]]
    safe_scale_J0: int
    base_point: Fraction = Fraction(0)
    domain_scale: Fraction = Fraction(1)
    truncated: bool = False
    remainder: Fraction = Fraction(0)
    jet_order: int | None = None

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def K_N(self) -> int:
        return 2 * math.factorial(self.type_N)

    def to_json(self) -> dict:
        return {
            "components": [render(p) for p in self.components],
            "pattern": list(self.pattern),
            "type_N": self.type_N,
            "transform_L": [[str(x) for x in row] for row in self.transform_L],
            "safe_scale_J0": self.safe_scale_J0,
            "base_point": str(self.base_point),
            "domain_scale": str(self.domain_scale),
            "truncated": self.truncated,
            "remainder": str(self.remainder),
            "jet_order": self.jet_order,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CurveStd":
        return cls(
            tuple(parse_poly(s) for s in obj["components"]),
            tuple(obj["pattern"]),
            int(obj["type_N"]),
            [[Fraction(x) for x in row] for row in obj["transform_L"]],
            int(obj["safe_scale_J0"]),
            Fraction(obj.get("base_point", "0")),
            Fraction(obj.get("domain_scale", "1")),
            bool(obj.get("truncated", False)),
            Fraction(obj.get("remainder", "0")),
            obj.get("jet_order"),
        )


def _row_combo(row, polys) -> RatPoly:
    out = RatPoly()
    for x, p in zip(row, polys):
        if x:
            out = out + p * x
    return out


def standardize(c: CurveSpec, t0: Zero | None = None, N: int | None = None) -> CurveStd:
    """Reduce a finite-type curve at a rational zero to standard form."""
    if t0 is None:
        zeros = find_common_zeros(c)
        if not zeros:
            raise NotAZero("curve has no zero in its interval")
        t0 = zeros[0]
    t0 = _check_zero(c, t0)
    if isinstance(t0, IsolatedRoot):
        raise NotImplementedError("standard form needs a rational base point")
    if N is None:
        N = type_at(c, t0)
    if N == INFINITE:
        raise NotFiniteType("curve has infinite type at this point")
    N = int(N)
    d = c.d
    a, b = c.interval
    lo, hi = a - t0, b - t0
    lam = lo if lo < 0 else hi
    base = [p.shift(t0).scale(lam) for p in c.components]
    comps = list(base)
    L = _identity(d)

    # first map: force order N into the pattern
    rows = [[q.coeff(n) for q in comps] for n in range(1, N)]
    cands = nullspace(rows, ncols=d) if rows else [list(r) for r in _identity(d)]
    good = [u for u in cands if sum(ui * q.coeff(N) for ui, q in zip(u, comps)) != 0]
    if not good:
        raise NotFiniteType("no direction of order exactly N; type mismatch")
    u = max(good, key=lambda v: max(i for i, x in enumerate(v) if x))
    k = max(i for i, x in enumerate(u) if x)
    comps[k] = _row_combo(u, comps)
    L[k] = [sum(u[m] * L[m][j] for m in range(d)) for j in range(d)]

    # coincidence elimination
    for _ in range(d * N + 1):
        orders = []
        for i, q in enumerate(comps):
            if q.is_zero():
                raise NotFiniteType("a component collapsed to zero (dependent components)")
            orders.append(q.low_order())
        if max(orders) > N:
            raise NotFiniteType("vanishing order exceeds N during elimination")
        pair = next(((i0, i1) for i0 in range(d) for i1 in range(i0 + 1, d)
                     if orders[i0] == orders[i1]), None)
        if pair is None:
            break
        i0, i1 = pair
        m = orders[i0]
        ratio = comps[i1].coeff(m) / comps[i0].coeff(m)
        comps[i1] = comps[i1] - comps[i0] * ratio
        L[i1] = [L[i1][j] - ratio * L[i0][j] for j in range(d)]
    else:
        raise NotFiniteType("elimination did not terminate within the degree bound")

    order = sorted(range(d), key=lambda i: orders[i])
    comps = [comps[i] for i in order]
    L = [L[i] for i in order]
    pattern = tuple(orders[i] for i in order)
    for i in range(d):
        lead = comps[i].coeff(pattern[i])
        comps[i] = comps[i] * (1 / lead)
        L[i] = [x / lead for x in L[i]]
    if pattern[-1] != N:
        raise NotFiniteType(f"pattern {pattern} does not end at N={N}")

    rem = Fraction(0)
    if c.truncated:
        rowsum = max(sum(abs(x) for x in row) for row in L)
        rem = rowsum * c.remainder * max(Fraction(1), abs(lam)) ** (c.jet_order + 1)
    std = CurveStd(tuple(comps), pattern, N, L, 0, t0, lam, c.truncated, rem, c.jet_order)
    std.safe_scale_J0 = safe_scale(std)
    return std


def _scaled_parts(std: CurveStd, i: int, ell: int) -> RatPoly:
    """Phi_i^(ell)(t) / t^(n_i - ell) as a polynomial."""
    q = std.components[i].derivative(ell)
    shift = std.pattern[i] - ell
    return RatPoly(q.coeffs[shift:])


def certify_bounds(std: CurveStd, J: int) -> bool:
    """Exact coefficient-bound check of the c1/c2 estimates on [0, 2^-J]."""
    x = Fraction(1, 2 ** J)
    K = std.K_N
    for i, n in enumerate(std.pattern):
        tail = Fraction(0)
        if std.truncated:
            tail = std.remainder * x ** (std.jet_order + 1 - n)
        for ell in range(n + 1):
            h = _scaled_parts(std, i, ell)
            upper = sum((abs(cf) * x ** k for k, cf in enumerate(h.coeffs)), Fraction(0)) + tail
            if upper > K:
                return False
            if ell == n:
                lower = abs(h.coeff(0)) - (upper - abs(h.coeff(0)))
                if lower < Fraction(1, 2):
                    return False
    return True


def safe_scale(std: CurveStd) -> int:
    """Smallest J for which the coefficient bounds certify c1/c2 on [0, 2^-J]."""
    if certify_bounds(std, 0):
        return 0
    hi = 1
    while not certify_bounds(std, hi):
        hi *= 2
        if hi > 1 << 16:
            raise NotFiniteType("no safe scale found")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if certify_bounds(std, mid):
            hi = mid
        else:
            lo = mid
    return hi


def rescale(std: CurveStd, j: int) -> tuple[RatPoly, ...]:
    """Phi^j_i(t) = 2^(n_i j) Phi_i(2^-j t), exactly."""
    if j < 0:
        raise ValueError("j must be >= 0")
    out = []
    for p, n in zip(std.components, std.pattern):
        out.append(RatPoly(cf * Fraction(2) ** ((n - k) * j) for k, cf in enumerate(p.coeffs)))
    return tuple(out)


def check_standard_form(std: CurveStd, original: CurveSpec | None = None) -> list[str]:
    """Return a list of violated invariants (empty when the form is valid)."""
    problems = []
    pat = std.pattern
    if not all(1 <= a < b for a, b in zip(pat, pat[1:])) or pat[0] < 1:
        problems.append("ordering")
    if pat[-1] != std.type_N:
        problems.append("n_d != N")
    for p, n in zip(std.components, pat):
        if p.low_order() != n or p.coeff(n) != 1:
            problems.append("coefficients")
            break
    if matrix_rank(std.transform_L) != std.d:
        problems.append("L singular")
    if not certify_bounds(std, std.safe_scale_J0):
        problems.append("c1/c2")
    if original is not None:
        base = [p.shift(std.base_point).scale(std.domain_scale) for p in original.components]
        for row, q in zip(std.transform_L, std.components):
            if _row_combo(row, base) != q:
                problems.append("transform")
                break
    return problems


def cn_norm_bound(components: Sequence[RatPoly], N: int) -> Fraction:
    """Upper bound for sum_{l<=N} sup_[0,1] |Phi^(l)| via absolute coefficient sums."""
    total = Fraction(0)
    for ell in range(N + 1):
        sq = sum((sum((abs(x) for x in p.derivative(ell).coeffs), Fraction(0)) ** 2
                  for p in components), Fraction(0))
        total += _sqrt_upper(sq)
    return total


def _sqrt_upper(x: Fraction) -> Fraction:
    r = Fraction(math.isqrt(x.numerator // x.denominator + 1) + 1)
    # refine with a few Newton steps from above
    for _ in range(6):
        if r == 0:
            break
        r = (r + x / r) / 2
    return r
