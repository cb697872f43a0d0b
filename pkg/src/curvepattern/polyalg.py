"""Exact univariate polynomials over Q.

Coefficients are stored lowest degree first as ``fractions.Fraction``; the zero
polynomial has an empty coefficient tuple.  Everything here is exact, so the
decisions built on top of it (common zeros, linear dependence, type) are sound.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction


class AllZero(ValueError):
    """Every input polynomial is identically zero."""


class ZeroPolynomial(ValueError):
    """An operation needs a nonzero polynomial."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class RatPoly:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def const(cls, c) -> "RatPoly":
        return cls([c])

    @classmethod
    def monomial(cls, k: int, c=1) -> "RatPoly":
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def coeff(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def low_order(self) -> int:
        """Index of the lowest nonzero coefficient (order of vanishing at 0)."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        raise ZeroPolynomial("zero polynomial has no finite order")

    # arithmetic
    def __add__(self, other) -> "RatPoly":
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return RatPoly(self.coeff(k) + other.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self) -> "RatPoly":
        return RatPoly(-c for c in self.coeffs)

    def __sub__(self, other) -> "RatPoly":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "RatPoly":
        return _as_poly(other) - self

    def __mul__(self, other) -> "RatPoly":
        if not isinstance(other, RatPoly):
            c = _frac(other)
            return RatPoly(c * a for a in self.coeffs)
        if self.is_zero() or other.is_zero():
            return RatPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return RatPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "RatPoly":
        if k < 0:
            raise ValueError("negative power")
        out, base = RatPoly([1]), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __divmod__(self, other: "RatPoly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        lc = other.lead()
        if len(rem) - 1 < dq:
            return RatPoly(), RatPoly(rem)
        quot = [Fraction(0)] * (len(rem) - dq)
        for k in range(len(rem) - 1, dq - 1, -1):
            c = rem[k]
            if c:
                q = c / lc
                quot[k - dq] = q
                for i, b in enumerate(other.coeffs):
                    rem[k - dq + i] -= q * b
        return RatPoly(quot), RatPoly(rem[:dq])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __eq__(self, other) -> bool:
        if isinstance(other, RatPoly):
            return self.coeffs == other.coeffs
        try:
            return self.coeffs == _as_poly(other).coeffs
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __call__(self, x):
        """Horner evaluation; exact for Fraction/int input."""
        acc = 0 * x if not isinstance(x, (int, Fraction)) else Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_float(self, x):
        acc = 0.0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    def derivative(self, k: int = 1) -> "RatPoly":
        return poly_derivative(self, k)

    def shift(self, a) -> "RatPoly":
        """p(t + a), exactly (Taylor shift)."""
        a = _frac(a)
        out = RatPoly()
        for c in reversed(self.coeffs):
            out = out * RatPoly([a, 1]) + c
        return out

    def scale(self, lam) -> "RatPoly":
        """p(lam * t)."""
        lam = _frac(lam)
        out, p = [], Fraction(1)
        for c in self.coeffs:
            out.append(c * p)
            p *= lam
        return RatPoly(out)

    def monic(self) -> "RatPoly":
        if self.is_zero():
            raise ZeroPolynomial("cannot normalize zero polynomial")
        return self * (1 / self.lead())

    def __repr__(self) -> str:
        return f"RatPoly({render(self)!r})"

    def __str__(self) -> str:
        return render(self)


def _as_poly(x) -> RatPoly:
    if isinstance(x, RatPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return RatPoly([x])
    raise TypeError(f"cannot coerce {type(x).__name__} to RatPoly")


def render(p: RatPoly) -> str:
    """Pretty-print in the curve-spec grammar; ``parse_poly(render(p)) == p``."""
    if p.is_zero():
        return "0"
    parts = []
    for k in range(p.degree, -1, -1):
        c = p.coeffs[k]
        if not c:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if k == 0:
            body = str(a)
        else:
            mono = "t" if k == 1 else f"t^{k}"
            if a == 1:
                body = mono
            elif a.denominator == 1:
                body = f"{a}{mono}"
            else:
                body = f"{a}*{mono}"
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def poly_derivative(p: RatPoly, k: int = 1) -> RatPoly:
    if k < 0:
        raise ValueError("derivative order must be >= 0")
    cs = list(p.coeffs)
    for _ in range(k):
        cs = [i * c for i, c in enumerate(cs)][1:]
    return RatPoly(cs)


def poly_gcd(ps: Sequence[RatPoly]) -> RatPoly:
    """Monic gcd of a nonempty family, via the Euclidean algorithm."""
    if not ps:
        raise ValueError("poly_gcd needs at least one polynomial")
    g = RatPoly()
    for p in ps:
        a, b = g, p
        while not b.is_zero():
            a, b = b, a % b
        g = a
    if g.is_zero():
        raise AllZero("all polynomials are zero")
    return g.monic()


def square_free(p: RatPoly) -> RatPoly:
    if p.is_zero():
        raise ZeroPolynomial("square-free part of zero")
    if p.degree <= 0:
        return RatPoly([1])
    return (p // poly_gcd([p, p.derivative()])).monic()


def sturm_sequence(p: RatPoly) -> list[RatPoly]:
    if p.is_zero():
        raise ZeroPolynomial("Sturm sequence of zero")
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        seq.append(-(seq[-2] % seq[-1]))
    seq.pop()
    return seq


def _sign_changes(seq: Sequence[RatPoly], x: Fraction) -> int:
    prev, changes = 0, 0
    for q in seq:
        v = q(x)
        if v:
            s = 1 if v > 0 else -1
            if prev and s != prev:
                changes += 1
            prev = s
    return changes


def _count_half_open(seq, a, b) -> int:
    """Distinct roots of seq[0] in (a, b]; seq[0] must be square-free."""
    return _sign_changes(seq, a) - _sign_changes(seq, b)


def sturm_root_count(p: RatPoly, a, b) -> int:
    """Number of distinct real roots of ``p`` in the closed interval [a, b]."""
    a, b = _frac(a), _frac(b)
    if a > b:
        raise ValueError("need a <= b")
    if p.is_zero():
        raise ZeroPolynomial("root count of zero polynomial")
    q = square_free(p)
    if q.degree == 0:
        return 0
    n = _count_half_open(sturm_sequence(q), a, b) if a < b else 0
    return n + (1 if q(a) == 0 else 0)


def _divisors(n: int, cap: int = 10**6) -> list[int] | None:
    n = abs(n)
    if n == 0:
        return None
    out, i = [], 1
    while i * i <= n:
        if i > cap:
            return None
        if n % i == 0:
            out.append(i)
            out.append(n // i)
        i += 1
    return sorted(set(out))


def _rational_roots_in(q: RatPoly, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """Rational roots of ``q`` in [lo, hi] via the rational root test."""
    if q.coeff(0) == 0:
        roots = [Fraction(0)] if lo <= 0 <= hi else []
        k = q.low_order()
        return roots + _rational_roots_in(RatPoly(q.coeffs[k:]), lo, hi)
    den = 1
    for c in q.coeffs:
        den = den * c.denominator // _igcd(den, c.denominator)
    ints = [int(c * den) for c in q.coeffs]
    ps, qs = _divisors(ints[0]), _divisors(ints[-1])
    if ps is None or qs is None:
        return []
    found = set()
    for pp in ps:
        for qq in qs:
            for cand in (Fraction(pp, qq), Fraction(-pp, qq)):
                if lo <= cand <= hi and cand not in found and q(cand) == 0:
                    found.add(cand)
    return sorted(found)


def _igcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


class IsolatedRoot:
    """A real root known exactly as the unique root of ``poly`` in [lo, hi].

    ``poly`` is square-free.  When the root is rational, ``lo == hi``.
    """

    __slots__ = ("poly", "lo", "hi")

    def __init__(self, poly: RatPoly, lo: Fraction, hi: Fraction):
        self.poly, self.lo, self.hi = poly, lo, hi

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def value(self) -> Fraction:
        if not self.is_exact:
            raise ValueError("root is irrational; only an isolating interval is known")
        return self.lo

    def approx(self) -> float:
        return float((self.lo + self.hi) / 2)

    def refine(self, width) -> "IsolatedRoot":
        lo, hi = self.lo, self.hi
        q = self.poly
        while hi - lo > width:
            mid = (lo + hi) / 2
            vm = q(mid)
            if vm == 0:
                return IsolatedRoot(q, mid, mid)
            if (q(lo) > 0) != (vm > 0):
                hi = mid
            else:
                lo = mid
        return IsolatedRoot(q, lo, hi)

    def vanishes(self, f: RatPoly) -> bool:
        """Exact test f(root) == 0."""
        if f.is_zero():
            return True
        if self.is_exact:
            return f(self.lo) == 0
        g = poly_gcd([f, self.poly])
        if g.degree == 0:
            return False
        return sturm_root_count(g, self.lo, self.hi) > 0

    def to_json(self):
        if self.is_exact:
            return str(self.lo)
        return {"interval": [str(self.lo), str(self.hi)], "poly": render(self.poly)}

    def __eq__(self, other):
        if isinstance(other, IsolatedRoot):
            return (self.poly, self.lo, self.hi) == (other.poly, other.lo, other.hi)
        if isinstance(other, (int, Fraction)):
            return self.is_exact and self.lo == other
        return NotImplemented

    def __hash__(self):
        return hash((self.poly, self.lo, self.hi))

    def __repr__(self):
        if self.is_exact:
            return f"IsolatedRoot({self.lo})"
        return f"IsolatedRoot({render(self.poly)!r} in [{self.lo}, {self.hi}])"


def isolate_roots(p: RatPoly, a, b) -> list[IsolatedRoot]:
    """Isolate the distinct real roots of ``p`` in [a, b].

    Rational roots are returned exactly; irrational ones as intervals
    with rational, non-root endpoints that contain exactly one root.
    """
    a, b = _frac(a), _frac(b)
    q = square_free(p)
    if q.degree == 0:
        return []
    seq = sturm_sequence(q)
    exact = _rational_roots_in(q, a, b)
    out = [IsolatedRoot(q, r, r) for r in exact]

    def count(lo, hi):
        n = _count_half_open(seq, lo, hi)
        if q(lo) == 0:
            n += 1
        return n

    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        total = count(lo, hi)
        n = total - sum(1 for r in exact if lo <= r <= hi)
        if n == 0:
            continue
        if total == 1 and q(lo) != 0 and q(hi) != 0:
            out.append(IsolatedRoot(q, lo, hi))
            continue
        mid = (lo + hi) / 2
        # push a point that is not a root so subintervals stay disjoint
        k = 1
        while q(mid) == 0:
            mid = lo + (hi - lo) * Fraction(2 ** k - 1, 2 ** (k + 1))
            k += 1
        stack.append((mid, hi))
        stack.append((lo, mid))
    return sorted(out, key=lambda r: (r.lo, r.hi))


def bareiss_echelon(rows: Sequence[Sequence[Fraction]]):
    """Fraction-free row echelon form.

    Rows are scaled to integers first.  Returns (matrix, pivot_columns).
    """
    mat = []
    for row in rows:
        den = 1
        for x in row:
            x = _frac(x)
            den = den * x.denominator // _igcd(den, x.denominator)
        mat.append([int(_frac(x) * den) for x in row])
    if not mat:
        return [], []
    m, n = len(mat), len(mat[0])
    pivots = []
    r, prev = 0, 1
    for col in range(n):
        if r >= m:
            break
        piv = next((i for i in range(r, m) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        for i in range(r + 1, m):
            for j in range(col + 1, n):
                mat[i][j] = (mat[i][j] * mat[r][col] - mat[i][col] * mat[r][j]) // prev
            mat[i][col] = 0
        prev = mat[r][col]
        pivots.append(col)
        r += 1
    return mat, pivots


def matrix_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(bareiss_echelon(rows)[1])


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int | None = None) -> list[list[Fraction]]:
    """Right nullspace basis {x : rows @ x = 0}, one vector per free column.

    Each vector has a 1 in its free column and is scaled to coprime integers.
    """
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    ech, pivots = bareiss_echelon(rows) if rows else ([], [])
    ech = [[Fraction(x) for x in row] for row in ech[: len(pivots)]]
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for r in range(len(pivots) - 1, -1, -1):
            pc = pivots[r]
            acc = sum((ech[r][c] * x[c] for c in range(pc + 1, ncols)), Fraction(0))
            x[pc] = -acc / ech[r][pc]
        basis.append(_primitive(x))
    return basis


def _primitive(v: list[Fraction]) -> list[Fraction]:
    den = 1
    for x in v:
        den = den * x.denominator // _igcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = _igcd(g, x)
    g = g or 1
    return [Fraction(x // g) for x in ints]


def coefficient_matrix(ps: Sequence[RatPoly]) -> list[list[Fraction]]:
    """Rows are polynomials, columns are degrees 0..max."""
    width = max((p.degree + 1 for p in ps), default=0)
    return [[p.coeff(k) for k in range(width)] for p in ps]


def linear_relations(ps: Sequence[RatPoly]) -> dict:
    """Rank of the family and a basis of {u : sum u_i p_i == 0}."""
    rows = coefficient_matrix(ps)
    width = len(rows[0]) if rows else 0
    rank = matrix_rank(rows) if width else 0
    # relations are the nullspace of the transpose
    cols = [[rows[i][k] for i in range(len(ps))] for k in range(width)]
    basis = nullspace(cols, ncols=len(ps)) if width else [
        [Fraction(int(i == j)) for i in range(len(ps))] for j in range(len(ps))
    ]
    return {"rank": rank, "nullspace_basis": basis}


def combine(u: Sequence, ps: Sequence[RatPoly]) -> RatPoly:
    out = RatPoly()
    for ui, p in zip(u, ps):
        out = out + p * _frac(ui)
    return out


def det(mat: Sequence[Sequence]) -> object:
    """Determinant of a small square matrix over any commutative ring (Laplace)."""
    n = len(mat)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = None
    for j in range(n):
        if _is_zero(mat[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total if total is not None else mat[0][0] * 0


def _is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, RatPoly) else x == 0
