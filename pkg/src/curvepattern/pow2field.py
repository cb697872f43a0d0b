"""Exact arithmetic in Q(2^(1/q)).

Box masses of the form l(Q)^s = 2^(-j s) with rational s are irrational in
general; they all live in the field generated by alpha = 2^(1/q), q the
denominator of s.  Elements are stored as coefficient vectors in the basis
1, alpha, ..., alpha^(q-1).  Since x^q - 2 is irreducible (Eisenstein), an
element is zero iff all its coefficients are, and the sign of a nonzero
element is settled by evaluating with a rigorous error bound.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import mpmath


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@lru_cache(maxsize=None)
def _alpha_pows(q: int) -> tuple[float, ...]:
    return tuple(2.0 ** (r / q) for r in range(q))


class P2:
    """Element sum_r c_r 2^(r/q) of Q(2^(1/q))."""

    __slots__ = ("q", "c")

    def __init__(self, coeffs: Iterable, q: int = 1):
        cs = [Fraction(x) for x in coeffs]
        if len(cs) < q:
            cs += [Fraction(0)] * (q - len(cs))
        if len(cs) != q:
            raise ValueError("coefficient count must equal q")
        self.q = q
        self.c = tuple(cs)

    @classmethod
    def rational(cls, x, q: int = 1) -> "P2":
        return cls([Fraction(x)] + [Fraction(0)] * (q - 1), q)

    @classmethod
    def pow2(cls, e) -> "P2":
        """2^e for rational e, exactly."""
        e = Fraction(e)
        q = e.denominator
        k = e.numerator  # alpha^k with alpha = 2^(1/q)
        whole, r = divmod(k, q)
        cs = [Fraction(0)] * q
        cs[r] = Fraction(2) ** whole
        return cls(cs, q)

    def lift(self, q: int) -> "P2":
        if q == self.q:
            return self
        if q % self.q:
            raise ValueError("can only lift to a multiple of q")
        step = q // self.q
        cs = [Fraction(0)] * q
        for r, x in enumerate(self.c):
            cs[r * step] = x
        return P2(cs, q)

    def _common(self, other):
        if not isinstance(other, P2):
            other = P2.rational(other, self.q)
        q = _lcm(self.q, other.q)
        return self.lift(q), other.lift(q)

    def __add__(self, other):
        a, b = self._common(other)
        return P2([x + y for x, y in zip(a.c, b.c)], a.q)

    __radd__ = __add__

    def __neg__(self):
        return P2([-x for x in self.c], self.q)

    def __sub__(self, other):
        return self + (-other if isinstance(other, P2) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, P2):
            f = Fraction(other)
            return P2([x * f for x in self.c], self.q)
        a, b = self._common(other)
        q = a.q
        out = [Fraction(0)] * q
        for i, x in enumerate(a.c):
            if not x:
                continue
            for j, y in enumerate(b.c):
                if y:
                    k = i + j
                    if k >= q:
                        out[k - q] += 2 * x * y
                    else:
                        out[k] += x * y
        return P2(out, q)

    __rmul__ = __mul__

    def inverse(self) -> "P2":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        q = self.q
        if q == 1:
            return P2([1 / self.c[0]], 1)
        # columns: self * alpha^j; solve M y = e_0
        cols = []
        for j in range(q):
            cols.append((self * P2.pow2(Fraction(j, q)).lift(q)).c)
        aug = [[cols[j][i] for j in range(q)] + [Fraction(int(i == 0))] for i in range(q)]
        for col in range(q):
            piv = next(r for r in range(col, q) if aug[r][col] != 0)
            aug[col], aug[piv] = aug[piv], aug[col]
            pv = aug[col][col]
            aug[col] = [x / pv for x in aug[col]]
            for r in range(q):
                if r != col and aug[r][col]:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return P2([aug[i][q] for i in range(q)], q)

    def __truediv__(self, other):
        if not isinstance(other, P2):
            return self * (1 / Fraction(other))
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def is_zero(self) -> bool:
        return not any(self.c)

    def sign(self) -> int:
        if self.is_zero():
            return 0
        pows = _alpha_pows(self.q)
        try:
            terms = [float(x) * p for x, p in zip(self.c, pows)]
            total = math.fsum(terms)
            scale = math.fsum(abs(t) for t in terms)
        except OverflowError:
            total = scale = math.inf
        if scale > 1e-280 and abs(total) > 1e-12 * scale and math.isfinite(scale):
            return 1 if total > 0 else -1
        iv = mpmath.iv
        prec, saved = 80, iv.prec
        try:
            while True:
                iv.prec = prec
                alpha = iv.mpf(2) ** (iv.mpf(1) / self.q)
                acc = iv.mpf(0)
                for r, x in enumerate(self.c):
                    if x:
                        acc += iv.mpf(x.numerator) / x.denominator * alpha ** r
                if acc.a > 0:
                    return 1
                if acc.b < 0:
                    return -1
                prec *= 2
        finally:
            iv.prec = saved

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if isinstance(other, (P2, int, Fraction)):
            return (self - other).is_zero()
        return NotImplemented

    def __hash__(self):
        # normalize to the smallest q that represents the value
        q = self.q
        for d in range(1, q + 1):
            if q % d == 0:
                step = q // d
                if all(x == 0 for r, x in enumerate(self.c) if r % step):
                    return hash((d, self.c[::step]))
        return hash((q, self.c))

    def __float__(self):
        return math.fsum(float(x) * p for x, p in zip(self.c, _alpha_pows(self.q)))

    def to_mpf(self, dps: int = 40):
        with mpmath.workdps(dps):
            alpha = mpmath.mpf(2) ** (mpmath.mpf(1) / self.q)
            return mpmath.fsum(mpmath.mpf(x.numerator) / x.denominator * alpha ** r
                               for r, x in enumerate(self.c))

    def to_json(self):
        if all(x == 0 for x in self.c[1:]):
            return str(self.c[0])
        terms = [f"{x}*2^({r}/{self.q})" for r, x in enumerate(self.c) if x]
        return {"value": float(self), "exact": " + ".join(terms)}

    def __repr__(self):
        if all(x == 0 for x in self.c[1:]):
            return f"P2({self.c[0]})"
        return "P2(" + " + ".join(f"{x}*2^({r}/{self.q})" for r, x in enumerate(self.c) if x) + ")"


ZERO = P2.rational(0)
ONE = P2.rational(1)


def psum(xs: Iterable[P2]) -> P2:
    acc = ZERO
    for x in xs:
        acc = acc + x
    return acc


def pmin(a: P2, b: P2) -> P2:
    return a if a <= b else b
