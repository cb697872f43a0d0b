"""Plateau bump on [0, 1)^d with exact rational box integrals.

In one variable g = 1_[0, b] * kappa where kappa is the uniform-knot B-spline
of order m supported on [0, w] with unit mass.  Then 0 <= g <= 1, supp g =
[0, b + w] inside [0, 1), and the integral of g is b.  The bump is
phi(x) = prod_i g(x_i) / b, so ||phi||_inf = b^-d.  Integrals of g over
rational intervals are exact rationals, and |g_hat| has an explicit
majorant, which is what the rigorous A-search needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath


@lru_cache(maxsize=None)
def _binoms(m: int) -> tuple[int, ...]:
    return tuple(math.comb(m, k) for k in range(m + 1))


def _truncated_power_sum(z: Fraction, m: int, power: int) -> Fraction:
    """sum_k (-1)^k C(m,k) (z-k)_+^power."""
    acc = Fraction(0)
    for k, c in enumerate(_binoms(m)):
        if z <= k:
            break
        term = c * (z - k) ** power
        acc += -term if k % 2 else term
    return acc


@dataclass(frozen=True)
class PlateauBump:
    d: int
    w: Fraction
    b: Fraction
    m: int

    @classmethod
    def for_dimension(cls, d: int) -> "PlateauBump":
        # w <= (1 - 2^(-1/d))/2 keeps b^-d <= 2 with room to spare
        target = (1 - 2 ** (-1 / d)) / 2
        w = Fraction(math.floor(target * 64), 64)
        b = 1 - Fraction(5, 4) * w
        return cls(d, w, b, 4 * d + 4)

    @property
    def sup_norm(self) -> Fraction:
        return self.b ** -self.d

    def _H(self, x: Fraction) -> Fraction:
        """Second antiderivative of kappa, vanishing to the left of 0."""
        m, w = self.m, self.w
        z = m * x / w
        if z <= 0:
            return Fraction(0)
        return (w / m) * _truncated_power_sum(z, m, m + 1) / math.factorial(m + 1)

    def _K(self, x: Fraction) -> Fraction:
        m, w = self.m, self.w
        z = m * x / w
        if z <= 0:
            return Fraction(0)
        if z >= m:
            return Fraction(1)
        return _truncated_power_sum(z, m, m) / math.factorial(m)

    def g(self, x) -> Fraction:
        x = Fraction(x)
        return self._K(x) - self._K(x - self.b)

    def g_integral(self, lo, hi) -> Fraction:
        lo, hi = Fraction(lo), Fraction(hi)
        G = lambda t: self._H(t) - self._H(t - self.b)
        return G(hi) - G(lo)

    def phi(self, x: Sequence) -> Fraction:
        out = Fraction(1)
        for xi in x:
            out *= self.g(xi) / self.b
        return out

    def box_integral(self, lo: Sequence, hi: Sequence) -> Fraction:
        """Exact integral of phi over the box prod [lo_i, hi_i]."""
        out = Fraction(1)
        for a, c in zip(lo, hi):
            out *= self.g_integral(a, c) / self.b
        return out

    def phi_float(self, x):
        """Vectorised float evaluation of phi at points x (..., d)."""
        import numpy as np

        x = np.asarray(x, dtype=float)
        vals = np.vectorize(lambda t: float(self.g(Fraction(t))))(x)
        return np.prod(vals, axis=-1) / float(self.b) ** self.d

    # Fourier side -------------------------------------------------------
    def g_hat_abs_majorant(self, omega: float) -> float:
        om = abs(omega)
        if om == 0:
            return float(self.b)
        box = min(float(self.b), 1 / (math.pi * om))
        spl = min(1.0, (self.m / (math.pi * float(self.w) * om)) ** self.m)
        return box * spl

    def tail_bound(self, A):
        """Interval upper bound for the integral of |phi_hat| over |xi| >= A.

        Uses |phi_hat(xi)| = prod |g_hat(xi_i)|/b, the inclusion
        {|xi| >= A} in the union of {|xi_i| >= A/sqrt(d)}, and the majorants
        |g_hat(w)| <= min(b, 1/(pi|w|)) * min(1, (m/(pi w |w|))^m).
        Returns an mpmath interval.
        """
        iv = mpmath.iv
        d, m = self.d, self.m
        b = iv.mpf(self.b.numerator) / self.b.denominator
        w = iv.mpf(self.w.numerator) / self.w.denominator
        R1 = iv.mpf(m) / (iv.pi * w)
        # integral over R of |phi1_hat|: split at R1
        G = 2 * (R1 + 1 / (b * iv.pi * m))
        R = iv.mpf(A) / iv.sqrt(iv.mpf(d))
        if (R - R1).a < 0:
            return iv.mpf(mpmath.inf)
        T1 = 2 / (b * iv.pi) * R1 ** m * R ** (-m) / m
        return d * T1 * G ** (d - 1)
