"""Riesz energies I_sigma of discrete and box-mass measures.

For point atoms only the off-diagonal energy is finite.  It is computed two
ways: a plain double sum, and a regrouping by Whitney level, where a pair
(x, y) belongs to level j when their dyadic cubes of side 2^-j in
Omega = [0, 2)^d are non-adjacent while their parents are adjacent.

Box-mass measures (Frostman output) are continued as uniform densities on
their leaf boxes.  Then I_sigma = sum_c K(c) A(c) where A is the
autocorrelation of the leaf weights and K(c) = E|Z|^-sigma for Z the
difference of two uniform points in boxes offset by c.  The density of Z is
a product of triangles, so K(c) splits into four rectangles on which the
density is bilinear; when a rectangle has the origin at a corner the
singular integral is done in polar coordinates around it.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve

from ..constants import energy_constant
from ..measures import DiscreteMeasure, lattice_grid


class ExponentOutOfRange(ValueError):
    pass


def _check_sigma(sigma: float, d: int):
    if not 0 < sigma < d:
        raise ExponentOutOfRange(f"need 0 < sigma < d, got sigma={sigma}, d={d}")


def whitney_bound(d: int, L: float, sigma: float, s: float, S: int) -> float:
    """L * E(s - sigma - S + d) = 6^d L / (1 - 2^(sigma + S - d - s))."""
    t = s - sigma - S + d
    if t <= 0:
        raise ExponentOutOfRange("need s > sigma + S - d")
    return L * float(energy_constant(d, Fraction(t).limit_denominator(10 ** 12)))


def _pairs_blocks(n: int, block: int = 512):
    for lo in range(0, n, block):
        yield lo, min(n, lo + block)


def energy_direct(m: DiscreteMeasure, sigma: float) -> float:
    """sum_{a != b} w_a w_b |x_a - x_b|^-sigma."""
    _check_sigma(sigma, m.d)
    x, w = m.points, m.weights
    partial = []
    for lo, hi in _pairs_blocks(len(x)):
        diff = x[lo:hi, None, :] - x[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        with np.errstate(divide="ignore"):
            k = np.where(r > 0, r ** -sigma, 0.0)
        partial.append(float(w[lo:hi] @ k @ w))
    return math.fsum(partial)


def whitney_levels(xa: np.ndarray, xb: np.ndarray, max_level: int = 60) -> np.ndarray:
    """Level j of each pair: first j with non-adjacent side-2^-j cubes."""
    lev = np.full(len(xa), -1, dtype=int)
    todo = np.ones(len(xa), dtype=bool)
    for j in range(0, max_level):
        sc = 2.0 ** j
        gap = np.max(np.abs(np.floor(xa * sc) - np.floor(xb * sc)), axis=1)
        hit = todo & (gap >= 2)
        lev[hit] = j
        todo &= ~hit
        if not todo.any():
            break
    return lev


def energy_whitney(m: DiscreteMeasure, sigma: float) -> dict:
    """Off-diagonal energy summed level by level over related cube pairs.

    Also returns the dyadic upper estimate sum_j 2^(j sigma) sum w_a w_b,
    valid because related cubes at level j are at distance >= 2^-j.
    """
    _check_sigma(sigma, m.d)
    x, w = m.points, m.weights
    if np.any(x < 0) or np.any(x >= 2):
        raise ValueError("points must lie in [0, 2)^d")
    n = len(x)
    by_level: dict[int, list[float]] = {}
    upper: dict[int, list[float]] = {}
    for lo, hi in _pairs_blocks(n, 256):
        a = np.repeat(np.arange(lo, hi), n)
        b = np.tile(np.arange(n), hi - lo)
        keep = a != b
        a, b = a[keep], b[keep]
        diff = x[a] - x[b]
        r = np.sqrt(np.sum(diff * diff, axis=1))
        lev = whitney_levels(x[a], x[b])
        ww = w[a] * w[b]
        for j in np.unique(lev):
            sel = lev == j
            by_level.setdefault(int(j), []).append(float(np.sum(ww[sel] * r[sel] ** -sigma)))
            upper.setdefault(int(j), []).append(float(np.sum(ww[sel])) * 2.0 ** (j * sigma))
    levels = {j: math.fsum(v) for j, v in sorted(by_level.items())}
    return {"value": math.fsum(levels.values()), "levels": levels,
            "dyadic_upper": math.fsum(math.fsum(v) for v in upper.values())}


# Box-mass measures -----------------------------------------------------------

def _corner_integral(a: float, b: float, p: tuple[float, float, float, float], sigma: float) -> float:
    """Integral over [0,a]x[0,b] of (p0 + p1 u + p2 v + p3 u v) (u^2+v^2)^(-sigma/2)."""
    p0, p1, p2, p3 = p
    e2, e3, e4 = 2 - sigma, 3 - sigma, 4 - sigma

    def radial(th, R):
        c, s = math.cos(th), math.sin(th)
        return p0 * R ** e2 / e2 + (p1 * c + p2 * s) * R ** e3 / e3 + p3 * c * s * R ** e4 / e4

    tc = math.atan2(b, a)
    f1 = lambda th: radial(th, a / math.cos(th))
    f2 = lambda th: radial(th, b / math.sin(th))
    v1 = integrate.quad(f1, 0, tc, epsabs=0, epsrel=1e-13, limit=200)[0]
    v2 = integrate.quad(f2, tc, math.pi / 2, epsabs=0, epsrel=1e-13, limit=200)[0]
    return v1 + v2


def _gauss_rect(x0, x1, y0, y1, f, order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    xs = (x0 + x1) / 2 + (x1 - x0) / 2 * t
    ys = (y0 + y1) / 2 + (y1 - y0) / 2 * t
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(w, w) * (x1 - x0) * (y1 - y0) / 4
    return float(np.sum(W * f(X, Y)))


def box_kernel(offset: tuple[int, int], h: tuple[float, float], sigma: float) -> float:
    """E|X - Y|^-sigma, X, Y uniform on h-boxes whose anchors differ by offset (in cells)."""
    h1, h2 = h
    c1, c2 = offset[0] * h1, offset[1] * h2
    total = 0.0
    # density of Z: (h1 - |z1 - c1|)(h2 - |z2 - c2|) / (h1 h2)^2
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            x0, x1 = sorted((c1, c1 + s1 * h1))
            y0, y1 = sorted((c2, c2 + s2 * h2))
            corners = [(x, y) for x in (x0, x1) for y in (y0, y1)]
            at_corner = any(abs(x) < 1e-15 * h1 and abs(y) < 1e-15 * h2 for x, y in corners)
            if at_corner:
                # reflect so the origin is the (0,0) corner and the box is [0,a]x[0,b]
                fx = 1.0 if abs(x0) < 1e-15 * h1 else -1.0
                fy = 1.0 if abs(y0) < 1e-15 * h2 else -1.0
                # on this piece h - |z - c| = h - s (z - c), and z = f u
                g1 = (h1 + s1 * c1, -s1 * fx)
                g2 = (h2 + s2 * c2, -s2 * fy)
                p = (g1[0] * g2[0], g1[1] * g2[0], g1[0] * g2[1], g1[1] * g2[1])
                total += _corner_integral(h1, h2, p, sigma)
            else:
                dist = math.hypot(max(0.0, x0, -x1), max(0.0, y0, -y1))
                order = 16 if dist < 2 * max(h1, h2) else 6
                f = lambda X, Y: ((h1 - np.abs(X - c1)) * (h2 - np.abs(Y - c2))
                                  * (X * X + Y * Y) ** (-sigma / 2))
                total += _gauss_rect(x0, x1, y0, y1, f, order)
    return total / (h1 * h2) ** 2


def box_energy(m: DiscreteMeasure, sigma: float) -> float:
    """I_sigma of the measure with each atom spread uniformly over its cell (d = 2)."""
    if m.cell is None:
        raise ValueError("box_energy needs a measure with a cell size")
    if m.d != 2:
        raise NotImplementedError("box energy is implemented for d = 2")
    _check_sigma(sigma, m.d)
    grid = lattice_grid(m)
    if grid is None:
        raise ValueError("box_energy needs atoms at the centres of a cell lattice")
    auto = fftconvolve(grid, grid[::-1, ::-1], mode="full")
    n1, n2 = grid.shape
    h = (float(m.cell[0]), float(m.cell[1]))
    parts = []
    for i in range(auto.shape[0]):
        for j in range(auto.shape[1]):
            a = auto[i, j]
            if abs(a) < 1e-300:
                continue
            off = (i - (n1 - 1), j - (n2 - 1))
            parts.append(a * box_kernel(off, h, sigma))
    return math.fsum(parts)


def energy(theta: DiscreteMeasure, sigma: float, s: Optional[float] = None,
           S: Optional[int] = None, L: Optional[float] = None) -> dict:
    """Energy report; box-mass measures use the uniform-in-cell continuation."""
    _check_sigma(sigma, theta.d)
    out: dict = {"sigma": sigma}
    if theta.cell is None:
        w = energy_whitney(theta, sigma)
        out.update({"value": w["value"], "convention": "off-diagonal (atoms)",
                    "levels": w["levels"], "dyadic_upper": w["dyadic_upper"]})
    else:
        out.update({"value": box_energy(theta, sigma), "convention": "uniform within cells"})
    if s is not None and S is not None and L is not None:
        bound = whitney_bound(theta.d, L, sigma, s, S)
        out.update({"whitney_bound": bound, "within_bound": out["value"] <= bound})
    return out
