"""Curve measures, Gaussian mollification, Fourier transforms, configuration integrals.

A :class:`DiscreteMeasure` is a weighted list of atoms.  An atom is a point
mass unless the measure carries a ``cell`` (side lengths h), in which case
every atom is the uniform probability on the box ``x + [-h/2, h/2]^d``
times its weight.  Box atoms let the uniform measure on a cube be
represented exactly, and their convolutions with Gaussians are closed form.

The mollifier is psi(x) = exp(-pi |x|^2), psi_delta = delta^-d psi(./delta),
which per coordinate is a normal density with standard deviation
delta / sqrt(2 pi).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.spatial import cKDTree
from scipy.special import ndtr

from .curvecore import CurveStd, cn_norm_bound, rescale
from .polyalg import RatPoly

SQRT_2PI = math.sqrt(2 * math.pi)


class ScaleTooSmall(ValueError):
    pass


class NotProbability(ValueError):
    pass


class NoWitness(RuntimeError):
    pass


@dataclass
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray
    label: str = "custom"
    cell: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights differ in length")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        if self.cell is not None:
            self.cell = np.broadcast_to(np.asarray(self.cell, dtype=float), (self.d,)).copy()

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.weights * factor, self.label, self.cell)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.cell is not None:
            buf.write("# cell=" + ",".join(repr(float(h)) for h in self.cell) + "\n")
        w = csv.writer(buf)
        w.writerow([f"x{i + 1}" for i in range(self.d)] + ["w"])
        for p, wt in zip(self.points, self.weights):
            w.writerow([repr(float(v)) for v in p] + [repr(float(wt))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "custom") -> "DiscreteMeasure":
        cell = None
        lines = text.splitlines()
        if lines and lines[0].startswith("# cell="):
            cell = [float(v) for v in lines.pop(0)[len("# cell="):].split(",")]
        rows = list(csv.reader(lines))
        data = np.array([[float(v) for v in r] for r in rows[1:] if r])
        return cls(data[:, :-1], data[:, -1], label, cell)


def point_mass(x: Sequence[float], weight: float = 1.0) -> DiscreteMeasure:
    return DiscreteMeasure([list(x)], [weight], "custom")


def uniform_cube(d: int, k: int = 0) -> DiscreteMeasure:
    """Uniform probability on [0,1]^d as 2^(kd) equal box atoms."""
    n = 2 ** k
    g = (np.arange(n) + 0.5) / n
    pts = np.stack(np.meshgrid(*([g] * d), indexing="ij"), -1).reshape(-1, d)
    return DiscreteMeasure(pts, np.full(len(pts), 1.0 / len(pts)), "lebesgue-grid",
                           np.full(d, 1.0 / n))


# Curve measures ----------------------------------------------------------

@dataclass(frozen=True)
class CurveMeasureParams:
    curve: CurveStd
    j: int
    c: float
    n_quad: int = 2048
    rule: str = "gauss-legendre"
    order: int = 16


def measure_scale_J(std: CurveStd) -> int:
    """Smallest J with d a^-d ||Phi||_{C^N} 2^-J <= 1/8, where d K_N a = 1/8."""
    d, N = std.d, std.type_N
    a = Fraction(1, 8 * d * std.K_N)
    lhs = d * a ** (-d) * cn_norm_bound(std.components, N) * 8
    J = 0
    while lhs > 2 ** J:
        J += 1
    return J


def _float_polys(polys: Sequence[RatPoly]) -> list[np.ndarray]:
    # numpy polyval wants highest degree first
    return [np.array([float(x) for x in reversed(p.coeffs)] or [0.0]) for p in polys]


def curve_eval(polys: Sequence[RatPoly], s: np.ndarray) -> np.ndarray:
    return np.stack([np.polyval(cf, s) for cf in _float_polys(polys)], axis=-1)


def arc_bound(polys: Sequence[RatPoly]) -> float:
    """Upper bound for sup_[0,1] |Phi'|."""
    return math.sqrt(sum(sum(abs(float(x)) for x in p.derivative().coeffs) ** 2 for p in polys))


def composite_gauss(a: float, b: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mids = (edges[:-1] + edges[1:]) / 2
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _check_scale(std: CurveStd, j: int, c: float):
    if j < std.safe_scale_J0:
        raise ScaleTooSmall(f"j={j} is below J0={std.safe_scale_J0}")
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")


def curve_measure(p: CurveMeasureParams) -> DiscreteMeasure:
    _check_scale(p.curve, p.j, p.c)
    if p.rule != "gauss-legendre":
        raise ValueError(f"unknown quadrature rule {p.rule!r}")
    panels = max(1, math.ceil(p.n_quad / p.order))
    s, w = composite_gauss(p.c, 1.0, panels, p.order)
    pts = curve_eval(rescale(p.curve, p.j), s)
    return DiscreteMeasure(pts, w, "curve")


# Fourier -----------------------------------------------------------------

def fourier(m: DiscreteMeasure, xi) -> np.ndarray:
    """m_hat(xi) = sum_k w_k e^(-2 pi i x_k . xi); xi may be (d,) or (n, d)."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi = np.atleast_2d(xi)
    out = np.empty(len(xi), dtype=complex)
    for lo in range(0, len(xi), 256):
        blk = xi[lo:lo + 256]
        ph = -2j * np.pi * (m.points @ blk.T)
        vals = m.weights @ np.exp(ph)
        if m.cell is not None:
            vals = vals * np.prod(np.sinc(blk * m.cell[None, :]), axis=1)
        out[lo:lo + 256] = vals
    return out[0] if single else out


def curve_fourier(std: CurveStd, j: int, c: float, xi, order: int = 20,
                  phase_per_panel: float = 6.0, block: int = 16384) -> np.ndarray:
    """pi_hat(xi) for pi = pi[Phi; j, c] with panels scaled to |xi| * arc-bound."""
    _check_scale(std, j, c)
    polys = rescale(std, j)
    arc = arc_bound(polys)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    norms = np.linalg.norm(xi, axis=1)
    out = np.empty(len(xi), dtype=complex)
    # group by panel count so each group is one matrix product
    panels = np.maximum(2, np.ceil(2 * np.pi * norms * arc * (1 - c) / phase_per_panel)).astype(int)
    for pc in np.unique(panels):
        idx = np.nonzero(panels == pc)[0]
        s, w = composite_gauss(c, 1.0, int(pc), order)
        acc = np.zeros(len(idx), dtype=complex)
        for lo in range(0, len(s), block):
            pts = curve_eval(polys, s[lo:lo + block])
            acc += w[lo:lo + block] @ np.exp(-2j * np.pi * (pts @ xi[idx].T))
        out[idx] = acc
    return out


def directions(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], -1)
    # Fibonacci lattice on S^{d-1} for d = 3; random-free and deterministic
    if d == 3:
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        r = np.sqrt(1 - z * z)
        ang = np.pi * (1 + 5 ** 0.5) * k
        return np.stack([r * np.cos(ang), r * np.sin(ang), z], -1)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def polar_grid(d: int, r_max: float, n_r: int = 24, n_dir: int = 64, r_min: float = 1.0):
    radii = np.geomspace(r_min, r_max, n_r)
    dirs = directions(d, n_dir)
    grid = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    return radii, dirs, grid


def decay_slope(radii: np.ndarray, sup_abs: np.ndarray, tail: float = 0.5) -> float:
    """Least-squares slope of log sup|pi_hat| against log r over the top radii."""
    k = max(2, int(len(radii) * tail))
    if np.any(sup_abs[-k:] <= 0):
        return float("nan")
    x, y = np.log(radii[-k:]), np.log(sup_abs[-k:])
    return float(np.polyfit(x, y, 1)[0])


def verify_decay(std: CurveStd, bundle, j_list: Iterable[int], c_list: Iterable[float],
                 r_max: float = 1e4, n_r: int = 24, n_dir: int = 64) -> dict:
    J = measure_scale_J(std)
    N = std.type_N
    L = float(bundle.L_N)
    radii, dirs, grid = polar_grid(std.d, r_max, n_r, n_dir)
    grid = np.vstack([np.zeros((1, std.d)), grid])
    rows = []
    best = (-1.0, None)
    radial = np.zeros(n_r)
    for j in j_list:
        if j < J:
            raise ScaleTooSmall(f"j={j} is below J(Phi)={J}")
        for c in c_list:
            vals = np.abs(curve_fourier(std, j, c, grid))
            ratio = vals * (1 + np.linalg.norm(grid, axis=1)) ** (1 / N)
            k = int(np.argmax(ratio))
            sup_abs = vals[1:].reshape(n_r, len(dirs)).max(axis=1)
            radial = np.maximum(radial, ratio[1:].reshape(n_r, len(dirs)).max(axis=1))
            slope = decay_slope(radii, sup_abs)
            rows.append({"j": j, "c": c, "max_ratio": float(ratio[k]),
                         "argmax_xi": grid[k].tolist(), "at_zero": float(vals[0]),
                         "slope": slope})
            if ratio[k] > best[0]:
                best = (float(ratio[k]), rows[-1])
    return {"J": J, "L_N": L, "N": N, "max_ratio": best[0],
            "argmax": {"j": best[1]["j"], "c": best[1]["c"], "xi": best[1]["argmax_xi"]},
            "violations": sum(r["max_ratio"] > L for r in rows),
            "ok": best[0] <= L, "rows": rows,
            "profile": {"xi": radii.tolist(), "ratio": radial.tolist()},
            "note": "finitely many (j, c, xi) sampled"}


# Ball masses -------------------------------------------------------------

def ball_mass(m: DiscreteMeasure, center, r: float) -> float:
    if r <= 0:
        raise ValueError("radius must be positive")
    dist = np.linalg.norm(m.points - np.asarray(center, dtype=float)[None, :], axis=1)
    return math.fsum(m.weights[dist <= r])


def curve_ball_mass(polys: Sequence[RatPoly], c: float, r: float) -> float:
    """|{s in [c,1] : |Phi(s)| <= r}| from the real roots of |Phi|^2 - r^2."""
    sq = RatPoly([0])
    for p in polys:
        sq = sq + p * p
    cf = [float(x) for x in sq.coeffs]
    cf[0] -= r * r
    f = np.polynomial.Polynomial(cf)
    roots = [z.real for z in f.roots() if abs(z.imag) < 1e-9 and c < z.real < 1]
    cuts = np.array(sorted([c, *roots, 1.0]))
    mids = (cuts[:-1] + cuts[1:]) / 2
    inside = f(mids) <= 0
    return float(np.sum(np.diff(cuts)[inside]))


def ball_sweep(std: CurveStd, L: Optional[float] = None, r_grid=None, j_list=None,
               c_fracs=(1.0, 0.5, 1e-3), n_quad: int = 4096) -> dict:
    """Check pi(B(0; r)) >= r/L for c <= r/L; default L = 2 d K_N."""
    L = float(L if L is not None else 2 * std.d * std.K_N)
    if r_grid is None:
        r_grid = np.geomspace(1e-4, 1.0, 25)
    if j_list is None:
        j_list = range(std.safe_scale_J0, std.safe_scale_J0 + 11)
    rows, violations, worst = [], 0, math.inf
    for j in j_list:
        polys = rescale(std, j)
        for r in r_grid:
            for f in c_fracs:
                c = f * r / L
                mass = curve_ball_mass(polys, c, r)
                disc = ball_mass(curve_measure(CurveMeasureParams(std, j, c, n_quad)), np.zeros(std.d), r)
                slack = mass - r / L
                worst = min(worst, slack / (r / L))
                if slack < 0:
                    violations += 1
                rows.append({"j": j, "r": float(r), "c": c, "mass": mass,
                             "discrete_mass": disc, "bound": r / L})
    return {"L": L, "violations": violations, "worst_relative_slack": worst, "rows": rows}


# Mollification -------------------------------------------------------------

def psi(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.exp(-np.pi * np.sum(x * x, axis=-1))


def _F2(u, sd):
    """Second antiderivative of the N(0, sd^2) density: u Phi(u/sd) + sd phi(u/sd)."""
    z = u / sd
    return u * ndtr(z) + sd * np.exp(-0.5 * z * z) / SQRT_2PI


def _box_kernel_1d(z, h: float, sd: float):
    """Density of U[-h/2, h/2] convolved with N(0, sd^2)."""
    if h == 0 or h < 1e-6 * sd:
        return np.exp(-0.5 * (z / sd) ** 2) / (sd * SQRT_2PI)
    return (ndtr((z + h / 2) / sd) - ndtr((z - h / 2) / sd)) / h


def _tri_kernel_1d(z, h: float, sd: float):
    """Density of the difference of two U[-h/2, h/2] convolved with N(0, sd^2)."""
    if h == 0 or h < 1e-4 * sd:
        return np.exp(-0.5 * (z / sd) ** 2) / (sd * SQRT_2PI)
    return (_F2(z + h, sd) - 2 * _F2(z, sd) + _F2(z - h, sd)) / (h * h)


def mollify(m: DiscreteMeasure, delta: float) -> Callable[[np.ndarray], np.ndarray]:
    if delta <= 0:
        raise ValueError("delta must be positive")
    sd = delta / SQRT_2PI
    tree = cKDTree(m.points)
    pad = 0.0 if m.cell is None else float(np.linalg.norm(m.cell)) / 2
    cutoff = pad + 40 * sd

    def density(x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        for i, nbrs in enumerate(tree.query_ball_point(x, cutoff)):
            if not nbrs:
                continue
            nbrs = np.sort(np.asarray(nbrs))
            diff = x[i][None, :] - m.points[nbrs]
            if m.cell is None:
                k = np.exp(-np.pi * np.sum(diff * diff, axis=1) / delta ** 2) / delta ** m.d
            else:
                k = np.prod([_box_kernel_1d(diff[:, t], m.cell[t], sd) for t in range(m.d)], axis=0)
            out[i] = math.fsum(m.weights[nbrs] * k)
        return out

    return density


# Configuration integral ------------------------------------------------------

def _pair_kernel(diff: np.ndarray, cell, sd: float, delta: float, d: int) -> np.ndarray:
    if cell is None:
        return np.exp(-np.pi * np.sum(diff * diff, axis=1) / delta ** 2) / delta ** d
    return np.prod([_tri_kernel_1d(diff[:, t], cell[t], sd) for t in range(d)], axis=0)


def _check_probability(mu: DiscreteMeasure, tol: float = 1e-9):
    if abs(mu.mass - 1) > tol:
        raise NotProbability(f"mu has total mass {mu.mass!r}")


def lattice_grid(m: DiscreteMeasure, rtol: float = 1e-9) -> Optional[np.ndarray]:
    """Weights on the cell lattice when every atom sits at a cell centre, else None."""
    if m.cell is None:
        return None
    h = np.asarray(m.cell, dtype=float)
    idx = np.floor(m.points / h[None, :]).astype(int)
    if not np.allclose(m.points, (idx + 0.5) * h[None, :], rtol=0, atol=rtol * h.max()):
        return None
    lo = idx.min(axis=0)
    grid = np.zeros(tuple(idx.max(axis=0) - lo + 1))
    np.add.at(grid, tuple((idx - lo).T), m.weights)
    return grid


def _config_lattice(grid: np.ndarray, h: np.ndarray, pi: DiscreteMeasure, delta: float,
                    chunk: int = 256) -> float:
    # x_a - x_b only takes lattice values c h; weight them by the autocorrelation
    auto = fftconvolve(grid, grid[tuple(slice(None, None, -1) for _ in grid.shape)], mode="full")
    offs = np.argwhere(np.abs(auto) > 1e-300)
    A = auto[tuple(offs.T)]
    vec = (offs - (np.array(grid.shape) - 1)) * h[None, :]
    sd = delta / SQRT_2PI
    d = grid.ndim
    terms = []
    keep = pi.weights != 0
    Y, W = pi.points[keep], pi.weights[keep]
    for lo in range(0, len(Y), chunk):
        diff = vec[None, :, :] - Y[lo:lo + chunk, None, :]
        k = _pair_kernel(diff.reshape(-1, d), h, sd, delta, d).reshape(diff.shape[:2])
        terms.append(float(W[lo:lo + chunk] @ (k @ A)))
    return math.fsum(terms)


def config_value(mu: DiscreteMeasure, pi: DiscreteMeasure, delta: float,
                 tail: float = 1e-16, use_lattice: bool = True) -> float:
    """int (mu * psi_delta) * pi dmu = sum_{a,b,k} w_a w_b w_k psi_delta(x_a - x_b - y_k).

    Atoms on a cell lattice are grouped by offset.  Otherwise pairs are
    restricted to |x_a - x_b - y_k| below a cutoff where the Gaussian factor
    is under ``tail`` relative to its peak.
    """
    grid = lattice_grid(mu) if use_lattice else None
    if grid is not None:
        return _config_lattice(grid, np.asarray(mu.cell, dtype=float), pi, delta)
    sd = delta / SQRT_2PI
    d = mu.d
    pad = 0.0 if mu.cell is None else float(np.linalg.norm(mu.cell))
    cutoff = pad + delta * math.sqrt(math.log(1 / tail) / math.pi)
    tree = cKDTree(mu.points)
    terms = []
    for yk, wk in zip(pi.points, pi.weights):
        if wk == 0:
            continue
        shifted = cKDTree(mu.points + yk[None, :])
        pairs = tree.query_ball_tree(shifted, cutoff)
        a_idx = np.repeat(np.arange(len(pairs)), [len(p) for p in pairs])
        if a_idx.size == 0:
            continue
        b_idx = np.concatenate([np.asarray(p, dtype=int) for p in pairs if p])
        diff = mu.points[a_idx] - mu.points[b_idx] - yk[None, :]
        k = _pair_kernel(diff, mu.cell, sd, delta, d)
        terms.append(wk * math.fsum(mu.weights[a_idx] * mu.weights[b_idx] * k))
    return math.fsum(terms)


def default_delta_seq() -> list[float]:
    return [2.0 ** -k for k in range(3, 13)]


@dataclass
class ConfigReport:
    deltas: list[float]
    values: list[float]
    running_min: list[float]
    quad_error: Optional[list[float]] = None

    @property
    def proxy(self) -> float:
        return self.running_min[-1]

    def to_json(self):
        return {"deltas": self.deltas, "values": self.values,
                "running_min": self.running_min, "liminf_proxy": self.proxy,
                "quad_error": self.quad_error,
                "note": "liminf proxy = minimum over the supplied finite delta sequence"}


def configuration_integral(mu: DiscreteMeasure, pi: DiscreteMeasure,
                           delta_seq: Optional[Sequence[float]] = None,
                           pi_coarse: Optional[DiscreteMeasure] = None) -> ConfigReport:
    """Values of the mollified configuration integral along delta_seq.

    If ``pi_coarse`` (the same curve measure at half the quadrature nodes) is
    given, the difference of the two evaluations is reported as the
    quadrature error estimate for each delta.
    """
    _check_probability(mu)
    deltas = list(delta_seq) if delta_seq is not None else default_delta_seq()
    if any(x <= 0 for x in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta_seq must be positive and strictly decreasing")
    values = [abs(config_value(mu, pi, dl)) for dl in deltas]
    run = list(np.minimum.accumulate(values))
    err = None
    if pi_coarse is not None:
        err = [abs(v - abs(config_value(mu, pi_coarse, dl))) for v, dl in zip(values, deltas)]
    return ConfigReport(deltas, values, [float(x) for x in run], err)


@dataclass
class Witness:
    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    residual: float
    weight: float = field(default=0.0)

    def to_json(self):
        return {"x": self.x.tolist(), "y": self.y.tolist(), "gamma": self.gamma.tolist(),
                "residual": self.residual}


def pattern_witness(mu: DiscreteMeasure, pi: DiscreteMeasure, delta: float) -> Witness:
    """Triple (x, y, gamma) in supp mu x supp mu x supp pi with |x - y - gamma| <= sqrt(delta)."""
    best: Optional[Witness] = None
    tree = cKDTree(mu.points)
    half = None if mu.cell is None else mu.cell / 2
    for yk, wk in zip(pi.points, pi.weights):
        if wk <= 0:
            continue
        if half is None:
            dist, a = tree.query(mu.points + yk[None, :])
            b = int(np.argmin(dist))
            a = int(a[b])
            x, y = mu.points[a], mu.points[b]
            res = float(dist[b])
        else:
            # x - y ranges over the box (x_a - x_b) + [-h, h]; search near gamma
            nearest = tree.query(mu.points + yk[None, :], k=1)[1]
            b = np.arange(len(mu.points))
            centre = mu.points[nearest] - mu.points[b]
            z = np.clip(yk[None, :], centre - 2 * half, centre + 2 * half)
            gap = np.linalg.norm(z - yk[None, :], axis=1)
            i = int(np.argmin(gap))
            a_i, b_i = int(nearest[i]), int(b[i])
            off = z[i] - centre[i]  # in [-h, h]; split between the two cells
            x = mu.points[a_i] + off / 2
            y = mu.points[b_i] - off / 2
            res = float(np.linalg.norm(x - y - yk))
        if best is None or res < best.residual:
            best = Witness(np.asarray(x, float), np.asarray(y, float), np.asarray(yk, float), res, float(wk))
    if best is None or best.residual > math.sqrt(delta):
        raise NoWitness(f"no triple within sqrt(delta)={math.sqrt(delta):.3g}"
                        + ("" if best is None else f" (best residual {best.residual:.3g})"))
    return best
