"""Hölder graphs of fractional Brownian motion and avoidance experiments.

F_s: [0,1] -> R^(d-1) has d-1 independent fBm coordinates with Hurst index
H = gamma/2, gamma = min(2/s, 2(d-s)/(d-1)); its graph has dimension s.
Rotating that graph so e_1 points along a direction u with u . Phi flat at
the origin gives a set K whose difference set misses the curve near 0.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .classifier import Dependence, classify
from .curvecore import CurveSpec
from .polyalg import combine

log = logging.getLogger(__name__)


class EmbeddingNotPSD(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    pass


def holder_gamma(s: float, d: int) -> float:
    if not 1 <= s < d:
        raise ValueError(f"need 1 <= s < d, got s={s}, d={d}")
    return min(2.0 / s, 2.0 * (d - s) / (d - 1))


def holder_window(s: float, d: int) -> float:
    """Supremum of admissible Hölder exponents, min(1/s, (d-s)/(d-1))."""
    return holder_gamma(s, d) / 2


@dataclass
class FbmGraphSample:
    s: float
    d: int
    gamma: float
    hurst: float
    t_grid: np.ndarray
    values: np.ndarray  # shape (n, d-1)
    seed: int
    method: str = "davies-harte"

    @property
    def n(self) -> int:
        return len(self.t_grid)

    def graph_points(self) -> np.ndarray:
        return np.column_stack([self.t_grid, self.values])

    def meta(self) -> dict:
        return {"s": self.s, "d": self.d, "gamma": self.gamma, "hurst": self.hurst,
                "n": self.n, "seed": self.seed, "method": self.method}

    def save(self, stem: Union[str, Path]) -> tuple[Path, Path]:
        """Write ``stem.npz`` (columns t, x1..x_{d-1}) and a ``stem.json`` sidecar."""
        stem = Path(stem)
        data = stem.with_suffix(".npz")
        cols = {"t": self.t_grid}
        cols.update({f"x{i + 1}": self.values[:, i] for i in range(self.values.shape[1])})
        np.savez(data, **cols)
        side = stem.with_suffix(".json")
        side.write_text(json.dumps(self.meta(), indent=2))
        return data, side

    @classmethod
    def load(cls, stem: Union[str, Path]) -> "FbmGraphSample":
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        with np.load(stem.with_suffix(".npz")) as z:
            t = z["t"]
            vals = np.column_stack([z[f"x{i + 1}"] for i in range(meta["d"] - 1)])
        return cls(meta["s"], meta["d"], meta["gamma"], meta["hurst"], t, vals,
                   meta["seed"], meta.get("method", "davies-harte"))


def _fgn_autocov(m: int, H: float) -> np.ndarray:
    k = np.arange(m + 1, dtype=float)
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def _davies_harte(m: int, H: float, rng: np.random.Generator, tol: float = 1e-10) -> np.ndarray:
    """m fractional Gaussian noise increments with unit step."""
    r = _fgn_autocov(m, H)
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -tol * lam.max():
        raise EmbeddingNotPSD(f"circulant eigenvalue {lam.min():.3g} < 0")
    lam = np.clip(lam, 0, None)
    M = len(row)
    z = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    y = np.fft.fft(np.sqrt(lam / M) * z)
    return y.real[:m]


def _cholesky_fgn(m: int, H: float, rng: np.random.Generator) -> np.ndarray:
    r = _fgn_autocov(m, H)
    idx = np.abs(np.subtract.outer(np.arange(m), np.arange(m)))
    L = np.linalg.cholesky(r[idx] + 1e-12 * np.eye(m))
    return L @ rng.standard_normal(m)


def fbm_path(n: int, H: float, rng: np.random.Generator) -> tuple[np.ndarray, str]:
    """fBm on linspace(0, 1, n) with X_0 = 0 and Var(X_t - X_u) = |t-u|^(2H)."""
    m = n - 1
    h = 1.0 / m
    if H >= 1.0:
        return np.linspace(0.0, 1.0, n) * rng.standard_normal(), "linear"
    try:
        inc, method = _davies_harte(m, H, rng), "davies-harte"
    except EmbeddingNotPSD:
        if m > 2 ** 12:
            raise
        log.warning("circulant embedding not PSD, falling back to Cholesky")
        inc, method = _cholesky_fgn(m, H, rng), "cholesky"
    return np.concatenate([[0.0], np.cumsum(inc)]) * h ** H, method


def fbm_graph(s: float, d: int, n: int, seed: int) -> FbmGraphSample:
    if n < 2 ** 10 or n & (n - 1):
        raise ValueError("n must be a power of two >= 2^10")
    gamma = holder_gamma(s, d)
    H = min(gamma / 2, 1.0)
    children = np.random.SeedSequence(seed).spawn(d - 1)
    cols, methods = [], set()
    for ss in children:
        x, meth = fbm_path(n, H, np.random.default_rng(ss))
        cols.append(x)
        methods.add(meth)
    return FbmGraphSample(float(s), d, gamma, H, np.linspace(0.0, 1.0, n),
                          np.column_stack(cols), int(seed), "+".join(sorted(methods)))


def increment_variance_test(s: float, d: int, n: int, seeds: Sequence[int],
                            lags: Sequence[int] = (1, 16, 256)) -> list[dict]:
    """Compare the sample mean of |X_t - X_0|^2 over seeds with (d-1) t^gamma.

    Each seed contributes one value per lag (taken at the origin, so samples
    across seeds are independent); the z-score uses the sample standard error.
    """
    rows = []
    vals = {k: [] for k in lags}
    gamma = holder_gamma(s, d)
    for sd in seeds:
        g = fbm_graph(s, d, n, sd)
        for k in lags:
            vals[k].append(float(np.sum((g.values[k] - g.values[0]) ** 2)))
    h = 1.0 / (n - 1)
    for k in lags:
        v = np.array(vals[k])
        expect = (d - 1) * (k * h) ** gamma
        se = v.std(ddof=1) / math.sqrt(len(v))
        rows.append({"lag": k, "mean": float(v.mean()), "expected": expect,
                     "std_error": float(se), "z": float((v.mean() - expect) / se)})
    return rows


@dataclass
class HolderEstimate:
    alpha: float
    seminorm: float
    sup_norm: float

    @property
    def value(self) -> float:
        return self.sup_norm + self.seminorm


def _lags(m: int, dense: int = 64) -> np.ndarray:
    geo = np.unique(np.round(np.geomspace(1, m, 200)).astype(int))
    return np.unique(np.concatenate([np.arange(1, min(dense, m) + 1), geo]))


def holder_estimate(g: FbmGraphSample, alpha: float) -> HolderEstimate:
    """Sup norm plus max over lags of |F(t+h) - F(t)| / h^alpha on the grid."""
    if not 0 < alpha < 1:
        raise ValueError("need 0 < alpha < 1")
    x = g.values
    t = g.t_grid
    sup = float(np.max(np.linalg.norm(x, axis=1)))
    best = 0.0
    for k in _lags(len(t) - 1):
        diff = np.linalg.norm(x[k:] - x[:-k], axis=1)
        hk = t[k] - t[0]
        best = max(best, float(diff.max()) / hk ** alpha)
    return HolderEstimate(alpha, best, sup)


@dataclass
class DimEstimate:
    dim: float
    residual: float
    ks: list
    counts: list

    def to_json(self):
        return {"dim": self.dim, "residual": self.residual,
                "eps": [2.0 ** -k for k in self.ks], "counts": self.counts}


def box_counts(t: np.ndarray, x: np.ndarray, ks: Sequence[int]) -> list[int]:
    """N(2^-k) for the graph of x over t.

    For a scalar path each column of width eps is covered by the cells its
    range meets (consecutive samples joined, so the path is connected); in
    higher codimension occupied cells of the samples are counted.
    """
    x = np.atleast_2d(x.T).T
    out = []
    for k in ks:
        eps = 2.0 ** -k
        col = np.minimum((t / eps).astype(np.int64), 2 ** k - 1)
        if x.shape[1] == 1:
            v = x[:, 0]
            # each segment [v_i, v_{i+1}] belongs to the column of its left end
            lo = np.minimum(v[:-1], v[1:])
            hi = np.maximum(v[:-1], v[1:])
            c = col[:-1]
            cmin = np.full(2 ** k, np.inf)
            cmax = np.full(2 ** k, -np.inf)
            np.minimum.at(cmin, c, lo)
            np.maximum.at(cmax, c, hi)
            ok = np.isfinite(cmin)
            cnt = np.floor(cmax[ok] / eps) - np.floor(cmin[ok] / eps) + 1
            out.append(int(cnt.sum()))
        else:
            cells = np.column_stack([col, np.floor(x / eps).astype(np.int64)])
            out.append(len(np.unique(cells, axis=0)))
    return out


def graph_dim_estimate(g: FbmGraphSample, k_min: int = 3, min_per_column: int = 32) -> DimEstimate:
    n = g.n
    if n < 2 ** 14:
        raise ValueError("box counting needs n >= 2^14")
    k_max = int(math.log2((n - 1) / min_per_column))
    ks = list(range(k_min, k_max + 1))
    counts = box_counts(g.t_grid, g.values, ks)
    X = np.array(ks, dtype=float) * math.log(2)
    Y = np.log(np.array(counts, dtype=float))
    A = np.column_stack([X, np.ones_like(X)])
    coef, res, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - Y) ** 2)))
    return DimEstimate(float(coef[0]), resid, ks, counts)


# avoidance ----------------------------------------------------------------

def rotation_to(u: Sequence[float]) -> np.ndarray:
    """Orthogonal U with U e_1 = u (a Householder reflection)."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    e1 = np.zeros_like(u)
    e1[0] = 1.0
    v = e1 - u
    nv = float(v @ v)
    if nv < 1e-30:
        return np.eye(len(u))
    return np.eye(len(u)) - 2.0 * np.outer(v, v) / nv


@dataclass
class SampledCurve:
    """A smooth curve given by a vectorised map t -> R^d on an interval."""
    f: Callable[[np.ndarray], np.ndarray]
    interval: tuple[float, float]
    name: str = "curve"

    def __call__(self, t) -> np.ndarray:
        return self.f(np.asarray(t, dtype=float))


def flat_curve() -> SampledCurve:
    """(t, exp(-1/t^2)) on [-1, 1], infinite type at 0 in direction e_2."""
    def f(t):
        with np.errstate(divide="ignore", over="ignore"):
            y = np.where(t == 0, 0.0, np.exp(-1.0 / np.where(t == 0, 1.0, t) ** 2))
        return np.column_stack([t, y])
    return SampledCurve(f, (-1.0, 1.0), "(t, exp(-1/t^2))")


def parabola_curve() -> SampledCurve:
    return SampledCurve(lambda t: np.column_stack([t, t * t]), (-1.0, 1.0), "(t, t^2)")


@dataclass
class RadiusConstants:
    c0: float
    delta: float
    C_n: float
    m: int
    n: int
    alpha: float
    c1: float = 1.0
    source: str = "supplied"

    def to_json(self):
        return dict(self.__dict__)


FLAT_CONSTANTS = dict(c0=1.0, delta=1.0, C_n=1.5 ** 1.5 * math.exp(-1.5), m=1, n=3, c1=1.0,
                      source="analytic: max exp(-1/t^2)/|t|^3 at t^2 = 2/3")


def estimate_constants(curve: SampledCurve, u, alpha: float, m: int = 1, n: int = 3,
                       delta: Optional[float] = None, samples: int = 20001) -> RadiusConstants:
    """c0, C_n, c1 from samples of z = U^-1 Phi on I cap [-delta, delta]."""
    a, b = curve.interval
    delta = min(-a, b) if delta is None else delta
    t = np.linspace(-delta, delta, samples)
    t = t[t != 0]
    U = rotation_to(u)
    z = curve(t) @ U  # rows are U^T Phi = U^-1 Phi
    c0 = float(np.min(np.linalg.norm(z[:, 1:], axis=1) / np.abs(t) ** m))
    Cn = float(np.max(np.abs(z[:, 0]) / np.abs(t) ** n))
    c1 = float(np.min(np.abs(curve(t)[:, 0]) / np.abs(t) ** m))
    rc = RadiusConstants(c0, delta, Cn, m, n, alpha, c1, "finite samples")
    log.info("estimated radius constants %s", rc)
    return rc


def avoidance_radius(rc: RadiusConstants, holder_norm: float) -> float:
    """r = c1 min{delta, (c0 / (||F|| C_n^alpha))^(1/(n alpha - m))}^m (upper limit)."""
    expo = rc.n * rc.alpha - rc.m
    if expo <= 0:
        raise ValueError("need n * alpha > m")
    inner = (rc.c0 / (holder_norm * rc.C_n ** rc.alpha)) ** (1.0 / expo)
    return rc.c1 * min(rc.delta, inner) ** rc.m


def densest_cell(P: np.ndarray, side: float) -> tuple[np.ndarray, int]:
    """Lower corner of the axis-aligned cell of the given side holding most points."""
    idx = np.floor(P / side).astype(np.int64)
    cells, counts = np.unique(idx, axis=0, return_counts=True)
    best = int(np.argmax(counts))  # np.unique sorts, so ties go to the smallest cell
    return cells[best] * side, int(counts[best])


def separation(gammas: np.ndarray, K: np.ndarray, tol: float, budget: int = 5 * 10 ** 7) -> dict:
    """min over gamma with |gamma| > tol of dist(gamma, K - K).

    dist(gamma, K - K) = min_k dist(k + gamma, K), searched with a k-d tree
    over K, so K - K is never formed.
    """
    norms = np.linalg.norm(gammas, axis=1)
    G = gammas[norms > tol]
    if len(G) * len(K) > budget:
        raise BudgetExceeded(f"{len(G)} x {len(K)} pairs exceeds budget {budget}")
    if len(G) == 0 or len(K) == 0:
        return {"separation": math.inf, "argmin": None, "n_curve": int(len(G)), "n_K": int(len(K))}
    tree = cKDTree(K)
    best, arg = math.inf, None
    for g in G:
        dist, _ = tree.query(K + g, k=1)
        j = int(np.argmin(dist))
        if dist[j] < best:
            best, arg = float(dist[j]), g.tolist()
    diam = float(np.max(np.ptp(K, axis=0))) * math.sqrt(K.shape[1])
    active = int(np.sum(np.linalg.norm(G, axis=1) <= diam))
    return {"separation": best, "argmin": arg, "n_curve": int(len(G)), "n_K": int(len(K)),
            "n_active": active, "diam_bound": diam}


@dataclass
class CertifiedAvoidance:
    u: tuple[Fraction, ...]
    identity_holds: bool
    argument: str = ("u . Phi == 0, so e_1 . U^-1 gamma = 0 for gamma on the curve; "
                     "gamma = U(t - t', F(t) - F(t')) forces t = t' and then gamma = 0")

    def to_json(self):
        return {"status": "CertifiedAvoidance", "u": [str(x) for x in self.u],
                "identity_holds": self.identity_holds, "argument": self.argument}


def exact_avoidance(curve: CurveSpec) -> CertifiedAvoidance:
    """Certify avoidance for a polynomial curve lying in a hyperplane u^perp."""
    v = classify(curve)
    if not isinstance(v.certificate, Dependence):
        raise ValueError("exact mode needs u . Phi == 0 (linearly dependent components)")
    u = v.certificate.u
    ok = combine(u, curve.components).is_zero()
    return CertifiedAvoidance(tuple(u), ok)


@dataclass
class AvoidanceReport:
    mode: str
    curve: str
    separation: float
    details: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return self.separation > 0

    def to_json(self):
        sep = self.separation if math.isfinite(self.separation) else str(self.separation)
        return {"mode": self.mode, "curve": self.curve, "separation": sep,
                "positive": self.positive, "details": self.details, "flags": self.flags}


def curve_samples(curve: SampledCurve, focus: float, n_focus: int = 2000, n_global: int = 2001) -> np.ndarray:
    """Samples over the interval plus a dense set with |t| <= focus."""
    a, b = curve.interval
    t = np.concatenate([np.linspace(a, b, n_global),
                        np.linspace(max(a, -focus), min(b, focus), n_focus)])
    return curve(np.unique(t))


def avoidance_experiment(curve: Union[CurveSpec, SampledCurve], g: Optional[FbmGraphSample] = None,
                         u: Optional[Sequence[float]] = None, r: Optional[float] = None,
                         tol: float = 1e-3, alpha: Optional[float] = None,
                         constants: Optional[RadiusConstants] = None,
                         K: Optional[np.ndarray] = None, budget: int = 5 * 10 ** 7) -> AvoidanceReport:
    """Exact mode for polynomial curves, sampled separation otherwise.

    In sampled mode K is U(graph F_s) cut to the densest cube of diameter r,
    unless an explicit point set K is supplied.
    """
    if isinstance(curve, CurveSpec):
        cert = exact_avoidance(curve)
        return AvoidanceReport("exact", str(curve.to_json()["components"]),
                               math.inf if cert.identity_holds else 0.0,
                               {"certificate": cert.to_json()})
    flags = []
    details: dict = {}
    if K is None:
        if g is None or u is None:
            raise ValueError("sampled mode needs an fBm sample and a direction u")
        if alpha is None:
            alpha = 0.8 * holder_window(g.s, g.d)
        hol = holder_estimate(g, alpha)
        if constants is None:
            constants = estimate_constants(curve, u, alpha)
        else:
            constants.alpha = alpha
        r_max = avoidance_radius(constants, hol.value)
        if r is None:
            r = 0.5 * r_max
        elif r >= r_max:
            flags.append(f"r = {r:.3g} is not below the radius bound {r_max:.3g}")
        U = rotation_to(u)
        P = g.graph_points() @ U.T
        side = r / math.sqrt(g.d)
        lo, count = densest_cell(P, side)
        inside = np.all((P >= lo) & (P < lo + side), axis=1)
        K = P[inside]
        flags.append("Q_r is the densest cell of a coarse partition, not the proof's cube")
        details.update({"alpha": alpha, "holder_norm_estimate": hol.value,
                        "radius_bound": r_max, "r": r, "cell_lower": lo.tolist(),
                        "cell_points": count, "constants": constants.to_json(),
                        "fbm": g.meta(), "grid_step": 1.0 / (g.n - 1)})
        flags.append("sampled separation is limited by the grid step; it corroborates, not certifies")
        focus = 2 * r
    else:
        focus = 2 * float(np.max(np.ptp(K, axis=0))) * math.sqrt(K.shape[1])
    G = curve_samples(curve, focus)
    sep = separation(G, K, tol, budget)
    details.update(sep)
    details["tol"] = tol
    return AvoidanceReport("sampled", curve.name, sep["separation"], details, flags)
