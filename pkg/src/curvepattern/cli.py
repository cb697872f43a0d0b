"""Command-line front end.

Every subcommand builds a report dict with an ``audit`` list of checked
inequalities (each with lhs, rhs, margin).  Exit status is 2 exactly when
some audited margin is negative, 1 on usage or input errors, 0 otherwise.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from fractions import Fraction
from importlib import metadata
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import counterexample as cx
from .anisotropic.boxes import BoxFormatError, BoxSet, cantor_set, full_set, random_set
from .anisotropic.content import content, content_bruteforce, content_table, frostman
from .anisotropic.energy import energy
from .anisotropic.pipeline import build_pipeline_measure
from .classifier import classify, verify_certificate
from .constants import compute_bundle, verify_C
from .curvecore import CurveFormatError, CurveSpec, check_standard_form, parse_curve_spec, standardize
from .measures import (CurveMeasureParams, ball_sweep, configuration_integral, curve_measure,
                       pattern_witness, point_mass, uniform_cube, verify_decay)
from .polyparse import PolySyntaxError

log = logging.getLogger("curvepattern")

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2

SPEC_GRAMMAR = """curve spec grammar:
  d=<int>; I=[a,b]; phi1=<poly in t>; ...; phid=<poly in t>
  optional: jet=<order>; remainder=<rational>
  or the JSON mirror {"d": 2, "I": ["0", "1"], "components": ["t", "t^2"]}
box set files: header 'boxset d= n= depth= root_j= root=' then one anchor per line, or JSON"""


class InputError(Exception):
    pass


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _check(constraint: str, lhs: float, rhs: float, sense: str = "<=", tol: float = 0.0) -> dict:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs if sense == "<=" else lhs - rhs
    return {"constraint": constraint, "lhs": lhs, "rhs": rhs, "margin": margin,
            "satisfied": margin >= 0, "tolerance": tol}


def _bool_check(constraint: str, ok: bool) -> dict:
    return {"constraint": constraint, "lhs": None, "rhs": None,
            "margin": 0.0 if ok else -1.0, "satisfied": bool(ok), "tolerance": 0.0}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# inputs ---------------------------------------------------------------------

def _read(path: Optional[str], what: str) -> str:
    if not path:
        raise InputError(f"--spec FILE is required ({what})")
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e


def load_curve(args) -> CurveSpec:
    text = _read(args.spec, "curve spec")
    try:
        return parse_curve_spec(text)
    except (CurveFormatError, PolySyntaxError, ValueError, KeyError) as e:
        raise InputError(f"bad curve spec: {e}\n\n{SPEC_GRAMMAR}") from e


def _n_vec(text: str) -> tuple[int, ...]:
    try:
        n = tuple(int(x) for x in text.split(","))
    except ValueError as e:
        raise InputError(f"bad --n-vec {text!r}") from e
    if any(x < 1 for x in n):
        raise InputError("--n-vec entries must be positive")
    return n


def load_boxset(args) -> BoxSet:
    if args.spec:
        try:
            return BoxSet.load(args.spec)
        except (OSError, BoxFormatError, ValueError, KeyError) as e:
            raise InputError(f"bad box set file: {e}\n\n{SPEC_GRAMMAR}") from e
    n = _n_vec(args.n_vec)
    if args.generate == "full":
        return full_set(n, args.depth)
    if args.generate == "cantor":
        keep = [int(x) for x in args.keep.split(",")]
        return cantor_set(n, args.depth, keep)
    if args.seed is None:
        raise InputError("--generate random needs --seed")
    return random_set(n, args.depth, np.random.default_rng(args.seed), args.p)


def _bundle(args, d: int, N: int):
    return compute_bundle(d, N, args.profile, demo_T=args.demo_T)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as e:
        raise InputError(f"bad number list {text!r}") from e


# commands -------------------------------------------------------------------

def cmd_classify(args) -> dict:
    c = load_curve(args)
    v = classify(c)
    ok = verify_certificate(c, v)
    return {"outputs": {"curve": c.to_json(), "verdict": v.to_json(), "status": v.status},
            "audit": [_bool_check("certificate re-verifies", ok)]}


def cmd_standardize(args) -> dict:
    c = load_curve(args)
    std = standardize(c)
    problems = check_standard_form(std, c)
    return {"outputs": {"standard_form": std.to_json(), "K_N": std.K_N, "problems": problems},
            "audit": [_bool_check("standard form (ordering, coefficients, c1/c2 bounds)", not problems)]}


def cmd_constants(args) -> dict:
    if args.spec:
        std = standardize(load_curve(args))
        d, N = std.d, std.type_N
    else:
        d, N = args.d, args.N
    b = _bundle(args, d, N)
    audit = [e.to_json() for e in b.audit]
    out = {"bundle": b.to_json()}
    if args.verify_C:
        ok = verify_C(b)
        out["C_reverified"] = ok
        audit.append(_bool_check("C agrees with 30-digit recomputation", ok))
    return {"outputs": out, "audit": audit}


def cmd_verify_decay(args) -> dict:
    std = standardize(load_curve(args))
    b = _bundle(args, std.d, std.type_N)
    from .measures import measure_scale_J

    J = measure_scale_J(std)
    j_list = [J + int(x) for x in _floats(args.j_offsets)]
    rep = verify_decay(std, b, j_list, _floats(args.c), r_max=args.ximax,
                       n_r=args.n_r, n_dir=args.n_dir)
    rep["tolerance"] = "grid sup over sampled (j, c, xi)"
    audit = [_check("sup |pi_hat|(1+|xi|)^(1/N) <= L_N", rep["max_ratio"], rep["L_N"])]
    plot = ("xi_norm,ratio", list(zip(rep["profile"]["xi"], rep["profile"]["ratio"])))
    return {"outputs": rep, "audit": audit, "plot": plot}


def cmd_verify_ball(args) -> dict:
    std = standardize(load_curve(args))
    rep = ball_sweep(std)
    audit = [_check("pi(B(0;r)) >= r / (2 d K_N), worst relative slack", rep["worst_relative_slack"], 0.0, ">=")]
    plot = ("j,r,c,mass,bound", [(r["j"], r["r"], r["c"], r["mass"], r["bound"]) for r in rep["rows"]])
    return {"outputs": rep, "audit": audit, "plot": plot}


def cmd_config_integral(args) -> dict:
    std = standardize(load_curve(args))
    if args.mu == "uniform":
        mu = uniform_cube(std.d, args.k)
    else:
        mu = point_mass([0.5] * std.d)
    pi = curve_measure(CurveMeasureParams(std, args.j, args.c, args.n_quad))
    coarse = curve_measure(CurveMeasureParams(std, args.j, args.c, args.n_quad // 2))
    rep = configuration_integral(mu, pi, pi_coarse=coarse)
    out = rep.to_json()
    if rep.quad_error is not None and rep.proxy > 2 * rep.quad_error[-1]:
        w = pattern_witness(mu, pi, rep.deltas[-1])
        out["witness"] = w.to_json()
    plot = ("delta,value,running_min", list(zip(rep.deltas, rep.values, rep.running_min)))
    return {"outputs": out, "audit": [], "plot": plot}


def cmd_content(args) -> dict:
    E = load_boxset(args)
    s = Fraction(args.s)
    val = content(E, s)
    out = {"n_vec": list(E.n_vec), "depth": E.depth, "leaves": len(E), "s": str(s),
           "content": val.to_json(), "content_float": float(val),
           "cover": [b.to_json() for b in content_table(E, s).optimal_cover()]}
    audit = []
    if args.bruteforce and len(E) > 22:
        out["bruteforce"] = "skipped: more than 22 leaves"
    elif args.bruteforce:
        bf = content_bruteforce(E, s)
        out["bruteforce"] = bf.to_json()
        audit.append(_bool_check("tree DP equals brute-force cover minimum", bf == val))
    return {"outputs": out, "audit": audit}


def cmd_frostman(args) -> dict:
    E = load_boxset(args)
    cert = frostman(E, Fraction(args.s))
    out = cert.to_json()
    audit = [_check("||theta|| >= content", float(cert.content_lb), float(cert.total), "<="),
             _bool_check("theta(Q) <= l(Q)^s on every tree box (exact)", cert.max_ratio <= 1),
             _bool_check("||theta|| >= content (exact)", cert.total >= cert.content_lb)]
    if args.sigma is not None:
        rep = energy(cert.measure(), args.sigma, float(cert.s), E.S, args.L)
        out["energy"] = rep
        if "whitney_bound" in rep:
            audit.append(_check("I_sigma(theta) <= L E(s - sigma - S + d)", rep["value"], rep["whitney_bound"]))
    return {"outputs": out, "audit": audit}


def cmd_pipeline(args) -> dict:
    K = load_boxset(args)
    N = max(K.n_vec)
    if K.d > N:
        raise InputError("pipeline needs max(n_vec) >= d")
    b = _bundle(args, K.d, N)
    curve = None
    if args.curve:
        try:
            curve = standardize(parse_curve_spec(Path(args.curve).read_text()))
        except (OSError, CurveFormatError, PolySyntaxError) as e:
            raise InputError(f"bad --curve: {e}") from e
    res = build_pipeline_measure(K, Fraction(args.s), b, curve)
    c = res.certificates
    audit = [e.to_json() for e in b.audit]
    audit += [_bool_check("||nu|| = l(Q)^s (exact)", c["nu_mass_equals_ell_Q_s"]),
              _check("max mu(Q')/l(Q')^s <= 4", c["max_mu_ratio_float"], 4.0),
              _bool_check("max mu(Q')/l(Q')^s <= 4 (exact)", c["frostman_4_ok"]),
              _bool_check("mu = phi on generation-T boxes (exact)", c["equality_on_cubes"]),
              _bool_check("bump weights sum to 1 (exact)", c["weights_sum_to_one"])]
    return {"outputs": res.to_json(), "audit": audit}


def cmd_fbm(args) -> dict:
    if args.seed is None:
        raise InputError("fbm needs --seed")
    g = cx.fbm_graph(args.s, args.d, args.n, args.seed)
    out = {"sample": g.meta()}
    plot = None
    if g.n >= 2 ** 14:
        dim = cx.graph_dim_estimate(g)
        out["box_dimension"] = dim.to_json()
        plot = ("eps,count", [(2.0 ** -k, c) for k, c in zip(dim.ks, dim.counts)])
    alpha = args.alpha if args.alpha is not None else 0.8 * cx.holder_window(args.s, args.d)
    h = cx.holder_estimate(g, alpha)
    out["holder"] = {"alpha": alpha, "seminorm": h.seminorm, "sup_norm": h.sup_norm, "value": h.value}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        data, side = g.save(Path(args.out) / f"fbm_seed{args.seed}")
        out["files"] = [str(data), str(side)]
    return {"outputs": out, "audit": [], "plot": plot}


def cmd_avoid(args) -> dict:
    if args.spec:
        c = load_curve(args)
        try:
            cert = cx.exact_avoidance(c)
        except ValueError as e:
            raise InputError(str(e)) from e
        return {"outputs": cert.to_json(), "audit": [_bool_check("u . Phi == 0 (exact)", cert.identity_holds)]}
    if args.seed is None:
        raise InputError("sampled avoidance needs --seed")
    g = cx.fbm_graph(args.s, 2, args.n, args.seed)
    audit = []
    if args.curve == "flat":
        rc = cx.RadiusConstants(**cx.FLAT_CONSTANTS, alpha=0.4)
        rep = cx.avoidance_experiment(cx.flat_curve(), g, u=(0.0, 1.0), tol=args.tol,
                                      constants=rc, alpha=args.alpha)
        audit.append(_check("sampled separation > 0", rep.separation, 0.0, ">="))
        if rep.separation == 0:
            audit[-1]["margin"], audit[-1]["satisfied"] = -1.0, False
    else:
        xs = np.arange(args.grid) / args.grid
        K = np.array([[a, b] for a in xs for b in xs])
        rep = cx.avoidance_experiment(cx.parabola_curve(), K=K, tol=args.tol)
    return {"outputs": rep.to_json(), "audit": audit}


COMMANDS: dict[str, Callable] = {
    "classify": cmd_classify, "standardize": cmd_standardize, "constants": cmd_constants,
    "verify-decay": cmd_verify_decay, "verify-ball": cmd_verify_ball,
    "config-integral": cmd_config_integral, "content": cmd_content, "frostman": cmd_frostman,
    "pipeline": cmd_pipeline, "fbm": cmd_fbm, "avoid": cmd_avoid,
}


# parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--spec", metavar="FILE", help="curve spec or box set file")
    p.add_argument("--profile", choices=("rigorous", "demo"), default="rigorous")
    p.add_argument("--seed", type=int, metavar="U64", help="seed for all randomness")
    p.add_argument("--out", metavar="DIR", help="write <command>.json and plot CSV here")
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.add_argument("--demo-T", dest="demo_T", type=int, default=2, help="T for the demo profile")


def _boxset_args(p):
    p.add_argument("--generate", choices=("full", "cantor", "random"), default="full")
    p.add_argument("--n-vec", default="1,2", help="comma separated, e.g. 1,2")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--keep", default="0,3", help="kept child indices for cantor sets")
    p.add_argument("--p", type=float, default=0.5, help="keep probability for random sets")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvepattern", description=__doc__,
                                     epilog=SPEC_GRAMMAR,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    ps = {name: sub.add_parser(name, epilog=SPEC_GRAMMAR,
                               formatter_class=argparse.RawDescriptionHelpFormatter)
          for name in COMMANDS}
    for p in ps.values():
        _common(p)
    ps["constants"].add_argument("--d", type=int, default=2)
    ps["constants"].add_argument("--N", type=int, default=2)
    ps["constants"].add_argument("--verify-C", action="store_true")
    p = ps["verify-decay"]
    p.add_argument("--ximax", type=float, default=1e4)
    p.add_argument("--j-offsets", default="0,2", help="scales j = J(Phi) + offset")
    p.add_argument("--c", default="1,0.001", help="curve parameters c in (0, 1]")
    p.add_argument("--n-r", type=int, default=24)
    p.add_argument("--n-dir", type=int, default=64)
    p = ps["config-integral"]
    p.add_argument("--mu", choices=("uniform", "point"), default="uniform")
    p.add_argument("--k", type=int, default=5, help="uniform measure on 2^-k boxes")
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--c", type=float, default=1e-3)
    p.add_argument("--n-quad", type=int, default=2048)
    for name in ("content", "frostman", "pipeline"):
        _boxset_args(ps[name])
        ps[name].add_argument("--s", default="3/2", help="exponent, rational")
    ps["content"].add_argument("--bruteforce", action="store_true")
    ps["frostman"].add_argument("--sigma", type=float)
    ps["frostman"].add_argument("--L", type=float, default=1.0)
    ps["pipeline"].add_argument("--curve", metavar="FILE", help="curve spec for the J(Phi) check")
    p = ps["fbm"]
    p.add_argument("--s", type=float, default=1.5)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=2 ** 16)
    p.add_argument("--alpha", type=float)
    p = ps["avoid"]
    p.add_argument("--curve", choices=("flat", "parabola"), default="flat",
                   help="sampled curve when no --spec is given")
    p.add_argument("--s", type=float, default=1.5)
    p.add_argument("--n", type=int, default=2 ** 16)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--alpha", type=float)
    p.add_argument("--grid", type=int, default=64, help="grid K for the parabola run")
    return parser


# reports ----------------------------------------------------------------------

def emit_plotdata(report: dict) -> str:
    """CSV text for the report's plot series; header only when there are no rows."""
    plot = report.get("plot")
    if not plot:
        return ""
    header, rows = plot
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header.split(","))
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _digest(args) -> str:
    h = hashlib.sha256()
    for k, v in sorted(vars(args).items()):
        h.update(f"{k}={v};".encode())
    for key in ("spec", "curve"):
        path = getattr(args, key, None)
        if path and Path(str(path)).is_file():
            h.update(Path(path).read_bytes())
    return h.hexdigest()


def run(argv=None) -> tuple[int, dict]:
    """Parse and execute; returns (exit code, report).  The report is empty on errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return (EXIT_OK if e.code == 0 else EXIT_INPUT), {}
    t0 = time.perf_counter()
    try:
        body = COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT, {}
    except (ValueError, ArithmeticError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT, {}
    audit = body.get("audit", [])
    violated = any(a["margin"] is not None and a["margin"] < 0 for a in audit)
    report = {"command": args.command, "inputs_digest": _digest(args),
              "profile": args.profile, "seed": args.seed,
              "outputs": body.get("outputs", {}), "audit": audit,
              "violated": violated, "timing_s": time.perf_counter() - t0,
              "tool_version": tool_version(),
              "options": {"out": args.out, "json": args.json}}
    if body.get("plot") is not None:
        report["plot"] = body["plot"]
    return (EXIT_VIOLATION if violated else EXIT_OK), report


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    code, report = run(argv)
    if not report:
        return code
    opts = report.pop("options")
    plot_csv = emit_plotdata(report)
    report.pop("plot", None)
    text = json.dumps(_jsonable(report), indent=2)
    if opts["out"]:
        out = Path(opts["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{report['command']}.json").write_text(text + "\n")
        if "plot" in report or plot_csv:
            (out / f"{report['command']}_plot.csv").write_text(plot_csv)
    if opts["json"]:
        print(text)
    else:
        _summary(json.loads(text))
    return code


def _summary(rep: dict):
    print(f"{rep['command']}: {'VIOLATED' if rep['violated'] else 'ok'} "
          f"({rep['timing_s']:.2f}s, profile {rep['profile']})")
    out = rep["outputs"]
    for key in ("status", "content_float", "separation", "max_ratio", "liminf_proxy"):
        if isinstance(out, dict) and key in out:
            print(f"  {key}: {out[key]}")
    for a in rep["audit"]:
        mark = "ok " if a["satisfied"] else "BAD"
        print(f"  [{mark}] {a['constraint']} (margin {a['margin']})")
