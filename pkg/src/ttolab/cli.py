"""Command-line front end: ttolab {inner,clark,tto,embed,factor,sweep}."""
from __future__ import annotations

import argparse
import json
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clark, embedding, factor, inner, modelspace, paley_wiener, tto
from .errors import ToleranceError

DEFAULT_TOLERANCES = {
    "sarason": 1e-9,
    "clark.isometry": 1e-9,
    "commutator": 1e-9,
    "factor.residual": 1e-6,
    "pw.residual": 1e-4,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    grid_size: int = modelspace.DEFAULT_GRID
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str | None = None
    fmt: str = "json"
    timings: bool = False


# ---------------------------------------------------------------- parsing

def _complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s:
        raise UsageError("empty complex literal")
    s = s.replace("I", "i")
    if s.endswith("i"):
        s = s[:-1] + "j"
        if s in ("j", "+j", "-j"):
            s = s.replace("j", "1j")
    try:
        return complex(s)
    except ValueError:
        raise UsageError(f"bad complex literal {text!r}") from None


def parse_theta(text: str) -> inner.InnerFunction:
    """``z^n``, ``B[a1,a2,...]`` with literals like 0.5-0.2i, or ``@file.json``."""
    text = text.strip()
    if text.startswith("@"):
        try:
            return inner.InnerFunction.from_dict(json.loads(Path(text[1:]).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read theta from {text[1:]}: {exc}") from None
    m = re.fullmatch(r"z(?:\^(\d+))?", text)
    if m:
        n = int(m.group(1) or 1)
        if n < 1:
            raise UsageError("z^n needs n >= 1")
        return inner.monomial(n)
    m = re.fullmatch(r"B\[(.*)\]", text)
    if m:
        body = m.group(1).strip()
        if not body:
            raise UsageError("B[...] needs at least one zero")
        try:
            return inner.make_blaschke([_complex(p) for p in body.split(",")])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"cannot parse theta {text!r}; use z^n or B[a1,...]")


_TERM = re.compile(r"""
    (?P<sign>[+-])?
    (?:(?P<coef>\([^)]*\)|[0-9.]+(?:e[+-]?\d+)?i?|i)\*?)?
    (?P<base>zbar|z)?
    (?:\^(?P<exp>-?\d+))?
""", re.VERBOSE)


def parse_symbol(text: str) -> tto.Symbol:
    """Trigonometric polynomial such as ``z``, ``2*z^3 - zbar``, ``(1+2i)*z^-2 + 0.5``."""
    s = text.replace(" ", "")
    if not s:
        raise UsageError("empty symbol")
    terms = {}
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group("coef") is None and m.group("base") is None):
            raise UsageError(f"cannot parse symbol near {s[pos:]!r}")
        if pos > 0 and m.group("sign") is None:
            raise UsageError(f"missing + or - before {s[pos:]!r}")
        coef = 1.0 if m.group("coef") is None else _complex(m.group("coef").strip("()"))
        if m.group("sign") == "-":
            coef = -coef
        if m.group("base") is None:
            if m.group("exp") is not None:
                raise UsageError("exponent without z")
            k = 0
        else:
            k = int(m.group("exp") or 1)
            if m.group("base") == "zbar":
                k = -k
        terms[k] = terms.get(k, 0) + coef
        pos = m.end()
    K = max(abs(k) for k in terms)
    coeffs = np.zeros(2 * K + 1, dtype=complex)
    for k, c in terms.items():
        coeffs[k + K] += c
    return tto.Symbol.fourier(coeffs)


def parse_measure(text: str, M: modelspace.ModelSpace) -> tto.BoundaryMeasure:
    """``m`` (normalized arclength), ``clark:ALPHA``, ``delta:ANGLE``."""
    if text == "m":
        return tto.BoundaryMeasure.lebesgue(M.grid_size)
    kind, _, arg = text.partition(":")
    if kind == "clark":
        alpha = _complex(arg or "1")
        if abs(abs(alpha) - 1) > 1e-12:
            alpha = alpha / abs(alpha)
        return tto.BoundaryMeasure.from_clark(clark.clark_measure(M.theta, alpha))
    if kind == "delta":
        try:
            angle = float(arg)
        except ValueError:
            raise UsageError(f"bad angle in {text!r}") from None
        return tto.BoundaryMeasure.atoms([np.exp(1j * angle)], [1.0])
    raise UsageError(f"unknown measure {text!r}; use m, clark:ALPHA or delta:ANGLE")


# ---------------------------------------------------------------- output

def fmt_sci(x: float, floor: float = 0.0) -> str:
    """Compact scientific notation: 0.0e0, 1.5e-10. Values with |x| <= floor print as zero."""
    if abs(x) <= floor:
        return "0.0e0"
    mant, exp = f"{x:.1e}".split("e")
    return f"{mant}e{int(exp)}"


def _csv(rows, columns):
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(f"{r[c]:.12g}" if isinstance(r[c], float) else str(r[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, doc, rows=None, columns=None):
    if cfg.fmt == "csv":
        if rows is None:
            raise UsageError("this command has no CSV form; use --format json")
        text = _csv(rows, columns)
    else:
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _summary(cfg: RunConfig, line: str):
    # with --out the summary goes to stdout, otherwise to stderr so the document stays clean
    print(line, file=sys.stdout if cfg.out else sys.stderr)


def _check(cfg: RunConfig, name: str, value: float):
    if value > cfg.tolerances[name]:
        raise ToleranceError(name, f"{value:.3e} exceeds {cfg.tolerances[name]:.1e}")


# ---------------------------------------------------------------- commands

def cmd_inner(args, cfg):
    theta = parse_theta(args.theta)
    doc = {
        "theta": theta.to_dict(),
        "theta_id": theta.theta_id,
        "degree": theta.degree,
        "theta_at_0": [float(np.real(theta(0.0))), float(np.imag(theta(0.0)))],
    }
    if args.eps is not None:
        doc["sublevel_components"] = inner.sublevel_probe(theta, args.eps)
    _emit(cfg, doc, [{"theta_id": theta.theta_id, "degree": theta.degree}], ["theta_id", "degree"])
    _summary(cfg, f"theta_id={theta.theta_id} degree={theta.degree}")


def cmd_clark(args, cfg):
    theta = parse_theta(args.theta)
    M = modelspace.build_space(theta, cfg.grid_size)
    C = clark.clark_measure(theta, _complex(args.alpha))
    dev = clark.clark_isometry_check(M, C)
    _check(cfg, "clark.isometry", dev)
    doc = C.to_dict() | {"theta_id": theta.theta_id, "isometry_deviation": dev}
    rows = [{"angle": float(a), "weight": float(w)} for a, w in zip(C.angles, C.weights)]
    _emit(cfg, doc, rows, ["angle", "weight"])
    _summary(cfg, f"atoms={len(C.angles)} isometry_deviation={fmt_sci(dev)}")


def cmd_tto_build(args, cfg):
    theta = parse_theta(args.theta)
    M = modelspace.build_space(theta, cfg.grid_size)
    A = tto.tto_from_symbol(M, parse_symbol(args.symbol))
    res = tto.sarason_test(A)
    _check(cfg, "sarason", res)
    doc = A.to_dict() | {"sarason_residual": res, "norm": A.norm}
    n = M.degree
    rows = [{"i": i, "j": j, "re": float(A.matrix[i, j].real), "im": float(A.matrix[i, j].imag)}
            for i in range(n) for j in range(n)]
    _emit(cfg, doc, rows, ["i", "j", "re", "im"])
    # residuals at rounding level are reported as an exact zero
    _summary(cfg, f"sarason_residual={fmt_sci(res, 8 * np.finfo(float).eps * max(1.0, A.norm))}")


def cmd_embed(args, cfg):
    theta = parse_theta(args.theta)
    M = modelspace.build_space(theta, cfg.grid_size)
    names = args.measure or ["m", "clark:1"]
    measures = {name: parse_measure(name, M) for name in names}
    if abs(theta(0.0)) <= 1e-12:
        for name, mu in measures.items():
            _check(cfg, "commutator", embedding.commutator_check(M, mu))
    reports = embedding.constants_dashboard(M, measures, seed=cfg.seed)
    rows = [{c: getattr(r, c) for c in embedding.CSV_COLUMNS} for r in reports]
    _emit(cfg, {"reports": rows}, rows, embedding.CSV_COLUMNS)
    worst = max(r.c1_lower - r.c2_theta**2 for r in reports)
    _summary(cfg, f"measures={len(reports)} max(c1_lower-c2^2)={fmt_sci(worst)}")


def cmd_factor_run(args, cfg):
    theta = parse_theta(args.theta)
    M = modelspace.build_space(theta, cfg.grid_size)
    if args.f_file:
        try:
            data = json.loads(Path(args.f_file).read_text())
            f = np.array([complex(re, im) for re, im in data["samples"]])
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read f from {args.f_file}: {exc}") from None
        if len(f) != M.grid_size:
            raise UsageError(f"f has {len(f)} samples, grid has {M.grid_size}")
    else:
        f = factor.random_xa_element(M, np.random.default_rng(cfg.seed))
    res = factor.factorize4(M, f, tol=cfg.tolerances["factor.residual"])
    doc = res.to_dict(include_timings=cfg.timings) | {"theta_id": theta.theta_id, "seed": cfg.seed,
                                                     "ratio": res.ratio}
    row = {"theta_id": theta.theta_id, "pairs": len(res.pairs), "constant": res.constant,
           "f_l1": res.f_l1, "residual_rel": res.residual_rel}
    _emit(cfg, doc, [row], list(row))
    _summary(cfg, f"pairs={len(res.pairs)} residual_rel={fmt_sci(res.residual_rel)} ratio={res.ratio:.4g}")


def cmd_factor_pw(args, cfg):
    f = paley_wiener.random_pw(np.random.default_rng(cfg.seed), args.window)
    maj = paley_wiener.pw_majorant(f)
    res = paley_wiener.pw_factorize(f, tol=cfg.tolerances["pw.residual"])
    row = {"seed": cfg.seed, "window": args.window, "pairs": len(res.pairs), "majorant_ratio": maj.ratio,
           "constant_ratio": res.ratio, "residual_rel": res.residual_rel, "leakage": res.leakage}
    _emit(cfg, row | {"f": f.to_dict()}, [row], list(row))
    _summary(cfg, f"pairs={len(res.pairs)} residual_rel={fmt_sci(res.residual_rel)} ratio={res.ratio:.4g}")


VOLBERG_COLUMNS = ["n", "theta_id", "trials", "max_ratio", "mean_ratio", "max_residual", "max_pairs"]


def _volberg_point(n, trials, seed, idx, grid_size, tol):
    M = modelspace.build_space(inner.monomial(n + 1), grid_size)
    rng = np.random.default_rng([seed, idx])
    ratios, resid, pairs = [], [], []
    for _ in range(trials):
        res = factor.factorize4(M, factor.random_xa_element(M, rng), tol=tol)
        ratios.append(res.ratio)
        resid.append(res.residual_rel)
        pairs.append(len(res.pairs))
    return {"n": n, "theta_id": M.theta.theta_id, "trials": trials, "max_ratio": float(max(ratios)),
            "mean_ratio": float(np.mean(ratios)), "max_residual": float(max(resid)),
            "max_pairs": int(max(pairs))}


def cmd_sweep_volberg(args, cfg):
    ns = [int(v) for v in args.ns.split(",")] if args.ns else \
        [2**k for k in range(2, 64) if 2**k <= args.nmax]
    if not ns:
        raise UsageError("no n values to sweep")
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        futures = [pool.submit(_volberg_point, n, args.trials, cfg.seed, i, cfg.grid_size,
                               cfg.tolerances["factor.residual"]) for i, n in enumerate(ns)]
        rows = [fut.result() for fut in futures]
    _emit(cfg, {"seed": cfg.seed, "rows": rows}, rows, VOLBERG_COLUMNS)
    growth = max(r["max_ratio"] for r in rows) / min(r["max_ratio"] for r in rows)
    _summary(cfg, f"points={len(rows)} max_ratio={max(r['max_ratio'] for r in rows):.4g} growth={growth:.3g}")


# ---------------------------------------------------------------- driver

def _tol_pair(text):
    name, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VAL, got {text!r}")
    try:
        return name, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value in {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=modelspace.DEFAULT_GRID, help="boundary grid size")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="NAME=VAL")
    common.add_argument("--out", help="write the document here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--timings", action="store_true", help="include wall-clock stage timings")

    p = argparse.ArgumentParser(prog="ttolab", description="Truncated Toeplitz operator toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("inner", parents=[common], help="describe an inner function")
    q.add_argument("--theta", required=True)
    q.add_argument("--eps", type=float, help="also count components of {|theta| < eps}")
    q.set_defaults(func=cmd_inner)

    q = sub.add_parser("clark", parents=[common], help="Clark measure sigma_alpha")
    q.add_argument("--theta", required=True)
    q.add_argument("--alpha", default="1")
    q.set_defaults(func=cmd_clark)

    t = sub.add_parser("tto", help="truncated Toeplitz operators").add_subparsers(dest="action", required=True)
    q = t.add_parser("build", parents=[common], help="A_phi from a trigonometric symbol")
    q.add_argument("--theta", required=True)
    q.add_argument("--symbol", required=True)
    q.set_defaults(func=cmd_tto_build)

    q = sub.add_parser("embed", parents=[common], help="embedding constants dashboard")
    q.add_argument("--theta", required=True)
    q.add_argument("--measure", action="append", help="m, clark:ALPHA or delta:ANGLE (repeatable)")
    q.set_defaults(func=cmd_embed)

    fa = sub.add_parser("factor", help="factorizations").add_subparsers(dest="action", required=True)
    q = fa.add_parser("run", parents=[common], help="four-term factorization in K_theta")
    q.add_argument("--theta", required=True)
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--random-f", action="store_true")
    src.add_argument("--f-file", help='JSON {"samples": [[re, im], ...]} on the boundary grid')
    q.set_defaults(func=cmd_factor_run)
    q = fa.add_parser("pw", parents=[common], help="Paley-Wiener factorization of a random f")
    q.add_argument("--window", type=int, default=32)
    q.set_defaults(func=cmd_factor_pw)

    sw = sub.add_parser("sweep", help="parameter sweeps").add_subparsers(dest="action", required=True)
    q = sw.add_parser("volberg", parents=[common], help="factorization constant vs n for theta = z^(n+1)")
    q.add_argument("--nmax", type=int, default=64)
    q.add_argument("--ns", help="comma-separated n values (overrides --nmax)")
    q.add_argument("--trials", type=int, default=20)
    q.add_argument("--workers", type=int, default=4)
    q.set_defaults(func=cmd_sweep_volberg)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    tols = dict(DEFAULT_TOLERANCES)
    for name, val in args.tol:
        if name not in tols:
            print(f"ttolab: unknown tolerance {name!r}; known: {', '.join(sorted(tols))}", file=sys.stderr)
            return 1
        tols[name] = val
    cfg = RunConfig(args.seed, args.grid, tols, args.out, args.format, args.timings)
    t0 = time.perf_counter()
    try:
        args.func(args, cfg)
    except UsageError as exc:
        print(f"ttolab: {exc}", file=sys.stderr)
        return 1
    except ToleranceError as exc:
        print(f"ttolab: tolerance failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ttolab: {exc}", file=sys.stderr)
        return 1
    if cfg.timings:
        print(f"elapsed={time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
