"""Command-line front end: ``moreau-lab <command> [options]``.

Every command prints one JSON payload (or CSV table) and exits with

* 0 on success,
* 2 on invalid input (bad function spec, parameter out of range, non-convex PLQ),
* 3 when an oracle prox solve runs out of iterations,
* 4 when a verification step fails.

Errors are written to stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import catalog
from ._numeric import as_number, fmt, to_json_number
from .analysis import (
    annulus_gap,
    coercivity_test,
    em_openness_radius,
    epi_convergence_probe,
    strong_convexity_report,
    strong_minimizer_certificate,
)
from .metric import aw_distance
from .moreau import ProxBudgetExhausted, envelope_plq, prox_oracle, prox_oracle_batch, prox_plq
from .oracle import OracleConvexFunction
from .plq import NotConvexError, PLQFunction, conjugate, evaluate
from .strongify import StrongifyVerificationError, meagre_family_member, strongify

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_VERIFICATION = 4


class ValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# -- input parsing ---------------------------------------------------------------

def parse_function(spec: str):
    """Resolve ``catalog:NAME``, a bare catalog name, ``@file.json`` or inline JSON."""
    text = spec.strip()
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read function file {spec[1:]!r}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed function JSON: {exc.msg}") from None
        try:
            return PLQFunction.from_json(data)
        except NotConvexError as exc:
            raise ValidationError(f"function is not convex: {exc.report.message}") from None
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ValidationError(f"invalid PLQ function: {exc}") from None
    try:
        return catalog.get(text)
    except KeyError as exc:
        raise ValidationError(exc.args[0]) from None


def _number(text: str):
    try:
        return as_number(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"not a number: {text!r}") from None


def _require_plq(f, command: str) -> PLQFunction:
    if not isinstance(f, PLQFunction):
        raise ValidationError(f"{command} needs a PLQ function, got oracle {f.name!r}")
    return f


def _require_convex_oracle(f: OracleConvexFunction, command: str):
    if not f.convexity_declared:
        raise ValidationError(f"{command}: {f.name} is not declared convex")


def _describe(f) -> object:
    return f.to_json()


# -- commands -----------------------------------------------------------------------

def cmd_eval(args, params):
    f = parse_function(args.function)
    xs = [_number(x) for x in args.x]
    if isinstance(f, PLQFunction):
        rows = [{"x": to_json_number(x), "value": to_json_number(evaluate(f, x))} for x in xs]
    else:
        vals = f(np.array([float(x) for x in xs]))
        rows = [{"x": to_json_number(x), "value": to_json_number(float(v))} for x, v in zip(xs, vals)]
    return {"function": _describe(f), "points": rows}, ("x", "value"), rows


def _point_rows(fn, xs, key):
    return [{"x": to_json_number(x), key: to_json_number(fn(x))} for x in xs]


def cmd_prox(args, params):
    f = parse_function(args.function)
    xs = [_number(x) for x in args.at]
    if isinstance(f, PLQFunction):
        P = prox_plq(f)
        rows = [{"segment_index": j, "lower": lo, "upper": hi, "slope": s, "intercept": t}
                for j, (lo, hi, (s, t)) in enumerate(P.intervals())]
        payload = {"function": _describe(f), "prox": P.to_json()}
        if xs:
            payload["values"] = _point_rows(P, xs, "prox")
        return payload, ("segment_index", "lower", "upper", "slope", "intercept"), rows
    _require_convex_oracle(f, "prox")
    if not xs:
        raise ValidationError("prox of an oracle needs query points (--at)")
    reports = [prox_oracle(f, float(x), args.tol).to_json() for x in xs]
    cols = ("x", "y", "envelope_value", "envelope_lower", "envelope_upper", "iterations", "residual", "tol")
    return {"function": _describe(f), "reports": reports}, cols, reports


def cmd_envelope(args, params):
    f = parse_function(args.function)
    xs = [_number(x) for x in args.at]
    if isinstance(f, PLQFunction):
        env = envelope_plq(f)
        payload = {"function": _describe(f), "envelope": env.to_json()}
        if xs:
            payload["values"] = _point_rows(lambda x: evaluate(env, x), xs, "envelope")
        return payload, ("piece_index", "lower", "upper", "a", "c", "d"), env.piece_table()
    _require_convex_oracle(f, "envelope")
    if not xs:
        raise ValidationError("envelope of an oracle needs query points (--at)")
    reports = [prox_oracle(f, float(x), args.tol).to_json() for x in xs]
    rows = [{"x": r["x"], "envelope": r["envelope_value"], "lower": r["envelope_lower"],
             "upper": r["envelope_upper"]} for r in reports]
    return {"function": _describe(f), "values": rows}, ("x", "envelope", "lower", "upper"), rows


def cmd_conjugate(args, params):
    f = _require_plq(parse_function(args.function), "conjugate")
    g = conjugate(f)
    return ({"function": _describe(f), "conjugate": g.to_json()},
            ("piece_index", "lower", "upper", "a", "c", "d"), g.piece_table())


def cmd_distance(args, params):
    f, g = parse_function(args.f), parse_function(args.g)
    for h in (f, g):
        if isinstance(h, OracleConvexFunction):
            _require_convex_oracle(h, "distance")
    est = aw_distance(f, g, params["accuracy"])
    payload = est.to_json()
    payload["f"], payload["g"] = _describe(f), _describe(g)
    rows = [dict(t.to_json(), lower=t.lower, upper=t.upper) for t in est.terms]
    return payload, ("i", "sup", "lower", "upper", "exact"), rows


def cmd_strongify(args, params):
    f = _require_plq(parse_function(args.function), "strongify")
    eps = params["eps"]
    if eps is None:
        raise ValidationError("strongify needs --eps")
    if not 0 < eps < 1:
        raise ValidationError(f"--eps must lie in (0, 1), got {eps}")
    plan = strongify(f, Fraction(repr(eps)), verify_accuracy=Fraction(repr(params["accuracy"])))
    return plan.to_json(), None, None


def cmd_certify_min(args, params):
    f = parse_function(args.function)
    v = strong_minimizer_certificate(f, params["M"])
    return v.to_json(), None, None


def cmd_certify_strong_convexity(args, params):
    f = parse_function(args.function)
    return strong_convexity_report(f).to_json(), None, None


def cmd_coercive(args, params):
    f = _require_plq(parse_function(args.function), "coercive")
    return coercivity_test(f).to_json(), None, None


def cmd_certify_annulus(args, params):
    f = _require_plq(parse_function(args.function), "certify-annulus")
    m = params["m"] or 1
    z = _number(args.z)
    try:
        cert = annulus_gap(f, z, m, args.which)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    out = {"certificate": cert.to_json()}
    if args.which == "E" and cert.member:
        out["openness"] = em_openness_radius(f, cert).to_json()
    return out, None, None


def cmd_meagre(args, params):
    f = _require_plq(parse_function(args.function), "meagre")
    m = params["m"]
    if m is None:
        raise ValidationError("meagre needs --m")
    return meagre_family_member(f, m).to_json(), None, None


def cmd_epi_probe(args, params):
    c = _number(args.shift)
    if args.k_max < 1:
        raise ValidationError("--k-max must be at least 1")
    ks = range(1, args.k_max + 1)
    if args.family == "shift":
        base = _require_plq(parse_function(args.target or "half_square"), "epi-probe")
        seq = lambda k: base.shift(Fraction(1, k))  # noqa: E731
        target, desc = base, "f_k = f + 1/k"
    else:
        center = _number(args.center)
        seq = lambda k: PLQFunction((), [(0, 0, c)], (center - Fraction(1, k), center + Fraction(1, k)))  # noqa: E731
        target = PLQFunction((), [(0, 0, c)], (center, center))
        desc = f"f_k = indicator of [x - 1/k, x + 1/k] + c, x = {fmt(center)}, c = {fmt(c)}"
    rep = epi_convergence_probe(seq, target, args.balls, args.tol, ks=ks, description=desc)
    payload = rep.to_json()
    rows = [{"k": k, **{f"ball_{i}": rep.deviations[i][n] for i in rep.balls}} for n, k in enumerate(rep.ks)]
    return payload, ("k",) + tuple(f"ball_{i}" for i in rep.balls), rows


def _grid(params):
    lo, hi, step = (Fraction(repr(params[k])) for k in ("grid_min", "grid_max", "grid_step"))
    if step <= 0:
        raise ValidationError("--grid-step must be positive")
    n = int((hi - lo) // step) + 1 if hi >= lo else 0
    if n < 2:
        raise ValidationError("grid must contain at least 2 points")
    return [lo + k * step for k in range(n)]


def cmd_plot(args, params):
    f = parse_function(args.function)
    xs = _grid(params)
    if isinstance(f, PLQFunction):
        env, P = envelope_plq(f), prox_plq(f)
        rows = [{"x": x, "f": evaluate(f, x), "envelope": evaluate(env, x), "prox": P(x)} for x in xs]
        cols = ("x", "f", "envelope", "prox")
    else:
        arr = np.array([float(x) for x in xs])
        fv = f(arr)
        if f.convexity_declared:
            out = prox_oracle_batch(f, arr, tol=args.tol)
            rows = [{"x": x, "f": float(a), "envelope": float(e), "prox": float(p)}
                    for x, a, e, p in zip(xs, fv, out["value"], out["y"])]
            cols = ("x", "f", "envelope", "prox")
        else:
            # no certified prox for a non-convex oracle
            rows = [{"x": x, "f": float(a)} for x, a in zip(xs, fv)]
            cols = ("x", "f")
    series = {c: [to_json_number(r[c]) for r in rows] for c in cols}
    return {"function": _describe(f), "series": series, "rows": len(rows)}, cols, rows


COMMANDS = {
    "eval": cmd_eval,
    "prox": cmd_prox,
    "envelope": cmd_envelope,
    "conjugate": cmd_conjugate,
    "distance": cmd_distance,
    "strongify": cmd_strongify,
    "certify-min": cmd_certify_min,
    "certify-strong-convexity": cmd_certify_strong_convexity,
    "coercive": cmd_coercive,
    "certify-annulus": cmd_certify_annulus,
    "meagre": cmd_meagre,
    "epi-probe": cmd_epi_probe,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--accuracy", type=float, default=1e-6)
    common.add_argument("--eps", type=float, default=None)
    common.add_argument("--m", type=int, default=None)
    common.add_argument("--M", type=int, default=8)
    common.add_argument("--grid-min", type=float, default=-3.0)
    common.add_argument("--grid-max", type=float, default=3.0)
    common.add_argument("--grid-step", type=float, default=0.01)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", type=Path, default=None)

    parser = _Parser(prog="moreau-lab", description="Moreau envelope toolkit for convex functions.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_text, *function_args):
        p = sub.add_parser(name, parents=[common], help=help_text)
        for a in function_args:
            p.add_argument(a, help="catalog:NAME, @file.json or inline PLQ JSON")
        return p

    p = add("eval", "evaluate f at points", "function")
    p.add_argument("x", nargs="+")
    for name, text in (("prox", "proximal mapping"), ("envelope", "Moreau envelope")):
        p = add(name, text, "function")
        p.add_argument("--at", nargs="*", default=[])
        p.add_argument("--tol", type=float, default=1e-10)
    add("conjugate", "Fenchel conjugate", "function")
    add("distance", "envelope distance d(f, g)", "f", "g")
    add("strongify", "strongly convex approximation within --eps", "function")
    add("certify-min", "strong minimizer certificates for m = 1..M", "function")
    add("certify-strong-convexity", "modulus of strong convexity", "function")
    add("coercive", "coercivity test", "function")
    p = add("certify-annulus", "annulus gap at z and its openness radius", "function")
    p.add_argument("--z", default="0")
    p.add_argument("--which", choices=("U", "E"), default="E")
    add("meagre", "is e_1 f - x^2/(2m) convex", "function")
    p = sub.add_parser("epi-probe", parents=[common], help="envelope convergence of a function family")
    p.add_argument("--family", choices=("shift", "shrinking-indicator"), required=True)
    p.add_argument("--target", default=None, help="base function for the shift family")
    p.add_argument("--center", default="0")
    p.add_argument("--shift", default="0")
    p.add_argument("--balls", type=int, nargs="+", default=[1])
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--k-max", type=int, default=1000)
    p = add("plot", "x, f, envelope, prox on a grid", "function")
    p.add_argument("--tol", type=float, default=1e-8)
    return parser


def _params(args) -> dict:
    if not args.accuracy > 0:
        raise ValidationError("--accuracy must be positive")
    if args.M < 1:
        raise ValidationError("--M must be at least 1")
    if args.m is not None and args.m < 1:
        raise ValidationError("--m must be at least 1")
    return {"accuracy": args.accuracy, "eps": args.eps, "m": args.m, "M": args.M,
            "grid_min": args.grid_min, "grid_max": args.grid_max, "grid_step": args.grid_step,
            "format": args.format}


def _csv(cols, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, float, Fraction)) and not isinstance(v, bool):
        return fmt(v)
    if isinstance(v, str) and v in ("inf", "-inf"):
        return v
    try:
        return fmt(as_number(v))
    except (ValueError, TypeError, ZeroDivisionError):
        return str(v)


def run(argv=None) -> tuple[int, str, str]:
    """Execute a command; returns ``(exit_code, stdout_text, stderr_text)``."""
    try:
        args = build_parser().parse_args(argv)
        params = _params(args)
        payload, cols, rows = COMMANDS[args.command](args, params)
        if args.format == "csv":
            if cols is None:
                raise ValidationError(f"{args.command} has no tabular form; use --format json")
            text = _csv(cols, rows)
        else:
            text = json.dumps({"command": args.command, "params": params, "result": payload}) + "\n"
        if args.out is not None:
            args.out.write_text(text)
            return EXIT_OK, "", ""
        return EXIT_OK, text, ""
    except ValidationError as exc:
        return EXIT_VALIDATION, "", _error("validation", str(exc))
    except NotConvexError as exc:
        return EXIT_VALIDATION, "", _error("validation", exc.report.message)
    except ProxBudgetExhausted as exc:
        return EXIT_BUDGET, "", _error("budget_exhausted", str(exc), residual=exc.residual)
    except (StrongifyVerificationError, AssertionError) as exc:
        return EXIT_VERIFICATION, "", _error("verification_failed", str(exc))
    except ValueError as exc:
        return EXIT_VALIDATION, "", _error("validation", str(exc))


def _error(kind: str, message: str, **extra) -> str:
    return json.dumps({"error": kind, "message": message, **extra}) + "\n"


def main(argv=None) -> int:
    code, out, err = run(argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
