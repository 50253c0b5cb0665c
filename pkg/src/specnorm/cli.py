"""Command-line front end.

    specnorm table1 --digits 6
    specnorm norm --family hermite --theta 0.1pi --n 100
    specnorm bounds --family hermite --theta 0.15pi --n-max 200 --stride 2
    specnorm growth --family hermite --theta pi/16 --n-max 300
    specnorm expansion --theta 0.1pi --t 0
    specnorm verify --family laguerre --theta 0.6 --n-max 40
    specnorm semiclassical --theta 0.1pi --n 100

Angles accept radians (``0.19635``), multiples of pi (``0.1pi``) and
fractions of pi (``pi/16``, ``3pi/16``).

Exit codes: 0 ok, 2 usage, 3 sector violation, 4 precision budget,
5 a computed norm violates a proven bound.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from functools import partial
from pathlib import Path

import mpmath
from mpmath import mp

from . import __version__
from .asymptotics import (
    expansion_terms,
    growth_report,
    log_gaussian_ratio,
    semiclassical_mu,
    semiclassical_params,
)
from .numerics import PrecisionBudgetError, PrecisionPolicy, agreement_digits, parallel_map
from .projnorm import UnsupportedParity, norm_value, quadrature_norm_oracle, sweep_cell
from .weights import (
    FULL_LINE,
    HALF_LINE,
    Angle,
    GammaBeta,
    PolyExp,
    SectorViolation,
    check_sector,
    hermite,
    laguerre,
    to_mpf,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SECTOR = 3
EXIT_BUDGET = 4
EXIT_VIOLATION = 5

TABLE1_ROWS = ("0", "0.025", "0.05", "0.1", "0.15", "0.2")
DEFAULT_DIGITS = 30

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_PI_RE = re.compile(rf"^([+-]?)\s*({_NUM})?\s*\*?\s*pi\s*(?:/\s*(\d+))?$")
_FRAC_RE = re.compile(rf"^([+-]?{_NUM})\s*/\s*(\d+)$")


def parse_angle(text: str) -> Angle:
    """Parse ``0.19635`` (radians), ``0.1pi``, ``pi/16`` or ``3pi/16``."""
    s = text.strip().lower().replace("π", "pi")
    m = _PI_RE.match(s)
    if m:
        sign, num, den = m.groups()
        value = Fraction(num) if num else Fraction(1)
        if den:
            if int(den) == 0:
                raise ValueError(f"zero denominator in angle {text!r}")
            value /= int(den)
        return Angle(-value if sign == "-" else value, pi_units=True)
    m = _FRAC_RE.match(s)
    if m:
        if int(m.group(2)) == 0:
            raise ValueError(f"zero denominator in angle {text!r}")
        return Angle(Fraction(m.group(1)) / int(m.group(2)))
    if re.fullmatch(rf"[+-]?{_NUM}", s):
        return Angle(Fraction(s))
    raise ValueError(f"cannot parse angle {text!r}")


def _angle_type(text: str) -> Angle:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def format_number(x, digits: int) -> str:
    """``digits`` significant digits, round-half-even, locale independent."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    with mp.workdps(digits + 20):
        raw = mpmath.nstr(to_mpf(x), digits + 15, strip_zeros=False)
    d = Decimal(raw)
    if d == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        ctx.rounding = ROUND_HALF_EVEN
        d = +d
    exp = d.adjusted()
    if -5 <= exp < digits:
        return format(d, "f")
    return format(d, f".{digits - 1}e")


def _bool(flag) -> str:
    if flag is None:
        return "NA"
    return "true" if flag else "false"


# ---------------------------------------------------------------------------
# Configuration

def build_spec(args):
    family = args.family
    domain = args.domain
    if family == "hermite":
        return hermite(args.tau if args.tau is not None else Fraction(1, 2))
    if family == "laguerre":
        return laguerre(args.tau if args.tau is not None else Fraction(1, 2))
    if family == "gammabeta":
        return GammaBeta(
            args.gamma if args.gamma is not None else 0,
            args.beta if args.beta is not None else 1,
            args.tau if args.tau is not None else Fraction(1, 2),
            domain or HALF_LINE,
        )
    if family == "polyexp":
        if not args.coeffs:
            raise ValueError("--coeffs is required for the polyexp family")
        coeffs = [Fraction(c) for c in args.coeffs.split(",")]
        return PolyExp(tuple(coeffs), domain or HALF_LINE)
    raise ValueError(f"unknown family {family!r}")


def _default_digits() -> int:
    env = os.environ.get("SPECNORM_DIGITS")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_DIGITS


def _policy(args) -> PrecisionPolicy:
    return PrecisionPolicy(target_digits=args.digits)


def _theta_fields(angle: Angle) -> dict:
    with mp.workdps(40):
        return {
            "radians": mpmath.nstr(angle.radians(), 30),
            "over_pi": mpmath.nstr(angle.over_pi(), 30),
            "text": str(angle),
        }


def _precision_fields(values) -> dict:
    values = list(values)
    return {
        "certified_digits_min": min(v.certified_digits for v in values),
        "precision_bits_max": max(v.precision_used for v in values),
    }


def _provenance(args, spec=None, angle: Angle | None = None) -> dict:
    out = {"tool": "specnorm", "version": __version__, "command": args.command,
           "digits_requested": args.digits}
    if spec is not None:
        out["weight"] = spec.params()
    if angle is not None:
        out["theta"] = _theta_fields(angle)
    return out


# ---------------------------------------------------------------------------
# Output

def _emit(args, columns: list[str], rows: list[list[str]], meta: dict, summary: dict | None = None) -> str:
    fmt = args.format
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        text = buf.getvalue()
        if summary:
            sys.stderr.write("".join(f"{k}={v}\n" for k, v in summary.items()))
    elif fmt == "json":
        payload = dict(meta)
        payload["columns"] = columns
        payload["rows"] = [dict(zip(columns, r)) for r in rows]
        if summary:
            payload["summary"] = summary
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c) for i, c in enumerate(columns)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
        lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
        if summary:
            lines += [f"{k}: {v}" for k, v in summary.items()]
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if args.plot and fmt == "csv":
            _write_plot_script(Path(args.out), columns)
    else:
        sys.stdout.write(text)
    return text


def _write_plot_script(csv_path: Path, columns: list[str]) -> Path:
    """A gnuplot script plotting every numeric column against the first."""
    script = csv_path.with_suffix(".gp")
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale y",
        f"set xlabel '{columns[0]}'",
        "set terminal pngcairo size 900,600",
        f"set output '{csv_path.with_suffix('.png').name}'",
    ]
    plots = [f"'{csv_path.name}' using 1:{i + 1} with linespoints" for i in range(1, len(columns))
             if columns[i] not in ("lower_ok", "upper_ok", "certified_digits", "theta_rad")]
    lines.append("plot " + ", \\\n     ".join(plots))
    script.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return script


# ---------------------------------------------------------------------------
# Commands

def _require_theta(args, spec) -> Angle:
    if args.theta is None:
        raise ValueError("--theta is required")
    return check_sector(spec, args.theta)


def cmd_norm(args) -> int:
    spec = build_spec(args)
    angle = _require_theta(args, spec)
    n = args.n if args.n is not None else 0
    r = sweep_cell(spec, angle, _policy(args), n)
    d = args.digits
    columns = ["n", "theta_rad", "N", "lower", "upper", "lower_ok", "upper_ok",
               "certified_digits", "precision_bits", "cancellation_log10"]
    with mp.workdps(50):
        row = [str(n), format_number(angle.radians(), d), format_number(r.value, d),
               format_number(r.lower, d), format_number(r.upper, d), _bool(r.lower_ok),
               _bool(r.upper_ok), str(r.norm.certified_digits), str(r.norm.precision_used),
               f"{r.norm.cancellation_magnitude:.2f}"]
    _emit(args, columns, [row], _provenance(args, spec, angle))
    return EXIT_VIOLATION if r.lower_ok is False or r.upper_ok is False else EXIT_OK


def _norm_task(spec, policy, task):
    angle, n = task
    return norm_value(spec, n, angle, policy)


def table1_rows(n: int, digits: int, workers: int | None = None, rows=TABLE1_ROWS):
    """Rows of (theta/pi, sec 2theta, sigma_n, 4 sec 2theta, exp tan 2theta) as strings."""
    spec = hermite()
    policy = PrecisionPolicy(target_digits=digits)
    angles = [Angle(Fraction(r), pi_units=True) for r in rows]
    tasks = [(a, m) for a in angles for m in (n, n - 2)]
    results = parallel_map(partial(_norm_task, spec, policy), tasks, workers)
    out = []
    for i, (label, angle) in enumerate(zip(rows, angles)):
        top, below = results[2 * i], results[2 * i + 1]
        with mp.workdps(digits + 20):
            sec = 1 / mpmath.cos(2 * angle.radians())
            sigma = mpmath.sqrt(top.value / below.value)
            out.append([
                label,
                format_number(sec, digits),
                format_number(sigma, digits),
                format_number(4 * sec, digits),
                format_number(semiclassical_mu(angle), digits),
            ])
    return out


def cmd_table1(args) -> int:
    n = args.n if args.n is not None else 100
    if n < 2:
        raise ValueError("table1 needs --n >= 2")
    columns = ["theta_over_pi", "sec_2theta", f"sigma_{n}", "four_sec_2theta", "mu"]
    rows = table1_rows(n, args.digits, args.workers)
    meta = _provenance(args, hermite())
    meta["n"] = n
    meta["rows_theta_rad"] = [_theta_fields(Angle(Fraction(r), True))["radians"] for r in TABLE1_ROWS]
    _emit(args, columns, rows, meta)
    return EXIT_OK


BOUNDS_COLUMNS = ["n", "theta_rad", "N", "lower", "upper", "lower_ok", "upper_ok",
                  "certified_digits", "cancellation_log10"]


def _sweep(args, spec, angle, ns):
    return parallel_map(partial(sweep_cell, spec, angle, _policy(args)), list(ns), args.workers)


def _bounds_row(angle, r, d):
    with mp.workdps(50):
        return [str(r.n), format_number(angle.radians(), d), format_number(r.value, d),
                format_number(r.lower, d), format_number(r.upper, d), _bool(r.lower_ok),
                _bool(r.upper_ok), str(r.norm.certified_digits),
                f"{r.norm.cancellation_magnitude:.2f}"]


def cmd_bounds(args) -> int:
    spec = build_spec(args)
    angle = _require_theta(args, spec)
    n_max = args.n_max if args.n_max is not None else 20
    results = _sweep(args, spec, angle, range(0, n_max + 1, args.stride))
    rows = [_bounds_row(angle, r, args.digits) for r in results]
    violated = any(r.lower_ok is False or r.upper_ok is False for r in results)
    meta = _provenance(args, spec, angle) | _precision_fields(r.norm for r in results)
    _emit(args, BOUNDS_COLUMNS, rows, meta,
          {"violations": sum(r.lower_ok is False or r.upper_ok is False for r in results)})
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_growth(args) -> int:
    spec = build_spec(args)
    angle = _require_theta(args, spec)
    n_max = args.n_max if args.n_max is not None else 100
    rep = growth_report(spec, angle, n_max, args.stride, _policy(args), args.workers)
    d = args.digits
    columns = ["n", "N", "log_N_over_n", "sigma_n"]
    rows = [[str(e.n), format_number(e.norm, d), format_number(e.exponent, min(d, 15)),
             format_number(e.sigma, d)] for e in rep.entries]
    summary = {
        "s_estimate": format_number(rep.s_estimate, 8),
        "s_lower": format_number(rep.s_lower, 8),
        "s_upper": format_number(rep.s_upper, 8) if rep.s_upper is not None else "NA",
    }
    _emit(args, columns, rows, _provenance(args, spec, angle), summary)
    return EXIT_OK


def cmd_expansion(args) -> int:
    spec = hermite()
    angle = _require_theta(args, spec)
    t = Fraction(args.t) if args.t is not None else Fraction(0)
    n_max = args.n_max if args.n_max is not None else 200
    rep = expansion_terms(angle, t, n_max, args.stride, _policy(args), spec, args.workers)
    columns = ["n", "log_term"]
    rows = [[str(n), format_number(v, 15)] for n, v in zip(rep.ns, rep.terms)]
    summary = {
        "t": str(args.t if args.t is not None else 0),
        "verdict": rep.verdict,
        "theory_verdict": rep.theory_verdict,
        "tail_slope": format_number(rep.tail_slope, 10),
        "t_z_lower": format_number(rep.t_z_bracket[0], 10),
        "t_z_upper": format_number(rep.t_z_bracket[1], 10),
    }
    _emit(args, columns, rows, _provenance(args, spec, angle), summary)
    return EXIT_OK


def _oracle_task(spec, angle, policy, n):
    return quadrature_norm_oracle(spec, n, angle, policy)


def cmd_verify(args) -> int:
    spec = build_spec(args)
    angle = _require_theta(args, spec)
    n_max = args.n_max if args.n_max is not None else 20
    ns = list(range(0, n_max + 1, args.stride))
    results = _sweep(args, spec, angle, ns)
    cutoff = min(args.oracle_cutoff, n_max)
    oracle_ns = [n for n in ns if n <= cutoff]
    oracle_policy = PrecisionPolicy(target_digits=min(args.digits, 25))
    oracles = parallel_map(partial(_oracle_task, spec, angle, oracle_policy), oracle_ns, args.workers)
    oracle_by_n = dict(zip(oracle_ns, oracles))
    need = min(args.digits, 20)
    d = args.digits
    columns = BOUNDS_COLUMNS + ["oracle", "oracle_agree_digits"]
    rows = []
    failures = 0
    for r in results:
        row = _bounds_row(angle, r, d)
        bad = r.lower_ok is False or r.upper_ok is False
        o = oracle_by_n.get(r.n)
        if o is not None:
            with mp.workdps(60):
                agree = agreement_digits(r.value, o.value, cap=60)
            bad = bad or agree < need
            row += [format_number(o.value, d), f"{agree:.1f}"]
        else:
            row += ["", ""]
        failures += bad
        rows.append(row)
    meta = _provenance(args, spec, angle) | _precision_fields(r.norm for r in results)
    _emit(args, columns, rows, meta, {"failures": failures})
    return EXIT_VIOLATION if failures else EXIT_OK


def cmd_semiclassical(args) -> int:
    spec = hermite()
    angle = _require_theta(args, spec)
    n = args.n if args.n is not None else 100
    d = args.digits
    cv = norm_value(spec, n, angle, _policy(args))
    with mp.workdps(d + 20):
        th = angle.radians()
        sp = semiclassical_params(angle, n)
        lg = log_gaussian_ratio(sp.psi1, sp.psi2) if not angle.is_zero() else mp.zero
        row = [str(n), format_number(th, d), format_number(semiclassical_mu(angle), d),
               format_number(mpmath.log(cv.value), d), format_number(n * mpmath.tan(2 * th), d),
               format_number(lg, d), format_number(sp.eta, d),
               format_number(abs(sp.lam - 2 * n * mpmath.expj(2 * th)), 3)]
    columns = ["n", "theta_rad", "mu", "log_N", "n_tan_2theta", "log_gaussian_ratio", "eta",
               "lambda_residual"]
    _emit(args, columns, [row], _provenance(args, spec, angle))
    return EXIT_OK


COMMANDS = {
    "norm": cmd_norm,
    "table1": cmd_table1,
    "bounds": cmd_bounds,
    "growth": cmd_growth,
    "expansion": cmd_expansion,
    "verify": cmd_verify,
    "semiclassical": cmd_semiclassical,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=["hermite", "laguerre", "gammabeta", "polyexp"], default="hermite")
    common.add_argument("--domain", choices=[HALF_LINE, FULL_LINE], default=None)
    common.add_argument("--gamma", type=Fraction, default=None)
    common.add_argument("--beta", type=Fraction, default=None)
    common.add_argument("--tau", type=Fraction, default=None)
    common.add_argument("--coeffs", default=None, help="comma separated c_1,...,c_n")
    common.add_argument("--theta", type=_angle_type, default=None)
    common.add_argument("--n", type=int, default=None)
    common.add_argument("--n-max", type=int, default=None)
    common.add_argument("--stride", type=int, default=2)
    common.add_argument("--t", type=str, default=None)
    common.add_argument("--digits", type=int, default=_default_digits())
    common.add_argument("--format", choices=["csv", "json", "plain"], default="csv")
    common.add_argument("--plot", action="store_true")
    common.add_argument("--out", default=None)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--oracle-cutoff", type=int, default=20)

    parser = argparse.ArgumentParser(prog="specnorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"specnorm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.digits < 4:
        parser.error("--digits must be >= 4")
    if args.stride < 1:
        parser.error("--stride must be >= 1")
    if args.plot and not args.out:
        args.out = f"{args.command}.csv"
    if args.t is not None:
        try:
            Fraction(args.t)
        except ValueError:
            parser.error(f"invalid --t {args.t!r}")
    try:
        return COMMANDS[args.command](args)
    except SectorViolation as exc:
        print(f"specnorm: sector violation: {exc}", file=sys.stderr)
        return EXIT_SECTOR
    except PrecisionBudgetError as exc:
        print(f"specnorm: precision budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, UnsupportedParity) as exc:
        print(f"specnorm: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
