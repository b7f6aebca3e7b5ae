"""Batch command-line interface: model validation, sweeps, comparisons.

Every command reads a JSON model file and writes one CSV table (fixed
header per command, 17-significant-digit floats, '\\n' line ends) to stdout
or --out.  Violated input, domain and theorem conditions exit with codes
1, 2 and 3 respectively, with the offending condition named on stderr.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from . import asymptotics, deviation, oracle, second_deviation
from .errors import ConditionError, CrpError, DomainError, ModelError
from .lattice import load_model, validate_arithmetic

__all__ = ["main", "run"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _n_list(text: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise ModelError(f"--n-list must be comma-separated integers, got {text!r}")
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ModelError("--n-list must be a strictly increasing integer list")
    return values


def _alpha_grid(args) -> list:
    if args.alpha is not None:
        return [args.alpha]
    if args.alpha_min is None or args.alpha_max is None:
        raise ModelError("provide --alpha or the --alpha-min/--alpha-max/--alpha-steps range")
    steps = args.alpha_steps
    if steps < 2:
        raise ModelError("--alpha-steps must be >= 2")
    lo, hi = args.alpha_min, args.alpha_max
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _require_n(args, flag="--n"):
    if args.n is None:
        raise ModelError(f"this command requires {flag}")
    return args.n


def _cmd_validate(model, args, out):
    report = validate_arithmetic(model.step)
    w = _writer(out)
    w.writerow(["arithmetic_ok", "cramer_ok", "lambda_plus", "lattice_basis", "messages"])
    basis = "" if report.lattice_basis is None else \
        ";".join(f"{a},{b}" for a, b in report.lattice_basis)
    w.writerow([_fmt(report.arithmetic_ok), _fmt(report.cramer_ok),
                _fmt(report.lambda_plus), basis, " | ".join(report.messages)])
    if not report.arithmetic_ok and not args.unsafe:
        raise ConditionError(
            "condition [Z] violated: " + ("; ".join(report.messages) or "degenerate support"),
            condition="[Z]")


def _cmd_domain(model, args, out):
    summary = second_deviation.domain(model.step)
    for msg in summary.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    w = _writer(out)
    w.writerow(["mu_minus", "mu_plus", "alpha_minus", "alpha_plus",
                "lambda_plus", "beta_minus", "beta_plus", "D0"])
    w.writerow([_fmt(v) for v in (summary.mu_minus, summary.mu_plus,
                                  summary.alpha_minus, summary.alpha_plus,
                                  summary.lambda_plus, summary.beta_minus,
                                  summary.beta_plus, summary.D0)])


def _cmd_rate(model, args, out):
    w = _writer(out)
    w.writerow(["alpha", "mu", "lambda", "D", "D1", "D2"])
    for alpha in _alpha_grid(args):
        rp = second_deviation.rate_point(model.step, alpha)
        w.writerow([_fmt(v) for v in (alpha, rp.mu_alpha, rp.lambda_alpha,
                                      rp.D, rp.D1, rp.D2)])


def _cmd_pmf(model, args, out):
    n = _require_n(args)
    if args.x is None:
        raise ModelError("pmf requires --x")
    est = asymptotics.approx_crp_pmf(model, n, args.x, unsafe=args.unsafe)
    w = _writer(out)
    w.writerow(["n", "x", "alpha", "value", "log_value", "psi1_factor",
                "prefactor", "I_factor", "exponent"])
    w.writerow([_fmt(v) for v in (n, args.x, args.x / n, est.value, est.log_value,
                                  est.psi1_factor, est.prefactor, est.I_factor,
                                  est.exponent)])


def _cmd_exact(model, args, out):
    n = _require_n(args)
    pmf = oracle.crp_pmf_exact(model, n)
    w = _writer(out)
    w.writerow(["x", "probability"])
    for x in sorted(pmf):
        w.writerow([_fmt(x), _fmt(pmf[x])])


def _cmd_compare(model, args, out):
    if args.n_list is None:
        raise ModelError("compare requires --n-list")
    if args.alpha is None:
        raise ModelError("compare requires --alpha")
    w = _writer(out)
    w.writerow(["n", "x", "alpha", "exact", "asymptotic", "ratio",
                "psi1_factor", "prefactor", "I_factor", "exponent"])
    for n in _n_list(args.n_list):
        x = round(args.alpha * n)
        est = asymptotics.approx_crp_pmf(model, n, x, unsafe=args.unsafe)
        exact = oracle.crp_pmf_exact(model, n).get(x, 0.0)
        ratio = exact / est.value if est.value else math.inf
        w.writerow([_fmt(v) for v in (n, x, x / n, exact, est.value, ratio,
                                      est.psi1_factor, est.prefactor,
                                      est.I_factor, est.exponent)])


def _cmd_renewal(model, args, out):
    if args.n_list is None:
        raise ModelError("renewal requires --n-list")
    if args.theta is None or args.alpha is None:
        raise ModelError("renewal requires --theta and --alpha")
    ns = _n_list(args.n_list)
    table = oracle.renewal_measure_exact(model, round(args.theta * ns[-1]))
    w = _writer(out)
    w.writerow(["n", "t", "x", "theta", "alpha", "exact", "asymptotic",
                "ratio", "psi1_factor", "prefactor", "exponent"])
    for n in ns:
        t, x = round(args.theta * n), round(args.alpha * n)
        est = asymptotics.approx_renewal(model, n, t, x, unsafe=args.unsafe)
        exact = table.value(t, x)
        ratio = exact / est.value if est.value else math.inf
        w.writerow([_fmt(v) for v in (n, t, x, t / n, x / n, exact, est.value,
                                      ratio, est.psi1_factor, est.prefactor,
                                      est.exponent)])


def _cmd_clt(model, args, out):
    if args.n_list is None:
        raise ModelError("clt requires --n-list")
    if args.theta is None or args.alpha is None:
        raise ModelError("clt requires --theta (gamma) and --alpha (beta)")
    w = _writer(out)
    w.writerow(["n", "t", "x", "gamma", "beta", "exact", "asymptotic", "ratio"])
    for n in _n_list(args.n_list):
        t, x = round(args.theta * n), round(args.alpha * n)
        approx = deviation.clt_local(model.step, n, t, x, unsafe=args.unsafe)
        pmf = oracle.step_pmf(model, n, t)
        exact = pmf.entries.get((t, x), 0.0)
        ratio = exact / approx if approx else math.inf
        w.writerow([_fmt(v) for v in (n, t, x, t / n, x / n, exact, approx, ratio)])


def _cmd_simulate(model, args, out):
    n = _require_n(args)
    if args.paths is None or args.seed is None:
        raise ModelError("simulate requires --paths and --seed")
    if args.tilted and args.alpha is None:
        raise ModelError("--tilted requires --alpha")
    est = oracle.simulate(model, n, args.paths, args.seed,
                          tilted=args.tilted, alpha=args.alpha)
    w = _writer(out)
    w.writerow(["x", "estimate", "std_error"])
    for x in sorted(est):
        w.writerow([_fmt(x), _fmt(est[x][0]), _fmt(est[x][1])])


_COMMANDS = {
    "validate": _cmd_validate,
    "domain": _cmd_domain,
    "rate": _cmd_rate,
    "pmf": _cmd_pmf,
    "exact": _cmd_exact,
    "compare": _cmd_compare,
    "renewal": _cmd_renewal,
    "clt": _cmd_clt,
    "simulate": _cmd_simulate,
}

_NEEDS_Z = {"rate", "pmf", "compare", "renewal", "clt", "domain"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crplocal",
        description="Exact and asymptotic local probabilities of arithmetic "
                    "compound renewal processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", "-m", required=True)
        p.add_argument("--out", "-o", default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--n-list", default=None)
        p.add_argument("--x", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--alpha-min", type=float, default=None)
        p.add_argument("--alpha-max", type=float, default=None)
        p.add_argument("--alpha-steps", type=int, default=21)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--paths", type=int, default=None)
        p.add_argument("--seed", type=lambda s: int(s) & (2 ** 64 - 1), default=None)
        p.add_argument("--tilted", action="store_true")
        p.add_argument("--unsafe", action="store_true")
    return parser


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        model = load_model(args.model)
        if args.command in _NEEDS_Z and not args.unsafe:
            report = validate_arithmetic(model.step)
            if not report.arithmetic_ok:
                raise ConditionError(
                    "condition [Z] violated: "
                    + ("; ".join(report.messages) or "degenerate support"),
                    condition="[Z]")
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                _COMMANDS[args.command](model, args, fh)
        else:
            _COMMANDS[args.command](model, args, sys.stdout)
    except ModelError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except ConditionError as exc:
        print(f"condition {exc.condition} violated: {exc}", file=sys.stderr)
        return 3
    except CrpError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    return 0


def main() -> None:
    sys.exit(run())
