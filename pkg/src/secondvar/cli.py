"""Command line interface.

Exit codes: 0 success, 2 invalid input (moduli, spec files, grids),
3 engine or verification errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .cylinder import find_T1
from .errors import (InvalidModuli, MultiplicityNotTwo, NotBelowT1, SecondVarError, SpecError)
from .sweeps import (CYLINDER, TORUS, RunOptions, csv_text, cylinder_point, parse_sweep_spec,
                     report_envelope, run_sweep, torus_point)

EXIT_INPUT = 2
EXIT_ENGINE = 3
INPUT_ERRORS = (InvalidModuli, MultiplicityNotTwo, NotBelowT1, SpecError)


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    g = parser.add_argument_group("output and numerics")
    g.add_argument("--json", action="store_true", default=d(False), help="print a JSON report")
    g.add_argument("--csv", metavar="PATH", default=d(None), help="write the report rows as CSV")
    g.add_argument("--verify", action="store_true", default=d(False),
                   help="cross-check alpha with the Galerkin finite-difference solver")
    g.add_argument("--cutoff", type=int, default=d(None),
                   help="Galerkin cutoff (torus |m|,|n|; cylinder angular frequency)")
    g.add_argument("--step", type=float, default=d(0.05), help="finite-difference step h")
    g.add_argument("--jobs", type=int, default=d(1), help="worker processes for sweeps")
    g.add_argument("--tol", type=float, default=d(1e-12), help="bisection tolerance for T1")
    g.add_argument("--samples", metavar="PATH", default=d(None),
                   help="write verification samples (t, lambda_k, normalizer, normalized) as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secondvar",
        description="Second variation of normalized eigenvalues at flat tori and cylinders.",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("torus", parents=[common], help="lambda_1 of the flat torus g_{a,b}")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--omega", metavar="FILE", help="perturbation spec (JSON)")

    p = sub.add_parser("cylinder", parents=[common], help="sigma_1 of the flat cylinder g_T")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--a", type=float, default=0.2, help="omega = sin(theta) - a sin(3 theta)")
    p.add_argument("--omega", metavar="FILE", help="perturbation spec (JSON), replaces --a")

    p = sub.add_parser("sweep", parents=[common], help="evaluate a parameter grid")
    p.add_argument("spec", metavar="SPEC_FILE")

    sub.add_parser("t1", parents=[common], help="root of coth T = T")

    p = sub.add_parser("verify", parents=[common], help="run the Galerkin cross-check")
    p.add_argument("problem", choices=[TORUS, CYLINDER])
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--omega", metavar="FILE")
    return parser


def _load_omega(path: str | None):
    if path is None:
        return None
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")


def _fmt(x) -> str:
    return f"{x:.12g}"


def _print_matrix(q) -> None:
    for row in q:
        print("    [" + ", ".join(f"{v: .12g}" for v in row) + "]")


def _print_point(problem: str, pt: dict) -> None:
    if problem == TORUS:
        print(f"torus a={_fmt(pt['a'])} b={_fmt(pt['b'])}")
        print(f"  lambda_1 (g_ab)         = {_fmt(pt['lambda_k'])}   area = {_fmt(pt['normalizer'])}")
        print(f"  lambda_1 (unit area)    = {_fmt(pt['lambda_k_unit_area'])}")
    else:
        label = f" a={_fmt(pt['a'])}" if pt["a"] is not None else ""
        print(f"cylinder T={_fmt(pt['T'])}{label}")
        print(f"  sigma_1 (g_T)           = {_fmt(pt['sigma_k'])}   length = {_fmt(pt['normalizer'])}")
        print(f"  sigma_1 (unit length)   = {_fmt(pt['sigma_k_unit_length'])}")
    print("  Q matrix:")
    _print_matrix(pt["q_matrix"])
    print(f"  mu                      = {_fmt(pt['mu'])}")
    print(f"  alpha (raw metric)      = {_fmt(pt['alpha_raw'])}")
    print(f"  alpha (normalized)      = {_fmt(pt['alpha_normalized'])}")
    if problem == TORUS:
        print(f"  alpha / lambda_1 (unit) = {_fmt(pt['alpha_normalized'] / pt['lambda_k_unit_area'])}")
    if "alpha_closed_form" in pt:
        print(f"  alpha (closed form)     = {_fmt(pt['alpha_closed_form'])}"
              f"   agreement {pt['closed_form_agreement']:.2e}")
    print("  normalized branches     = " + ", ".join(_fmt(x) for x in pt["branch_curvatures"]))
    print(f"  admissibility residual  = {pt['admissibility_residual']:.3e}")
    print(f"  sign                    = {'alpha > 0' if pt['alpha_raw'] > 0 else 'alpha <= 0'}")
    ver = pt.get("verification")
    if ver:
        print(f"  verification (cutoff {ver['cutoff']}, h = {ver['step']}):")
        print(f"    measured alpha        = {_fmt(ver['measured_alpha'])}")
        print(f"    relative error        = {ver['rel_error']:.3e}")
        print(f"    first-derivative res. = {ver['first_derivative_residual']:.3e}")
        print("    raw branch curvatures = "
              + ", ".join(_fmt(x) for x in ver["branch_curvatures_measured"])
              + "  (predicted " + ", ".join(_fmt(x) for x in ver["branch_curvatures_predicted"]) + ")")


def _emit(args, problem: str, report: dict) -> None:
    if args.csv:
        Path(args.csv).write_text(csv_text(problem, report["points"]))
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    for pt in report["points"]:
        _print_point(problem, pt)
    if "summary" in report:
        s = report["summary"]
        print(f"summary: {s['positive_alpha']}/{s['points']} points with alpha > 0; "
              f"min alpha = {_fmt(s['min_alpha'])}")
        if "T_values" in s:
            print(f"         {s['T_with_positive_alpha']}/{s['T_values']} values of T "
                  f"admit some a with alpha > 0")


def _options(args) -> RunOptions:
    return RunOptions(verify=args.verify, cutoff=args.cutoff, step=args.step,
                      samples_path=args.samples)


def _cmd_torus(args) -> int:
    opts = _options(args)
    pt = torus_point(args.a, args.b, _load_omega(args.omega), opts)
    _emit(args, TORUS, report_envelope("torus", {"a": args.a, "b": args.b}, [pt]))
    return 0


def _cmd_cylinder(args) -> int:
    omega = _load_omega(args.omega)
    pt = cylinder_point(args.T, None if omega else args.a, omega, _options(args))
    _emit(args, CYLINDER, report_envelope("cylinder", {"T": args.T, "a": args.a}, [pt]))
    return 0


def _cmd_verify(args) -> int:
    args.verify = True
    if args.problem == TORUS:
        if args.a is None or args.b is None:
            raise SpecError("verify torus needs --a and --b")
        return _cmd_torus(args)
    if args.T is None:
        raise SpecError("verify cylinder needs --T")
    if args.a is None:
        args.a = 0.2
    return _cmd_cylinder(args)


def _cmd_sweep(args) -> int:
    try:
        text = Path(args.spec).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {args.spec}: {exc.strerror}")
    spec = parse_sweep_spec(text)
    report = run_sweep(spec, _options(args), jobs=max(1, args.jobs))
    if spec.json_path:
        Path(spec.json_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if spec.csv_path:
        Path(spec.csv_path).write_text(csv_text(spec.problem, report["points"]))
    _emit(args, spec.problem, report)
    return 0


def _cmd_t1(args) -> int:
    t1 = find_T1(args.tol)
    product = math.tanh(t1) * t1
    if args.json:
        print(json.dumps({"schema": 1, "T1": t1, "tanh_T1_times_T1": product,
                          "tol": args.tol}, sort_keys=True))
    else:
        print(f"T1 = {t1:.12f}")
        print(f"tanh(T1) * T1 = {product:.12f}")
    return 0


COMMANDS = {"torus": _cmd_torus, "cylinder": _cmd_cylinder, "sweep": _cmd_sweep,
            "t1": _cmd_t1, "verify": _cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SecondVarError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
