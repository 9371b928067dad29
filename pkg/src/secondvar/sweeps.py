"""Single-point evaluations and parameter sweeps behind the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .cylinder import (CylinderModuli, alpha_of_a, find_T1, mu1, mu2, omega_family,
                       sigma1_critical_data)
from .engine import second_variation
from .errors import InvalidModuli, SecondVarError, SpecError
from .fourier import dump_perturbation, parse_perturbation
from .galerkin import VerificationConfig, default_config, verify
from .torus import TorusModuli, default_perturbation, lambda1_critical_data

SCHEMA_VERSION = 1
CLOSED_FORM_TOL = 1e-10

TORUS, CYLINDER = "torus", "cylinder"


class ClosedFormMismatch(SecondVarError):
    pass


@dataclass(frozen=True)
class RunOptions:
    verify: bool = False
    cutoff: int | None = None
    step: float = 0.05
    samples_path: str | None = None


def _verify(data, omega, opts: RunOptions) -> dict[str, Any]:
    cfg = default_config(data, opts.cutoff, opts.step)
    report = verify(data, omega, cfg)
    if opts.samples_path:
        with open(opts.samples_path, "w", newline="") as fh:
            csv.writer(fh).writerows(report.csv_rows())
    return {
        "measured_alpha": report.measured_alpha,
        "rel_error": report.relative_error,
        "first_derivative_residual": report.first_derivative_residual,
        "branch_curvatures_measured": [float(x) for x in report.branch_curvatures],
        "branch_curvatures_predicted": [float(x) for x in report.predicted_branch_curvatures],
        "cutoff": cfg.cutoff,
        "step": cfg.step,
    }


def torus_point(a: float, b: float, omega_spec: dict | None = None,
                opts: RunOptions = RunOptions()) -> dict[str, Any]:
    """Second variation of ``lambda_1 * area`` at the flat torus ``g_{a,b}``."""
    moduli = TorusModuli(a, b)

    def omega_on(scale):
        if omega_spec is None:
            return default_perturbation(moduli, scale)
        return parse_perturbation(omega_spec, moduli.domain(scale))

    omega = omega_on(1.0)
    data = lambda1_critical_data(moduli, omega)
    sv = second_variation(omega, data)
    # same computation for the unit-area metric
    unit = 1.0 / math.sqrt(b)
    omega_unit = omega_on(unit)
    sv_unit = second_variation(omega_unit, lambda1_critical_data(moduli, omega_unit, unit))
    out = {
        "a": a,
        "b": b,
        "omega": dump_perturbation(omega),
        "lambda_k": sv.eigenvalue,
        "normalizer": sv.normalizer,
        "lambda_k_unit_area": sv_unit.eigenvalue,
        "omega_norm_sq": sv.omega_norm_sq,
        "omega_norm_sq_unit_area": sv_unit.omega_norm_sq,
        "q_matrix": sv.qform.matrix.entries.tolist(),
        "mu": sv.mu,
        "alpha_raw": sv.alpha,
        "alpha_normalized": sv_unit.alpha,
        "branch_curvatures": [float(x) for x in sv.normalized_branch_curvatures],
        "admissibility_residual": sv.qform.admissibility_residual,
    }
    if opts.verify:
        out["verification"] = _verify(data, omega, opts)
    return out


def cylinder_point(T: float, a: float | None = 0.2, omega_spec: dict | None = None,
                   opts: RunOptions = RunOptions()) -> dict[str, Any]:
    """Second variation of ``sigma_1 * length`` at the flat cylinder ``g_T``.

    For the family ``sin theta - a sin 3 theta`` the engine result is checked
    against the closed forms on every call.
    """
    moduli = CylinderModuli(T)

    def omega_on(scale):
        if omega_spec is None:
            return omega_family(moduli, a, scale)
        return parse_perturbation(omega_spec, moduli.domain(scale))

    omega = omega_on(1.0)
    data = sigma1_critical_data(moduli, omega)
    sv = second_variation(omega, data)
    unit = 1.0 / (4.0 * math.pi)
    omega_unit = omega_on(unit)
    sv_unit = second_variation(omega_unit, sigma1_critical_data(moduli, omega_unit, unit))
    out = {
        "T": T,
        "a": a if omega_spec is None else None,
        "omega": dump_perturbation(omega),
        "sigma_k": sv.eigenvalue,
        "normalizer": sv.normalizer,
        "sigma_k_unit_length": sv_unit.eigenvalue,
        "omega_norm_sq": sv.omega_norm_sq,
        "q_matrix": sv.qform.matrix.entries.tolist(),
        "mu": sv.mu,
        "alpha_raw": sv.alpha,
        "alpha_normalized": sv_unit.alpha,
        "branch_curvatures": [float(x) for x in sv.normalized_branch_curvatures],
        "admissibility_residual": sv.qform.admissibility_residual,
    }
    if omega_spec is None:
        closed = alpha_of_a(a, T)
        m1, m2 = mu1(a, T), mu2(a, T)
        q = sv.qform.matrix.entries
        gap = max(abs(closed - sv.alpha) / max(1.0, abs(closed)),
                  abs(q[0, 0] - m1), abs(q[1, 1] - m2), abs(q[0, 1]))
        if gap > CLOSED_FORM_TOL:
            raise ClosedFormMismatch(
                f"engine and closed form disagree by {gap:.3e} at T = {T}, a = {a}"
            )
        out.update({"mu1": m1, "mu2": m2, "alpha_closed_form": closed,
                    "closed_form_agreement": gap})
    if opts.verify:
        out["verification"] = _verify(data, omega, opts)
    return out


# sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    problem: str
    grid: tuple[tuple[float, float], ...]  # (a, b) or (T, a)
    omega: dict | None = None
    verify: bool = False
    csv_path: str | None = None
    json_path: str | None = None
    echo: dict = field(default_factory=dict)


def _number_list(obj: dict, key: str) -> list[float]:
    val = obj.get(key)
    if not isinstance(val, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
        raise SpecError(f"field {key!r}: expected a list of numbers")
    return [float(x) for x in val]


def parse_sweep_spec(text: str) -> SweepSpec:
    """Parse a sweep file.

    Torus: ``{"problem": "torus", "grid": [[a, b], ...]}`` or
    ``{"problem": "torus", "a": [...], "b": [...]}`` (product, row-major in a).
    Cylinder: ``{"problem": "cylinder", "T": [...], "a": [...]}`` (product,
    row-major in T) or ``"grid": [[T, a], ...]``.  Optional keys: ``omega``
    (perturbation spec), ``verify``, ``csv``, ``json``.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(obj, dict):
        raise SpecError("sweep spec must be a JSON object")
    known = {"problem", "grid", "a", "b", "T", "omega", "verify", "csv", "json"}
    unknown = set(obj) - known
    if unknown:
        raise SpecError(f"unknown field(s) {sorted(unknown)}")
    problem = obj.get("problem")
    if problem not in (TORUS, CYLINDER):
        raise SpecError(f"field 'problem': expected 'torus' or 'cylinder', got {problem!r}")
    if "grid" in obj:
        raw = obj["grid"]
        if not isinstance(raw, list):
            raise SpecError("field 'grid': expected a list of pairs")
        grid = []
        for i, pt in enumerate(raw):
            if (not isinstance(pt, list) or len(pt) != 2 or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool) for x in pt)):
                raise SpecError(f"grid[{i}]: expected a pair of numbers")
            grid.append((float(pt[0]), float(pt[1])))
    elif problem == TORUS:
        grid = [(a, b) for a in _number_list(obj, "a") for b in _number_list(obj, "b")]
    else:
        grid = [(T, a) for T in _number_list(obj, "T") for a in _number_list(obj, "a")]
    if not grid:
        raise SpecError("empty parameter grid")
    if problem == TORUS:
        for i, (a, b) in enumerate(grid):
            try:
                TorusModuli(a, b)
            except InvalidModuli as exc:
                raise SpecError(f"grid point {i} (a={a}, b={b}): {exc}")
            if not a * a + b * b > 1.0:
                raise SpecError(f"grid point {i} (a={a}, b={b}): the lambda_1 workflow needs a^2 + b^2 > 1")
    else:
        t1 = find_T1()
        for i, (T, _) in enumerate(grid):
            if not 0.0 < T < t1:
                raise SpecError(f"grid point {i} (T={T}): the sigma_1 workflow needs 0 < T < T1 = {t1:.6f}")
    omega = obj.get("omega")
    if omega is not None and not isinstance(omega, dict):
        raise SpecError("field 'omega': expected a perturbation spec object")
    verify_flag = obj.get("verify", False)
    if not isinstance(verify_flag, bool):
        raise SpecError("field 'verify': expected true or false")
    for key in ("csv", "json"):
        if key in obj and not isinstance(obj[key], str):
            raise SpecError(f"field {key!r}: expected a path string")
    return SweepSpec(problem, tuple(grid), omega, verify_flag, obj.get("csv"), obj.get("json"),
                     echo=obj)


def _run_point(args):
    problem, p, q, omega, opts = args
    if problem == TORUS:
        return torus_point(p, q, omega, opts)
    return cylinder_point(p, q if omega is None else None, omega, opts)


def run_sweep(spec: SweepSpec, opts: RunOptions = RunOptions(), jobs: int = 1) -> dict[str, Any]:
    """Evaluate every grid point; results keep the grid order regardless of ``jobs``."""
    opts = RunOptions(verify=opts.verify or spec.verify, cutoff=opts.cutoff, step=opts.step)
    tasks = [(spec.problem, p, q, spec.omega, opts) for p, q in spec.grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_run_point, tasks))
    else:
        points = [_run_point(t) for t in tasks]
    alphas = [pt["alpha_raw"] for pt in points]
    summary = {
        "points": len(points),
        "positive_alpha": sum(1 for x in alphas if x > 0),
        "min_alpha": min(alphas),
        "max_alpha": max(alphas),
    }
    if spec.problem == CYLINDER:
        by_T: dict[float, bool] = {}
        for pt in points:
            by_T[pt["T"]] = by_T.get(pt["T"], False) or pt["alpha_raw"] > 0
        summary["T_values"] = len(by_T)
        summary["T_with_positive_alpha"] = sum(by_T.values())
    return report_envelope("sweep", spec.echo, points, summary)


def report_envelope(command: str, config: dict, points: list, summary: dict | None = None) -> dict:
    out = {"schema": SCHEMA_VERSION, "version": __version__, "command": command,
           "config": config, "points": points}
    if summary is not None:
        out["summary"] = summary
    return out


def csv_text(problem: str, points: list[dict]) -> str:
    params = ["a", "b"] if problem == TORUS else ["T", "a"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(params + ["alpha_raw", "alpha_normalized", "mu", "branch_curvatures",
                              "admissibility_residual", "verify_rel_error"])
    for pt in points:
        ver = pt.get("verification")
        writer.writerow(
            ["" if pt[k] is None else repr(pt[k]) for k in params]
            + [repr(pt["alpha_raw"]), repr(pt["alpha_normalized"]), repr(pt["mu"]),
               ";".join(repr(x) for x in pt["branch_curvatures"]),
               repr(pt["admissibility_residual"]),
               "" if ver is None else repr(ver["rel_error"])]
        )
    return buf.getvalue()
