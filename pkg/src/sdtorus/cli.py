"""Batch driver: verification suites, classification grids and 3-pole moduli reports.

Exit status is 0 when every check passes, 1 when a check exceeds its
tolerance (the failing checks are named on stderr and in the report) and
2 when the input cannot be parsed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curvature, joyce, swann, threepole
from .eigenfunction import (CLASSIFY_TOL, InvalidInput, MultipoleSpec, PointClass, classify_point,
                            classify_values, discriminant_jet, eval_F, local_scale, pde_residual, pde_residual_scale)
from .hyperbolic import hyperboloid_matrix
from .jets import Jet
from .metric import Branch, DegenerateAtPoint, einstein_metric

OUTPUT_DIR_ENV = "SDTORUS_OUTPUT_DIR"

DEFAULT_TOLERANCES = {
    "pde_residual": 1e-10,
    "einstein": 1e-7,
    "lambda_spread": 1e-6,
    "weyl": 1e-7,
    "weyl_dipole": 1e-8,
    "twist": 1e-8,
    "monopole_discriminant": 1e-12,
    "joyce": 1e-10,
    "structure": 1e-8,
    "structure_s_spread": 1e-8,
    "bd": 1e-10,
    "grammian": 1e-12,
    "wave": 1e-7,
}


class ParseError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParseError(message)


@dataclass
class RunConfig:
    command: str
    spec_path: str | None = None
    rho_bounds: tuple = (0.2, 3.0)
    eta_bounds: tuple = (-2.0, 2.0)
    n: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str | None = None
    fmt: str = "json"
    a: float = 1.0
    b: float | None = None
    c: float | None = None
    kind: str = "TypeII"
    # sampled points keep |D| >= margin * scale**2, away from the roundoff band near D = 0
    margin: float = 0.1

    def __post_init__(self):
        if not 0 < self.rho_bounds[0] < self.rho_bounds[1]:
            raise ParseError("rho bounds must satisfy 0 < rho-min < rho-max")
        if not self.eta_bounds[0] < self.eta_bounds[1]:
            raise ParseError("eta bounds must satisfy eta-min < eta-max")
        if self.n < 1:
            raise ParseError("counts must be at least 1")
        if not 0 <= self.margin < 1:
            raise ParseError("margin must lie in [0, 1)")


def load_spec(path: str) -> MultipoleSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read spec file {path}: {exc}") from exc
    try:
        return MultipoleSpec.from_json(text)
    except InvalidInput as exc:
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# sampling

def is_dipole(spec: MultipoleSpec) -> bool:
    counts = len(spec.terms) if not spec.has_conjugate_pairs else 2 * len(spec.terms)
    return counts == 2 and not spec.is_perturbed


def sample_points(spec: MultipoleSpec, config: RunConfig, need_metric: bool = True) -> list:
    """Seeded uniform points in the box, rejecting bands around the zero sets."""
    rng = np.random.default_rng(config.seed)
    points, attempts = [], 0
    while len(points) < config.n:
        attempts += 1
        if attempts > 200 * config.n:
            raise DegenerateAtPoint("could not find enough non-degenerate sample points")
        p = (float(rng.uniform(*config.rho_bounds)), float(rng.uniform(*config.eta_bounds)))
        if need_metric:
            try:
                if classify_point(spec, p, tol=max(config.margin, CLASSIFY_TOL)) not in (
                        PointClass.PositiveScal, PointClass.NegativeScal):
                    continue
            except (ArithmeticError, ValueError):
                continue
        points.append(p)
    return points


@dataclass
class Report:
    command: str
    label: str
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def check(self, name: str, value: float, tol: float, **info):
        value = float(value)
        ok = bool(np.isfinite(value) and value < tol)
        self.checks[name] = {"max": value, "tol": tol, "pass": ok, **info}
        if not ok:
            self.failures.append(name)

    def skip(self, name: str, reason: str):
        self.checks[name] = {"skipped": reason}

    def to_dict(self) -> dict:
        return {"command": self.command, "label": self.label, "checks": self.checks,
                "failures": self.failures, "pass": not self.failures, **self.extra}


# ---------------------------------------------------------------------------
# commands

def _pde_check(report, spec, points, tol):
    worst = max(abs(float(pde_residual(spec, p))) / float(pde_residual_scale(spec, p)) for p in points)
    report.check("pde_residual", worst, tol)


def _joyce_check(report, spec, points, tol):
    worst = 0.0
    for p in points:
        norm = float(pde_residual_scale(spec, p))
        for sol in (joyce.canonical_solution(spec, p), joyce.second_solution(spec, p)):
            worst = max(worst, max(abs(r) for r in joyce.solution_residual(sol, p)) / norm)
        worst = max(worst, abs(joyce.pencil_identity_residual(spec, p)) / norm)
    report.check("joyce", worst, tol)


def _structure_check(report, spec, points, tols):
    checker = swann.StructureChecker(spec)
    worst, fitted = 0.0, []
    for p in points:
        free = swann.structure_residuals(spec, p)
        fitted.append(free.s)
        res = checker(p)
        worst = max(worst, res.r_theta, res.r_omega)
    spread = (max(fitted) - min(fitted)) / max(abs(np.mean(fitted)), 1e-300)
    report.check("structure", worst, tols["structure"], s=checker.s)
    report.check("structure_s_spread", spread, tols["structure_s_spread"])


def cmd_verify(config: RunConfig, spec: MultipoleSpec) -> Report:
    tols = config.tolerances
    report = Report("verify", spec.label)
    if spec.is_monopole:
        points = sample_points(spec, config, need_metric=False)
        _pde_check(report, spec, points, tols["pde_residual"])
        worst = 0.0
        for p in points:
            F = eval_F(spec, p)
            D = float(discriminant_jet(F, Jet.seed(p, 3)[0]).value)
            worst = max(worst, abs(D) / float(local_scale(spec, p)) ** 2)
        report.check("monopole_discriminant", worst, tols["monopole_discriminant"])
        _joyce_check(report, spec, points, tols["joyce"])
        for name in ("einstein", "weyl", "twist", "structure"):
            report.skip(name, "the single-pole metric is degenerate")
        return report

    points = sample_points(spec, config)
    report.extra["points"] = [list(p) for p in points]
    _pde_check(report, spec, points, tols["pde_residual"])

    field_ = lambda q: einstein_metric(spec, q)  # noqa: E731
    reports = [curvature.curvature_report(field_, p) for p in points]
    branches = [einstein_metric(spec, p).signature_flag for p in points]
    report.check("einstein", max(r.einstein_residual for r in reports), tols["einstein"])
    for branch in Branch:
        lams = [r.lambda_hat for r, b in zip(reports, branches) if b is branch]
        if lams:
            spread = (max(lams) - min(lams)) / max(abs(np.mean(lams)), 1e-300)
            report.check(f"lambda_spread_{branch.value}", spread, tols["lambda_spread"],
                         lambda_hat=float(np.mean(lams)))

    if is_dipole(spec):
        worst = max(r.weyl_full_norm / r.metric_norm for r in reports)
        report.check("weyl", worst, tols["weyl_dipole"], kind="full")
    else:
        scale = max(r.weyl_full_norm for r in reports)
        worst = max((r.weyl_minus_norm if b is Branch.PositiveBranch else r.weyl_plus_norm) / scale
                    for r, b in zip(reports, branches))
        report.check("weyl", worst, tols["weyl"], kind="half")

    worst = max(max(abs(t) for t in r.twist_scalars) / max(1.0, r.metric_norm) for r in reports)
    report.check("twist", worst, tols["twist"])
    _joyce_check(report, spec, points, tols["joyce"])
    _structure_check(report, spec, points, tols)
    return report


def cmd_swann(config: RunConfig, spec: MultipoleSpec) -> Report:
    tols = config.tolerances
    report = Report("swann", spec.label)
    points = sample_points(spec, config)
    rng = np.random.default_rng(config.seed + 1)
    _structure_check(report, spec, points, tols)
    quats = [rng.normal(size=4) for _ in points]
    if spec.has_conjugate_pairs or spec.is_perturbed:
        report.skip("bd", "only real pole terms have a torus-quotient description")
    else:
        worst = 0.0
        for p, q in zip(points, quats):
            bd = swann.bd_for_spec(spec, p, q)
            ref = swann.monopole_matrix_killing_basis(spec, p, float(q @ q))
            worst = max(worst, float(np.max(np.abs(bd - ref)) / np.max(np.abs(ref))))
        report.check("bd", worst, tols["bd"])
    worst = 0.0
    for p, q in zip(points, quats):
        gram = swann.grammian_check(*swann.momentum_maps(spec, p, q))
        worst = max(worst, float(np.max(np.abs(gram - hyperboloid_matrix(p)))))
    report.check("grammian", worst, tols["grammian"])
    worst = 0.0
    for p in points:
        cone = float(rng.uniform(0.5, 2.0)) * hyperboloid_matrix(p)
        worst = max(worst, swann.wave_residual(swann.homogeneous_F(spec, cone)))
    report.check("wave", worst, tols["wave"])
    return report


def grid_rows(spec: MultipoleSpec, config: RunConfig) -> list:
    rho = np.linspace(*config.rho_bounds, config.n)
    eta = np.linspace(*config.eta_bounds, config.n)
    R, E = np.meshgrid(rho, eta, indexing="ij")
    F = eval_F(spec, (R.ravel(), E.ravel()), order=1)
    D = discriminant_jet(F, Jet.seed((R.ravel(), E.ravel()), 1)[0]).value
    classes = classify_values(F.value, D, local_scale(spec, (R.ravel(), E.ravel())))
    return [(float(r), float(e), float(f), float(d), k.value)
            for r, e, f, d, k in zip(R.ravel(), E.ravel(), F.value, D, classes)]


def _class_runs(classes) -> list:
    runs = []
    for k in classes:
        k = getattr(k, "value", k)
        if not runs or runs[-1][0] != k:
            runs.append([k, 0])
        runs[-1][1] += 1
    return runs


def cmd_moduli3(config: RunConfig) -> dict:
    if config.b is None or config.c is None:
        raise ParseError("moduli3 needs --b and --c")
    kind = threepole.Kind(config.kind)
    a, b, c = config.a, config.b, config.c
    params = threepole.ThreePoleParams(a, b, c, kind)
    thetas = np.linspace(-1.5, 1.5, 13)
    out = {"command": "moduli3", "params": {"a": a, "b": b, "c": c, "kind": kind.value}}
    if kind is threepole.Kind.TypeII:
        if a != 1:
            raise ParseError("the Type II region chart uses a = 1")
        out["region"] = str(threepole.typeII_region(b, c))
        boundaries = {}
        if b != 0 and c != 0:
            R, S, inside = threepole.crux_solution(b, c)
            boundaries["crux"] = {"R": R, "S": S, "in_domain": inside}
        out["boundaries"] = boundaries
        scans = {}
        for S in (-0.5, 0.0, 0.5):
            Rs = 1.0 + np.geomspace(1e-3, 1e3, 60)
            rho = np.sqrt(Rs * Rs - 1) * np.sqrt(1 - S * S)
            spec = threepole.threepole_spec(params)
            F = eval_F(spec, (rho, Rs * S), order=1)
            D = discriminant_jet(F, Jet.seed((rho, Rs * S), 1)[0]).value
            scans[f"S={S:g}"] = _class_runs(classify_values(F.value, D, local_scale(spec, (rho, Rs * S))))
        out["scan"] = scans
    else:
        out["region"] = None
        if b != 0:
            rows = [[float(t), *map(float, threepole.typeI_boundaries(b / a, c / a, t))] for t in thetas]
            out["boundaries"] = {"theta_R_inf_R_pm": rows}
        else:
            kind_name, s = threepole.typeI_b0_locus(c / a)
            out["boundaries"] = {"b0_locus": kind_name, "sin_theta": s}
        seq = []
        for R in np.concatenate([-np.geomspace(1e2, 1e-2, 30), np.geomspace(1e-2, 1e2, 30)]):
            p, spec = threepole.eh_point_and_spec(params, float(R), 0.0)
            seq.append(classify_point(spec, p).value)
        out["scan"] = {"theta=0": _class_runs(seq)}
    return out


# ---------------------------------------------------------------------------
# output

def _resolve_out(out: str | None, command: str, fmt: str) -> Path | None:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if out is None:
        return Path(base) / f"{command}.{fmt}" if base else None
    path = Path(out)
    return path if path.is_absolute() or not base else Path(base) / path


def _emit(text: str, target: Path | None):
    if target is None:
        sys.stdout.write(text)
        return
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


def _fmt(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _report_csv(report: Report) -> str:
    rows = [(name, c.get("max", ""), c.get("tol", ""), c.get("pass", "skipped"))
            for name, c in report.checks.items()]
    return write_csv(["check", "max", "tol", "pass"], rows)


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="sdtorus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    for name in ("verify", "grid", "moduli3", "swann"):
        p = sub.add_parser(name)
        p.add_argument("spec", nargs="?" if name == "moduli3" else None, help="multipole spec JSON file")
        p.add_argument("--rho-min", type=float, default=0.2)
        p.add_argument("--rho-max", type=float, default=3.0)
        p.add_argument("--eta-min", type=float, default=-2.0)
        p.add_argument("--eta-max", type=float, default=2.0)
        p.add_argument("--n", type=int, default=20, help="sample points (verify, swann) or grid size")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--margin", type=float, default=0.1,
                       help="relative distance of sample points from the zero sets of F and D")
        p.add_argument("--out", help=f"output path (relative paths go under ${OUTPUT_DIR_ENV})")
        p.add_argument("--format", choices=("json", "csv"), default="csv" if name == "grid" else "json")
        for tol in DEFAULT_TOLERANCES:
            p.add_argument(f"--tol-{tol.replace('_', '-')}", type=float, dest=f"tol_{tol}")
        if name == "moduli3":
            p.add_argument("--a", type=float, default=1.0)
            p.add_argument("--b", type=float)
            p.add_argument("--c", type=float)
            p.add_argument("--kind", choices=("TypeI", "TypeII"), default="TypeII")
    return parser


def config_from_args(args) -> RunConfig:
    tols = dict(DEFAULT_TOLERANCES)
    for key in DEFAULT_TOLERANCES:
        value = getattr(args, f"tol_{key}", None)
        if value is not None:
            tols[key] = value
    return RunConfig(args.command, args.spec, (args.rho_min, args.rho_max), (args.eta_min, args.eta_max),
                     args.n, args.seed, tols, args.out, args.format,
                     getattr(args, "a", 1.0), getattr(args, "b", None), getattr(args, "c", None),
                     getattr(args, "kind", "TypeII"), args.margin)


def run(config: RunConfig) -> int:
    target = _resolve_out(config.out, config.command, config.fmt)
    if config.command == "moduli3":
        try:
            data = cmd_moduli3(config)
        except InvalidInput as exc:
            raise ParseError(str(exc)) from exc
        if config.fmt == "csv":
            rows = [(k, v) for k, v in sorted(data.items()) if not isinstance(v, dict)]
            _emit(write_csv(["key", "value"], rows), target)
        else:
            _emit(write_json(data), target)
        return 0
    spec = load_spec(config.spec_path)
    if config.command == "grid":
        rows = grid_rows(spec, config)
        if config.fmt == "csv":
            _emit(write_csv(["rho", "eta", "F", "D", "class"], rows), target)
        else:
            keys = ("rho", "eta", "F", "D", "class")
            _emit(write_json([dict(zip(keys, r)) for r in rows]), target)
        return 0
    report = cmd_verify(config, spec) if config.command == "verify" else cmd_swann(config, spec)
    _emit(_report_csv(report) if config.fmt == "csv" else write_json(report.to_dict()), target)
    if report.failures:
        print("FAIL: " + ", ".join(report.failures), file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return run(config_from_args(args))
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateAtPoint as exc:
        print(f"FAIL: sampling: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
