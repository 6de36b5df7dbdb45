"""Command-line front end: ``cvxenvelope transform|geodesic|obstacle|verify|selftest``.

Inputs are field JSON files or expressions over ``--axis`` grids.  Every
subcommand can write a JSON run report; exit codes are 0 (all checks pass),
1 (a check failed) and 2 (bad input).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geodesic as geo
from . import legendre as leg
from . import obstacle as obst
from .exprlang import field_from_source, free_variables, parse
from .field import Axis, FieldError, ScalarField, c11_seminorm, lipschitz_seminorm, restrict, sub_box, write_field
from .legendre import ConvergenceError
from .reports import Report, _clean
from .rooftop import convexity_check, partial_min
from .selftest import load_fixtures, run_battery

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    wall_time_ms: int = 0

    @property
    def passed(self) -> bool:
        return all(c.get("pass", False) for c in self.checks)

    def add(self, check) -> None:
        self.checks.append(check.to_dict() if isinstance(check, Report) else _clean(check))

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "checks": self.checks,
            "pass": self.passed,
            "wall_time_ms": int(self.wall_time_ms),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


# input handling


def _axis(text: str) -> Axis:
    try:
        return Axis.parse(text)
    except (FieldError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_source(src: str, axes, name: str, report: RunReport, variables=None) -> ScalarField:
    """A field from a JSON file path or an expression evaluated on ``axes``."""
    path = Path(src)
    if src.endswith(".json") or path.is_file():
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise InputError(f"{name}: cannot read {src}: {exc.strerror}") from None
        try:
            f = ScalarField.from_json(data.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise InputError(f"{name}: {src}: {exc}") from None
        report.inputs[name] = {"file": src, "sha256": _digest(data)}
        return f
    if not axes:
        raise InputError(f"{name}: expression input needs --axis")
    try:
        if variables is None and len(axes) == 2:
            fv = free_variables(parse(src))
            # (s, x) product grids for geodesic-style fields, (x, y) otherwise
            variables = ("s", "x") if "s" in fv and "y" not in fv else ("x", "y")
        f = field_from_source(src, axes, variables=variables)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from None
    key = json.dumps({"expr": src, "axes": [a.to_dict() for a in axes]}, sort_keys=True)
    report.inputs[name] = {"expr": src, "axes": [a.to_dict() for a in axes], "sha256": _digest(key.encode())}
    return f


def write_columns(path, axes, columns: dict, names=("x", "y")) -> None:
    """Whitespace-separated text: one coordinate column per axis, then one column per entry."""
    grids = np.meshgrid(*[a.nodes() for a in axes], indexing="ij")
    names = list(names[: len(axes)])
    cols = [g.ravel() for g in grids] + [np.asarray(v).ravel() for v in columns.values()]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(names + list(columns)) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _finish(report: RunReport, args, t0: float) -> int:
    report.wall_time_ms = int(round((time.perf_counter() - t0) * 1000))
    text = report.to_json()
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    for c in report.checks:
        print(f"{c['check']:<28} {'PASS' if c['pass'] else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_FAIL


# transform

CONJUGATE_OPS = ("legendre", "neg-legendre", "neg-legendre-back")


def cmd_transform(args) -> int:
    t0 = time.perf_counter()
    report = RunReport("transform")
    f = load_source(args.input or args.expr, args.axis, "input", report)
    if args.op in CONJUGATE_OPS:
        if args.dual is None:
            raise InputError(f"--dual is required for --op {args.op}")
        if f.dim != 1:
            raise InputError(f"--op {args.op} needs a 1D field")
        out = {
            "legendre": leg.legendre_classical,
            "neg-legendre": leg.neg_legendre,
            "neg-legendre-back": leg.neg_legendre_back,
        }[args.op](f, args.dual)
    else:
        out = leg.convexify(f)
        report.add(convexity_check(out, tol=1e-9 * (1 + float(np.abs(out.values).max()))))
        majorized = float(max(0.0, (out.values - f.values).max()))
        report.add(Report("below_input", majorized, majorized == 0.0))
    write_field(args.output, out)
    if args.columns:
        write_columns(args.columns, out.axes, {"value": out.values})
    return _finish(report, args, t0)


# geodesic

ROUTES = ("semmes", "infconv", "rooftop")


def cmd_geodesic(args) -> int:
    t0 = time.perf_counter()
    report = RunReport("geodesic")
    axes = [args.axis] if args.axis else []
    psi0 = load_source(args.psi0, axes, "psi0", report)
    psi1 = load_source(args.psi1, axes, "psi1", report)
    if psi0.dim != 1 or not psi0.same_grid(psi1):
        raise InputError("psi0 and psi1 must be 1D fields on the same grid")
    if args.s_n < 2:
        raise InputError("--s-n must be at least 2")
    s_axis = Axis(0.0, 1.0, args.s_n)
    methods = ROUTES if args.method == "all" else (args.method,)
    sigma = args.sigma if args.sigma is not None else geo.default_sigma_axis(psi0, psi1)
    sols = {}
    for m in methods:
        if m == "semmes":
            sols[m] = geo.geodesic_semmes(psi0, psi1, s_axis)
        elif m == "infconv":
            sols[m] = geo.geodesic_infconv(psi0, psi1, s_axis)
        else:
            sols[m] = geo.geodesic_rooftop(psi0, psi1, s_axis, sigma)
    h = psi0.axes[0].h
    tol = args.tol if args.tol is not None else 5 * (h + sigma.h)
    if len(sols) > 1:
        diffs = geo.pairwise_sup(list(sols.values()))
        worst = max(diffs.values())
        report.add(Report("pairwise_agreement", worst, worst <= tol, details={**diffs, "tolerance": tol}))
    for m, g in sols.items():
        err = g.endpoint_error(psi0, psi1)
        report.add(Report(f"endpoints[{m}]", err, err <= tol, details={"tolerance": tol}))
        r = geo.sandwich_bounds(psi0, psi1, g)
        r.check = f"sandwich[{m}]"
        report.add(r)
        r = geo.fiberwise_lipschitz_check(g, psi0, psi1)
        r.check = f"fiberwise_lipschitz[{m}]"
        report.add(r)
    main = sols[methods[0]]
    ident = geo.dual_identity_error(main, psi0, psi1, sigma)
    report.add(Report("dual_identity", ident, ident <= tol, details={"tolerance": tol, "route": main.method}))
    write_field(args.output, main.values)
    if args.columns:
        write_columns(args.columns, main.values.axes, {f"psi_{m}": g.values.values for m, g in sols.items()},
                      names=("s", "x"))
    return _finish(report, args, t0)


# obstacle

VERIFIERS = ("cushion", "quadratic", "c11")


def _verify_list(text: str) -> list:
    names = [v for v in text.split(",") if v]
    bad = [v for v in names if v not in VERIFIERS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown verifier(s) {', '.join(bad)}; choose from {', '.join(VERIFIERS)}")
    return names


def _solve(method, obs, args):
    if method == "psor":
        return obst.solve_psor(obs, tol=args.tol, max_iter=args.max_iter)
    return obst.solve_penalty(obs, beta=args.beta, tol=args.tol, max_iter=args.max_iter)


def _expression_resampler(b0: str, b1: str):
    def resample(ax):
        return obst.RooftopObstacle(field_from_source(b0, ax), field_from_source(b1, ax))

    return resample


def cmd_obstacle(args) -> int:
    t0 = time.perf_counter()
    report = RunReport("obstacle")
    axes = list(args.axis or [])
    b0 = load_source(args.b0, axes, "b0", report)
    b1 = load_source(args.b1, axes, "b1", report)
    try:
        obs = obst.RooftopObstacle(b0, b1)
    except FieldError as exc:
        raise InputError(str(exc)) from None
    # expression inputs are re-evaluated on refined grids, file inputs interpolated
    exprs = all("expr" in report.inputs[k] for k in ("b0", "b1"))
    resample = _expression_resampler(args.b0, args.b1) if exprs else None
    sol = _solve(args.method, obs, args)
    info = sol.report()
    if args.method == "psor":
        ok = sol.residual_complementarity <= args.tol
        report.add(Report("residuals", sol.residual_complementarity, ok, details=info))
    else:
        ok = sol.residual_subharmonic <= args.tol
        report.add(Report("residuals", sol.residual_subharmonic, ok, details={**info, "beta": args.beta}))
    if args.cross_check:
        other = _solve("penalty" if args.method == "psor" else "psor", obs, args)
        d = float(np.abs(sol.u.values - other.u.values).max())
        bound = 1e-3 * (1 + float(np.abs(obs.g.values).max()))
        report.add(Report("cross_difference", d, d <= bound, details={"bound": bound, "other": other.method}))
    refined = None
    if args.verify:
        obs2 = obst.refined_problem(obs, resample)
        refined = (obs2, obst.solve_like(sol, obs2))
    for name in args.verify or []:
        fn = {"cushion": obst.verify_cushion, "quadratic": obst.verify_quadratic_growth, "c11": obst.verify_c11}[name]
        report.add(fn(sol, obs, refined=refined))
    write_field(args.output, sol.u)
    if args.columns:
        write_columns(args.columns, obs.axes, {"b0": b0.values, "b1": b1.values, "u": sol.u.values})
    return _finish(report, args, t0)


# verify

FIELD_CHECKS = ("convexity", "lipschitz", "c11", "kiselman", "sandwich", "fiberwise")


def _check_list(text: str) -> list:
    names = [v for v in text.split(",") if v]
    bad = [v for v in names if v not in FIELD_CHECKS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown check(s) {', '.join(bad)}; choose from {', '.join(FIELD_CHECKS)}")
    return names


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    report = RunReport("verify")
    axes = list(args.axis or [])
    f = load_source(args.field, axes, "field", report)
    checks = args.check or []
    if args.against is None and not checks:
        raise InputError("nothing to verify: pass --check and/or --against")
    for name in checks:
        if name in ("lipschitz", "c11") and args.bound is None:
            raise InputError(f"--bound is required for --check {name}")
        if name in ("kiselman", "sandwich", "fiberwise") and f.dim != 2:
            raise InputError(f"--check {name} needs a 2D field")
        if name in ("sandwich", "fiberwise") and (args.psi0 is None or args.psi1 is None):
            raise InputError(f"--psi0 and --psi1 are required for --check {name}")
    if args.against is not None:
        other = load_source(args.against, axes, "against", report)
        if not f.same_grid(other):
            raise InputError("--against field is on a different grid")
        d = float(np.abs(f.values - other.values).max())
        report.add(Report("sup_distance", d, d <= args.tol, details={"tolerance": args.tol}))
    g = psi0 = psi1 = None
    if any(c in ("sandwich", "fiberwise") for c in checks):
        x_axes = [f.axes[1]]
        psi0 = load_source(args.psi0, x_axes, "psi0", report)
        psi1 = load_source(args.psi1, x_axes, "psi1", report)
        if psi0.axes[0] != f.axes[1] or psi1.axes[0] != f.axes[1]:
            raise InputError("endpoints must live on the field's x axis")
        g = geo.GeodesicSolution(f.axes[0], f.axes[1], f, "input")
    for name in checks:
        if name == "convexity":
            report.add(convexity_check(f, tol=args.tol))
        elif name == "lipschitz":
            lip = lipschitz_seminorm(f)
            report.add(Report("lipschitz", max(0.0, lip - args.bound), lip <= args.bound + args.tol,
                              details={"lipschitz": lip, "bound": args.bound}))
        elif name == "c11":
            c = c11_seminorm(restrict(f, sub_box(f, args.box)))
            report.add(Report("c11", max(0.0, c - args.bound), c <= args.bound + args.tol,
                              details={"c11": c, "bound": args.bound, "box_fraction": args.box}))
        elif name == "kiselman":
            r = convexity_check(partial_min(f), tol=args.tol)
            r.check = "kiselman"
            report.add(r)
        elif name == "sandwich":
            report.add(geo.sandwich_bounds(psi0, psi1, g))
        elif name == "fiberwise":
            report.add(geo.fiberwise_lipschitz_check(g, psi0, psi1))
    return _finish(report, args, t0)


# selftest


def cmd_selftest(args) -> int:
    t0 = time.perf_counter()
    report = RunReport("selftest")
    path = args.fixtures
    fixtures = load_fixtures(path)
    if path is not None:
        report.inputs["fixtures"] = {"file": str(path), "sha256": _digest(Path(path).read_bytes())}
    else:
        from .selftest import default_fixture_path

        report.inputs["fixtures"] = {"file": "<package>", "sha256": _digest(default_fixture_path().read_bytes())}
    if args.output_dir:
        Path(args.output_dir).mkdir(parents=True, exist_ok=True)
    results = run_battery(fixtures, quick=args.quick, output_dir=args.output_dir)
    width = max([len(r["name"]) for r in results] + [8])
    print(f"{'fixture':<{width}}  result")
    for r in results:
        print(f"{r['name']:<{width}}  {'PASS' if r['pass'] else 'FAIL'}")
        report.add({"check": r["name"], "pass": r["pass"], "details": r["metrics"]})
    failed = [r["name"] for r in results if not r["pass"]]
    print(f"{len(results) - len(failed)}/{len(results)} fixtures passed")
    for name in failed:
        print(f"failed: {name}", file=sys.stderr)
    report.wall_time_ms = int(round((time.perf_counter() - t0) * 1000))
    if args.report:
        Path(args.report).write_text(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cvxenvelope", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("transform", help="Legendre-type transforms and convexification")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="field JSON file")
    src.add_argument("--expr", help="expression in x (and y)")
    t.add_argument("--axis", type=_axis, action="append", help="min,max,n (repeat for 2D)")
    t.add_argument("--op", required=True, choices=CONJUGATE_OPS + ("convexify",))
    t.add_argument("--dual", type=_axis, help="target axis min,max,n for conjugate ops")
    t.add_argument("--output", required=True)
    t.add_argument("--report")
    t.add_argument("--columns", help="also write columnar text here")
    t.set_defaults(func=cmd_transform)

    g = sub.add_parser("geodesic", help="geodesic between two convex endpoints")
    g.add_argument("--psi0", required=True, help="field file or expression in x")
    g.add_argument("--psi1", required=True)
    g.add_argument("--axis", type=_axis, help="x grid for expression endpoints")
    g.add_argument("--method", choices=ROUTES + ("all",), default="all")
    g.add_argument("--s-n", type=int, default=65)
    g.add_argument("--sigma", type=_axis, help="sigma window min,max,n")
    g.add_argument("--tol", type=float, help="agreement tolerance (default 5*(h + h_sigma))")
    g.add_argument("--output", required=True)
    g.add_argument("--report")
    g.add_argument("--columns")
    g.set_defaults(func=cmd_geodesic)

    o = sub.add_parser("obstacle", help="subharmonic envelope of a rooftop obstacle")
    o.add_argument("--b0", required=True, help="field file or expression")
    o.add_argument("--b1", required=True)
    o.add_argument("--axis", type=_axis, action="append")
    o.add_argument("--method", choices=("psor", "penalty"), default="psor")
    o.add_argument("--tol", type=float, default=1e-8)
    o.add_argument("--max-iter", type=int, default=200_000)
    o.add_argument("--beta", type=float, default=1e4)
    o.add_argument("--cross-check", action="store_true", help="also solve with the other method")
    o.add_argument("--verify", type=_verify_list, help="comma list of cushion,quadratic,c11")
    o.add_argument("--output", required=True)
    o.add_argument("--report")
    o.add_argument("--columns")
    o.set_defaults(func=cmd_obstacle)

    v = sub.add_parser("verify", help="run checks on an existing field")
    v.add_argument("--field", required=True, help="field file or expression")
    v.add_argument("--axis", type=_axis, action="append")
    v.add_argument("--check", type=_check_list, help="comma list of " + ",".join(FIELD_CHECKS))
    v.add_argument("--against", help="reference field for a sup-distance check")
    v.add_argument("--psi0")
    v.add_argument("--psi1")
    v.add_argument("--bound", type=float)
    v.add_argument("--box", type=float, default=0.5, help="interior box fraction for c11")
    v.add_argument("--tol", type=float, default=0.0)
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("selftest", help="run the fixture battery")
    s.add_argument("--quick", action="store_true", help="1D fixtures only")
    s.add_argument("--fixtures", help="alternative fixture file")
    s.add_argument("--output-dir", help="write fixture fields here")
    s.add_argument("--report")
    s.set_defaults(func=cmd_selftest)
    return p


# flags whose values may legitimately start with "-"
VALUE_FLAGS = ("--axis", "--dual", "--sigma", "--expr", "--field", "--against", "--psi0", "--psi1", "--b0", "--b1")


def _join_negative_values(argv: list) -> list:
    # "--axis -4,4,9" or "--expr -x" would otherwise be read as an option
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
