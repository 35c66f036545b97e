"""Command line entry point.

Exit codes: 0 success, 1 a verification failed, 2 usage or configuration error.
Reports are JSON (``schema_version`` 1, sorted keys, floats at 17 significant
digits) on stdout or ``--out``.  Trajectories are CSV with a
``# schema_version: 1`` line followed by the header ``t,a,adot,rho``.

Config files are TOML.  Numbers may be integers, floats, or quoted rationals
such as ``"1/10"``; integers and rationals stay exact.  Sections::

    [algebra]
    kind = "diagonal"              # or "extended2d"
    a = [1, 1]                     # diagonal: nonzero scale vector, length d
    # extended2d takes the scalars a, e, f, h, r, s (missing ones default to
    # a = h = 1, the rest 0)

    [deformation]
    theta = [[0, "1/10"], ["-1/10", 0]]   # full skew d x d matrix
    # or time_space = ["1/10"]            # Theta_{0j}, j = 1..d-1

    [cosmology]                    # optional defaults for the cosmology flags
    theta = 0.5
    C = 1.0
    a0 = 0.0
    t_end = 10.0

Error codes (printed as ``error [code]`` on stderr, exit 2):
``cli.config.syntax`` (with line and column), ``cli.config.missing-file``,
``cli.config.missing-section``, ``cli.config.missing-key``, ``cli.config.type``,
``cli.config.value``, ``deformation.non-skew``, ``algebra.faithfulness``.
Module errors keep their own module-tagged codes.

Expressions for ``check-jacobi --expr`` use the ncalc grammar, e.g.
``x0*dx1 + 2i*x1*x1*dx0``.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import algebra, centrality, cosmology, deformation, gravity, qoperators, spacetimes
from .errors import ConfigError, NCWarpError
from .ncalc import RewriteContext, format_expression, normal_form, parse_expression

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# output


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v + 0.0, ".17g")  # folds -0.0


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, Fraction, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        return _fmt_float(float(obj))
    return _json_str(str(obj))


def _json_str(s: str) -> str:
    import json

    return json.dumps(s)


def _summary(line: str):
    sys.stderr.write(line + "\n")


def emit(report: dict, out: str | None):
    text = to_json({"schema_version": SCHEMA_VERSION, **report}) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def write_csv(traj: cosmology.Trajectory, path: str):
    lines = [f"# schema_version: {SCHEMA_VERSION}", "t,a,adot,rho"]
    for row in traj.rows():
        lines.append(",".join(format(float(v), ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# configuration


def scalar(value, where: str):
    """Numbers stay exact when given as integers or rational strings like "1/10"."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean", "cli.config.type")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{where}: cannot read {value!r} as a number", "cli.config.type") from None
    raise ConfigError(f"{where}: expected a number", "cli.config.type")


class RunConfig:
    """Validated view of a TOML run configuration."""

    def __init__(self, data: dict, source: str = "<config>"):
        self.data = data
        self.source = source

    def section(self, name: str) -> dict:
        if name not in self.data:
            raise ConfigError(f"{self.source}: missing [{name}] section", "cli.config.missing-section")
        sec = self.data[name]
        if not isinstance(sec, dict):
            raise ConfigError(f"{self.source}: [{name}] must be a table", "cli.config.type")
        return sec

    def has(self, name: str) -> bool:
        return name in self.data

    def algebra_spec(self):
        sec = self.section("algebra")
        kind = sec.get("kind", "diagonal")
        if kind == "diagonal":
            if "a" not in sec:
                raise ConfigError("[algebra] needs a scale vector 'a'", "cli.config.missing-key")
            return algebra.DiagonalAlgebraSpec([scalar(v, "algebra.a") for v in sec["a"]])
        if kind == "extended2d":
            keys = {k: scalar(sec[k], f"algebra.{k}") for k in ("a", "e", "f", "h", "r", "s") if k in sec}
            return algebra.Extended2DAlgebraSpec(**keys)
        raise ConfigError(f"[algebra] unknown kind {kind!r}", "cli.config.value")

    def structure_constants(self):
        spec = self.algebra_spec()
        if isinstance(spec, algebra.DiagonalAlgebraSpec):
            return algebra.make_diagonal(spec)
        return algebra.make_extended2d(spec)

    def theta(self, d: int | None = None) -> deformation.DeformationMatrix:
        sec = self.section("deformation")
        if "theta" in sec:
            rows = [[scalar(v, "deformation.theta") for v in row] for row in sec["theta"]]
            theta = deformation.DeformationMatrix(rows)
        elif "time_space" in sec:
            theta = deformation.DeformationMatrix.time_space([scalar(v, "deformation.time_space") for v in sec["time_space"]])
        else:
            raise ConfigError("[deformation] needs 'theta' or 'time_space'", "cli.config.missing-key")
        if d is not None and theta.d != d:
            raise ConfigError(f"[deformation] has dimension {theta.d}, algebra has {d}", "cli.config.value")
        return theta


def parse_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{p}: no such file", "cli.config.missing-file")
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        # the decoder reports "(at line L, column C)"
        raise ConfigError(f"{p}: {exc}", "cli.config.syntax") from None
    cfg = RunConfig(data, str(p))
    # eager validation of the shared sections
    if cfg.has("algebra"):
        spec = cfg.algebra_spec()
        d = spec.d if isinstance(spec, algebra.DiagonalAlgebraSpec) else 2
        if cfg.has("deformation"):
            cfg.theta(d)
    elif cfg.has("deformation"):
        cfg.theta()
    return cfg


def _load(args) -> RunConfig:
    if getattr(args, "config", None):
        return parse_config(args.config)
    return RunConfig({}, "<flags>")


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_jacobi(args) -> int:
    cfg = _load(args)
    C = cfg.structure_constants()
    report = algebra.check_jacobi(C)
    out = {"command": "check-jacobi", **report.as_dict()}
    spec = cfg.algebra_spec()
    if isinstance(spec, algebra.Extended2DAlgebraSpec):
        out["extended_constraints"] = [float(v) for v in algebra.extended_constraints(spec)]
    if args.expr:
        ctx = RewriteContext(C)
        out["normal_form"] = format_expression(normal_form(parse_expression(args.expr, exact=C.exact), ctx))
    emit(out, args.out)
    return EXIT_OK if report.consistent else EXIT_FAIL


def cmd_deform(args) -> int:
    cfg = _load(args)
    spec = cfg.algebra_spec()
    if not isinstance(spec, algebra.DiagonalAlgebraSpec):
        raise ConfigError("deform needs a diagonal algebra", "deformation.unsupported-class")
    theta = cfg.theta(spec.d)
    metric = deformation.warp_line_element(spec, theta)
    emit({"command": "deform", **metric.as_dict()}, args.out)
    return EXIT_OK


def _b_vector(text: str | None, n: int = 3) -> tuple:
    if text is None:
        return (0.0,) * n
    parts = [float(Fraction(p)) for p in text.split(",")]
    if len(parts) == 1:
        # a single value is the magnitude along the first axis
        return (parts[0],) + (0.0,) * (n - 1)
    return tuple(parts)


def cmd_metric(args) -> int:
    if args.family == "frw":
        real = spacetimes.frw_from_deformation(args.H, args.theta_param)
        out = {
            "command": "metric",
            **real.metric.as_dict(),
            "realization": {
                "a": [float(v) for v in real.spec.a],
                "theta_time_space": [float(real.theta.entries[0][j]) for j in range(1, real.theta.d)],
                "dropped_b": [float(v) for v in real.b],
            },
            "round_trip_exact": spacetimes.frw_round_trip(real) == real.metric.as_deformed(),
        }
        emit(out, args.out)
        return EXIT_OK if out["round_trip_exact"] else EXIT_FAIL
    if args.family == "ultrastatic":
        cfg = _load(args)
        spec = cfg.algebra_spec()
        metric = spacetimes.ultrastatic_from_deformation(spec, cfg.theta(spec.d))
        emit({"command": "metric", **metric.as_dict()}, args.out)
        return EXIT_OK
    if args.family == "deformed-frw":
        if args.config:
            cfg = _load(args)
            spec = cfg.algebra_spec()
            metric = spacetimes.deformed_frw(spec, cfg.theta(spec.d))
        else:
            metric = spacetimes.DeformedFRWMetric(_b_vector(args.b), 0.0)
        emit({"command": "metric", **metric.as_dict()}, args.out)
        return EXIT_OK
    raise ConfigError(f"unknown family {args.family!r}", "cli.usage")


def _tensor_strings(report: gravity.CurvatureReport) -> dict:
    import sympy

    coords = sympy.symbols(f"t x1:{report.metric.d}")
    out = {}
    for m in range(report.metric.d):
        for n in range(m, report.metric.d):
            e = report.einstein[m][n]
            if not e.is_zero():
                out[f"G{m}{n}"] = str(e.to_sympy(coords))
    return out


def cmd_curvature(args) -> int:
    scale = None
    if args.family == "frw":
        metric = gravity.frw_metric(H=args.H)
        if args.H is None:
            scale = gravity.ScaleFactor(args.a_of_t)
    elif args.family == "deformed-frw":
        metric = gravity.deformed_frw_metric(_b_vector(args.b))
        scale = gravity.ScaleFactor(args.a_of_t)
    elif args.family == "minkowski":
        metric = gravity.minkowski()
    else:
        raise ConfigError(f"unknown family {args.family!r}", "cli.usage")
    report = gravity.einstein_tensor(metric)
    rng = np.random.default_rng(args.seed)
    g = gravity.metric_function(metric, scale)
    worst = bianchi = 0.0
    for _ in range(args.points):
        x = [rng.uniform(0.5, 2.0)] + list(rng.uniform(-1, 1, metric.d - 1))
        sym = gravity.evaluate_tensor(report.einstein, x, scale, metric.params)
        worst = max(worst, gravity.relative_error(sym, gravity.numeric_curvature_oracle(g, x)))
        bianchi = max(bianchi, float(np.max(np.abs(gravity.bianchi_residual(report, x, scale, metric.params)))))
    out = {
        "command": "curvature",
        "family": args.family,
        "params": dict(metric.params),
        "scale_factor": str(scale.expr) if scale is not None else None,
        "einstein": _tensor_strings(report),
        "oracle": {"points": args.points, "max_relative_error": worst, "max_bianchi": bianchi},
    }
    ok = worst <= 1e-6 and bianchi <= 1e-5
    if args.family == "deformed-frw":
        fe = gravity.verify_field_equations(gravity.deformed_frw_metric(n=metric.d - 1))
        out["field_equations"] = fe.as_dict()
        ok = ok and fe.e1.is_zero() and all(m.is_zero() for m in fe.momentum)
    emit(out, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cosmology(args) -> int:
    values = {"theta": args.theta, "C": args.C, "a0": args.a0, "t_end": args.t_end}
    if args.config:
        sec = _load(args).section("cosmology")
        for k in values:
            if values[k] is None and k in sec:
                values[k] = float(scalar(sec[k], f"cosmology.{k}"))
    if values["theta"] is None or values["C"] is None:
        raise ConfigError("cosmology needs --theta and --C", "cli.usage")
    params = cosmology.CosmologyParams(
        theta=float(values["theta"]),
        C=float(values["C"]),
        a0=float(values["a0"] or 0.0),
        t_span=(args.t_start, float(values["t_end"] or 10.0)),
        samples=args.samples,
    )
    traj = cosmology.integrate(params)
    res = cosmology.friedmann_residuals(traj)
    if args.out:
        write_csv(traj, args.out)
    out = {
        "command": "cosmology",
        "params": {"theta": params.theta, "C": params.C, "a0": params.a0, "t_span": list(params.t_span)},
        "residuals": res.as_dict(),
        "max_constraint": traj.max_constraint,
        "negative_density": traj.negative_density,
        "final": {"t": float(traj.t[-1]), "a": float(traj.a[-1]), "adot": float(traj.adot[-1])},
    }
    emit(out, args.report)
    _summary(f"cosmology: a(t_end) = {out['final']['a']:.6g}, max residual {max(res.as_dict().values()):.6g}")
    ok = max(res.e3, res.e4, res.continuity, res.constraint) <= 1e-8
    return EXIT_OK if ok else EXIT_FAIL


def cmd_centrality(args) -> int:
    n = args.n
    theta_value = scalar(args.theta, "--theta")
    a_value = scalar(args.a, "--a")
    spec = algebra.DiagonalAlgebraSpec([a_value] * (n + 1))
    theta = deformation.DeformationMatrix.time_space([theta_value] * n)
    sol = centrality.solve_omega(spec, theta)
    omega = scalar(args.omega, "--omega") if args.omega is not None else sol.omega
    report = centrality.centrality_residual(spec, theta, [omega] * n, order=args.order)
    time_zero = report.components[(0, 0, 0)].is_zero()
    out = {
        "command": "centrality",
        "n": n,
        "theta": float(theta_value),
        "omega": float(omega),
        "solved_omega": float(sol.omega),
        "one_over_omega_theta": float(1 / (Fraction(omega) * Fraction(theta_value)))
        if isinstance(omega, (int, Fraction)) and isinstance(theta_value, (int, Fraction))
        else 1 / (float(omega) * float(theta_value)),
        "time_component_zero": time_zero,
        "full_system_consistent": sol.consistent,
        "report": report.as_dict(),
    }
    emit(out, args.out)
    ok = report.central if args.strict else time_zero
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_operators(args) -> int:
    cfg = qoperators.RepresentationConfig(args.N, args.a, args.q)
    X = qoperators.build_X(cfg)
    dX = qoperators.build_dX(cfg, X)
    M = cfg.M
    out = {
        "command": "verify-operators",
        "N": args.N,
        "trusted_block": M,
        "conjugation_block": qoperators.conjugation_trust(args.N, args.a * args.p),
        "ccr": qoperators.ccr_residual(args.N, M),
        "commutator": qoperators.verify_commutator(X, dX, args.a),
        "commutator_unprojected": qoperators.verify_commutator(X, dX, args.a, projected=False),
        "adjoint_action": qoperators.verify_adjoint_action(X, dX, args.a, args.p),
        "hermiticity": qoperators.hermiticity_report(cfg),
    }
    ok = (
        out["ccr"] <= 1e-10
        and out["commutator"] <= 1e-10
        and out["adjoint_action"] <= 1e-6
        and max(out["hermiticity"].values()) <= 1e-12
    )
    if args.slow_quadrature:
        small = qoperators.RepresentationConfig(min(args.grid, 24), args.a, args.q)
        q = qoperators.quadrature_warped_convolution(small, small, args.quad_theta, eps_values=tuple(args.eps))
        out["quadrature"] = q.as_dict()
        ok = ok and q.monotone and q.extrapolated <= 0.05
    emit(out, args.out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncwarp", description="Deformed differential calculus toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="TOML run configuration")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("check-jacobi", help="Jacobi consistency of the algebra"), True)
    p.add_argument("--expr", help="also print the normal form of this expression")
    p.set_defaults(func=cmd_check_jacobi)

    p = common(sub.add_parser("deform", help="warped line element as exponent vectors"), True)
    p.set_defaults(func=cmd_deform)

    p = common(sub.add_parser("metric", help="named metric families"))
    p.add_argument("--family", required=True, choices=["ultrastatic", "frw", "deformed-frw"])
    p.add_argument("--H", type=lambda s: scalar(s, "--H"), default=1)
    p.add_argument("--theta", dest="theta_param", type=lambda s: scalar(s, "--theta"), default=1)
    p.add_argument("--b")
    p.set_defaults(func=cmd_metric)

    p = common(sub.add_parser("curvature", help="Einstein tensor and oracle cross-check"))
    p.add_argument("--family", required=True, choices=["frw", "deformed-frw", "minkowski"])
    p.add_argument("--H", type=float)
    p.add_argument("--b", help="b magnitude along x1, or a comma-separated vector")
    p.add_argument("--a-of-t", default="t^(2/3)")
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("cosmology", help="integrate the Friedmann system")
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--a0", type=float)
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-end", type=float)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--report", help="write the JSON summary here instead of stdout")
    p.set_defaults(func=cmd_cosmology)

    p = common(sub.add_parser("centrality", help="solve and check the centrality condition"))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--theta", default="1/10")
    p.add_argument("--a", default="1")
    p.add_argument("--omega")
    p.add_argument("--order", type=int, default=30)
    p.add_argument("--strict", action="store_true", help="require every component, not only the time component")
    p.set_defaults(func=cmd_centrality)

    p = common(sub.add_parser("verify-operators", help="oscillator-matrix checks"))
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.3)
    p.add_argument("--slow-quadrature", action="store_true")
    p.add_argument("--eps", type=float, nargs="+", default=[0.4, 0.2, 0.1])
    p.add_argument("--grid", type=int, default=24)
    p.add_argument("--quad-theta", type=float, default=0.1)
    p.set_defaults(func=cmd_verify_operators)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NCWarpError as exc:
        sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
