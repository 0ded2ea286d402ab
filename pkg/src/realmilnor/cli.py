"""Command-line driver.

    milnor analyze -p "x^3 - y^2" -v x,y --t="-3,0" --oracle
    milnor critical-points -p "x^3 - y^2 + 3*x" -v x,y
    milnor oracle -p "x^3 - y^2" -v x,y --epsilon 0.01
    milnor export-mesh -p "x^3 - y^2" -v x,y --epsilon 0.01 --out fib.off
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .fibre import GreatCircleConfig
from .homology import HomologyReport
from .oracle import NonManifoldMeshError, UnsupportedDimensionError, extract_fibre, relative_homology_mesh, write_off
from .pipeline import (
    SCHEMA_VERSION,
    AnalysisConfig,
    AnalysisError,
    analyze,
    fibre_polynomial,
    report_json,
    report_text,
)
from .poly import PolynomialSyntaxError, parse, perturb, to_fraction
from .sphcrit import SolverConfig, ambient_critical_points, find_critical_points


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _variables(text: str) -> tuple[str, ...]:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    if not names:
        raise argparse.ArgumentTypeError("empty variable list")
    return names


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-p", "--polynomial", required=True, help='use -p="-x^2 + ..." for a leading minus')
    p.add_argument("-v", "--variables", required=True, type=_variables)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=None, help="fibre level (default: automatic)")
    p.add_argument("--t", type=_floats, default=None, help='perturbation vector, e.g. --t="-3,0"')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sign", choices=["+", "-", "both"], default="+")
    p.add_argument("--oracle", action="store_true", help="check against a meshed fibre")
    p.add_argument("--resolution", type=float, default=None, help="mesh grid spacing")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--out", default=None, help="write the report (or the mesh) here")
    p.add_argument("--export-mesh", default=None, help="OFF path for the oracle mesh")
    p.add_argument("--no-zero-locus-check", action="store_true")
    p.add_argument("--no-timings", action="store_true", help="omit the timings block from JSON")
    p.add_argument("--starts", type=int, default=None, help="Newton starts on the sphere")
    p.add_argument("--max-attempts", type=int, default=16)


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for reports with caveats; usage errors are hard errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="milnor", description="Relative homology of real Milnor fibres.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("analyze", "full pipeline"),
        ("critical-points", "critical points of f_t on the sphere (t = 0 unless given)"),
        ("oracle", "mesh homology of {f_t = epsilon} in the ball"),
        ("export-mesh", "write the meshed fibre as OFF"),
    ]:
        _common(sub.add_parser(name, help=text))
    return parser


def _config(args) -> AnalysisConfig:
    return AnalysisConfig(
        polynomial=args.polynomial,
        variables=args.variables,
        delta=args.delta,
        epsilon=args.epsilon,
        t=args.t,
        seed=args.seed,
        sign=args.sign,
        oracle=args.oracle,
        resolution=args.resolution,
        export_mesh=args.export_mesh,
        zero_locus_check=not args.no_zero_locus_check,
        max_attempts=args.max_attempts,
        solver=SolverConfig(num_starts=args.starts, seed=args.seed),
        great_circle=GreatCircleConfig(seed=args.seed),
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fixed_polynomial(cfg: AnalysisConfig):
    f = parse(cfg.polynomial, cfg.variables)
    t = cfg.t or (0.0,) * len(cfg.variables)
    return perturb(f, [to_fraction(v) for v in t]), t


def _cmd_analyze(args) -> int:
    cfg = _config(args)
    env = analyze(cfg)
    if args.format == "json":
        _emit(report_json(env, include_timings=not args.no_timings) + "\n", args.out)
    else:
        _emit(report_text(env), args.out)
    return env.exit_code


def _cmd_critical_points(args) -> int:
    cfg = _config(args)
    f_t, t = _fixed_polynomial(cfg)
    sections = {}
    for sign in cfg.signs():
        g = fibre_polynomial(f_t, sign)
        pts = find_critical_points(g, cfg.delta, cfg.solver)
        amb = ambient_critical_points(g, cfg.delta, cfg.solver)
        sections["positive" if sign == "+" else "negative"] = {
            "function": str(g),
            "critical_points": [p.to_dict() for p in pts],
            "ambient_critical_points": [a.to_dict() for a in amb],
        }
    doc = {"schema_version": SCHEMA_VERSION, "command": "critical-points", "t": list(t),
           "delta": cfg.delta, "fibres": sections}
    if args.format == "json":
        _emit(report_json(doc) + "\n", args.out)
    else:
        lines = []
        for name, sec in sections.items():
            lines.append(f"[{name}] {sec['function']}")
            for p in sec["critical_points"]:
                loc = ", ".join(f"{c:.9f}" for c in p["location"])
                lines.append(f"  ({loc})  value {p['value']:.9g}  index {p['morse_index']}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _mesh(args):
    cfg = _config(args)
    if cfg.epsilon is None:
        raise AnalysisError("--epsilon is required for the mesh commands")
    f_t, t = _fixed_polynomial(cfg)
    sign = "-" if cfg.sign == "-" else "+"
    return cfg, extract_fibre(fibre_polynomial(f_t, sign), cfg.epsilon, cfg.delta, cfg.resolution)


def _cmd_oracle(args) -> int:
    cfg, mesh = _mesh(args)
    h: HomologyReport = relative_homology_mesh(mesh)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "oracle",
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "resolution": mesh.resolution,
        "vertices": int(len(mesh.vertices)),
        "cells": int(len(mesh.cells)),
        "boundary_components": mesh.boundary_components(),
        "homology": h.to_dict(),
    }
    if args.format == "json":
        _emit(report_json(doc) + "\n", args.out)
    else:
        groups = ", ".join(f"H_{k} = {h.group(k)}" for k in range(mesh.n + 1))
        _emit(f"{groups}\nboundary components: {mesh.boundary_components()}\n", args.out)
    return 0


def _cmd_export_mesh(args) -> int:
    cfg, mesh = _mesh(args)
    path = args.out or args.export_mesh
    if not path:
        raise AnalysisError("export-mesh needs --out")
    write_off(mesh, path)
    return 0


COMMANDS = {
    "analyze": _cmd_analyze,
    "critical-points": _cmd_critical_points,
    "oracle": _cmd_oracle,
    "export-mesh": _cmd_export_mesh,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (PolynomialSyntaxError, AnalysisError, ValueError, NonManifoldMeshError, UnsupportedDimensionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
