"""End-to-end analysis: morsify, locate sphere critical points, pick epsilon,
read off handles and relative homology, optionally check against a mesh.

Exit codes: 0 clean, 2 report produced with blocking caveats, 1 hard error.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .fibre import (
    BandEmptyError,
    EmptyFibreError,
    GreatCircleConfig,
    MilnorData,
    check_isolated_singularity,
    check_milnor_radius,
    check_zero_locus,
    epsilon_bracket,
    filter_fibre,
    great_circle_check,
    select_epsilon,
)
from .homology import HomologyReport, handle_decomposition, relative_homology
from .morsify import MorsificationError, PerturbationParams, morsify, validate_morse
from .oracle import NonManifoldMeshError, compare, extract_fibre, relative_homology_mesh, write_off
from .poly import Polynomial, parse, perturb, to_fraction
from .sphcrit import SolverConfig, ambient_critical_points, find_critical_points

__all__ = [
    "SCHEMA_VERSION",
    "BLOCKING_CAVEATS",
    "AnalysisConfig",
    "AnalysisError",
    "ReportEnvelope",
    "analyze",
    "fibre_polynomial",
    "report_json",
    "report_text",
]

SCHEMA_VERSION = "1.0"

# caveats that turn a successful run into exit code 2; anything else is informational
BLOCKING_CAVEATS = frozenset({
    "great_circle_violation",
    "index_zero_handle",
    "empty_positive_fibre",
    "empty_negative_fibre",
    "milnor_radius_failed",
    "singular_point_off_origin",
    "oracle_disagree",
    "oracle_failed",
    "morse_validation_failed",
    "epsilon_outside_band",
})

SIGN_NAMES = {"+": "positive", "-": "negative"}


class AnalysisError(RuntimeError):
    """Hard failure: no report can be produced (exit code 1)."""


@dataclass(frozen=True)
class AnalysisConfig:
    polynomial: str
    variables: tuple[str, ...]
    delta: float = 1.0
    epsilon: float | None = None
    t: tuple[float, ...] | None = None
    seed: int = 0
    sign: str = "+"
    oracle: bool = False
    resolution: float | None = None
    export_mesh: str | None = None
    zero_locus_check: bool = True
    max_attempts: int = 16
    magnitude: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    great_circle: GreatCircleConfig = field(default_factory=GreatCircleConfig)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("explicit epsilon must be positive")
        if self.t is not None:
            object.__setattr__(self, "t", tuple(float(v) for v in self.t))
            if len(self.t) != len(self.variables):
                raise ValueError(f"t has {len(self.t)} entries for {len(self.variables)} variables")
        if self.sign not in ("+", "-", "both"):
            raise ValueError("sign must be '+', '-' or 'both'")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def signs(self) -> tuple[str, ...]:
        return ("+", "-") if self.sign == "both" else (self.sign,)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variables"] = list(self.variables)
        d["t"] = None if self.t is None else list(self.t)
        return d


@dataclass
class ReportEnvelope:
    config: dict
    checks: dict
    fibres: dict
    caveats: list
    notes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION
    tool_version: str = __version__

    @property
    def exit_code(self) -> int:
        return 2 if any(c in BLOCKING_CAVEATS for c in self.caveats) else 0

    def fibre(self, sign: str = "+") -> dict:
        return self.fibres[SIGN_NAMES[sign]]

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "config": self.config,
            "checks": self.checks,
            "fibres": self.fibres,
            "caveats": list(self.caveats),
            "notes": list(self.notes),
            "exit_code": self.exit_code,
        }
        if include_timings:
            d["timings"] = self.timings
        return d


class _Clock:
    def __init__(self):
        self.timings = {}

    def __call__(self, name):
        clock = self

        class _Span:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                clock.timings[name] = clock.timings.get(name, 0.0) + time.perf_counter() - self.t0

        return _Span()


def fibre_polynomial(f_t: Polynomial, sign: str) -> Polynomial:
    """The function whose positive fibre is the requested fibre of ``f_t``."""
    return f_t if sign == "+" else -f_t


def _hypothesis_checks(f: Polynomial, cfg: AnalysisConfig, clock):
    caveats = []
    with clock("zero_locus"):
        zl = check_zero_locus(f, cfg.delta, seed=cfg.seed)
    if cfg.zero_locus_check and not zl.positive_dimensional:
        raise AnalysisError(
            "zero set of f does not meet small spheres around the origin (empty link); "
            "f must change sign near its singular point"
        )
    with clock("isolated_singularity"):
        witness = check_isolated_singularity(f, cfg.delta, cfg.solver)
    if witness is not None:
        caveats.append("singular_point_off_origin")
    with clock("milnor_radius"):
        radius = check_milnor_radius(f, cfg.delta, cfg.solver)
    if not radius.passed:
        caveats.append("milnor_radius_failed")
    zl_dict = zl.to_dict()
    zl_dict["isolated_singularity"] = witness is None
    zl_dict["singular_witness"] = None if witness is None else [float(c) for c in witness]
    return {"zero_locus": zl_dict, "milnor_radius": radius.to_dict()}, radius, caveats


def _perturbation(f: Polynomial, cfg: AnalysisConfig, clock):
    """(params, f_t, attempts); attempts is 0 for an explicit t."""
    if cfg.t is not None:
        params = PerturbationParams.explicit(cfg.t)
        f_t = perturb(f, [to_fraction(v) for v in cfg.t])
        return params, f_t, 0
    with clock("morsify"):
        try:
            m = morsify(f, cfg.delta, seed=cfg.seed, max_attempts=cfg.max_attempts,
                        magnitude=cfg.magnitude, cfg=cfg.solver)
        except MorsificationError as err:
            raise AnalysisError(str(err)) from err
    return m.params, m.f_t, m.attempts


def _fibre_section(g_t: Polynomial, sign: str, params: PerturbationParams, radius_verdict,
                   cfg: AnalysisConfig, clock, mesh_path: str | None):
    name = SIGN_NAMES[sign]
    caveats: list[str] = []
    with clock(f"{name}.critical_points"):
        points = find_critical_points(g_t, cfg.delta, cfg.solver)
        ambient = ambient_critical_points(g_t, cfg.delta, cfg.solver)
    ambient_values = [a.value for a in ambient]

    rationale: dict = {"a": None, "b": None, "rule": None}
    try:
        a, b = epsilon_bracket(points, ambient_values)
        rationale.update(a=a, b=b)
    except EmptyFibreError:
        a = b = None
    if a is None:
        eps = cfg.epsilon
        rationale["rule"] = "explicit" if eps is not None else "empty fibre"
    elif cfg.epsilon is not None:
        eps = cfg.epsilon
        rationale["rule"] = "explicit"
        if not a < eps < b:
            caveats.append("epsilon_outside_band")
    else:
        try:
            eps = select_epsilon(points, ambient_values)
        except BandEmptyError as err:
            raise AnalysisError(f"{name} fibre: {err}") from err
        rationale["rule"] = "sqrt(max(a, 1e-12) * b)"
        # epsilon is chosen from the perturbed critical values, not fixed beforehand
        rationale["reselected_after_morsification"] = True

    report = validate_morse(g_t, points, eps, ambient_values)
    if not report.passed:
        caveats.append("morse_validation_failed")
    if any(p.degenerate for p in points if eps is None or p.value > eps):
        raise AnalysisError(f"{name} fibre: degenerate critical point in the fibre; choose another t")

    section: dict = {
        "sign": sign,
        "function": str(g_t),
        "milnor_data": MilnorData(cfg.delta, eps if eps is not None else float("nan"), params,
                                  radius_verdict, rationale).to_dict(),
        "morse_validation": report.to_dict(),
        "critical_points": [p.to_dict() for p in points],
        "ambient_critical_points": [a.to_dict() for a in ambient],
        "great_circle": None,
        "oracle": None,
    }

    if a is None:
        caveats.append(f"empty_{name}_fibre")
        inside = []
    else:
        inside = filter_fibre(points, eps, "+")
    handles = handle_decomposition(inside)
    morse_h = relative_homology(handles)
    caveats.extend(morse_h.caveats)
    section["handles"] = handles.to_dict()
    section["homology"] = morse_h.to_dict()

    if eps is not None and a is not None:
        with clock(f"{name}.great_circle"):
            gc = great_circle_check(g_t, cfg.delta, eps, cfg.great_circle)
        section["great_circle"] = gc.to_dict()
        if gc.violation:
            caveats.append("great_circle_violation")

    if g_t.nvars >= 3:
        caveats.append("completeness_heuristic")

    if cfg.oracle and a is not None:
        section["oracle"] = _oracle_section(g_t, eps, morse_h, cfg, clock, name, mesh_path, caveats)

    section["caveats"] = list(dict.fromkeys(caveats))
    return section, caveats


def _oracle_section(g_t, eps, morse_h: HomologyReport, cfg, clock, name, mesh_path, caveats):
    if g_t.nvars not in (2, 3):
        caveats.append("oracle_unsupported_dimension")
        return {"status": "unsupported_dimension"}
    with clock(f"{name}.oracle"):
        try:
            mesh = extract_fibre(g_t, eps, cfg.delta, cfg.resolution)
        except NonManifoldMeshError as err:
            caveats.append("oracle_failed")
            return {"status": "failed", "error": str(err)}
        mesh_h = relative_homology_mesh(mesh)
        verdict = compare(morse_h, mesh_h)
    if mesh_path:
        write_off(mesh, mesh_path)
    if not verdict.agree:
        caveats.append("oracle_disagree")
    return {
        "status": "ok",
        "resolution": mesh.resolution,
        "vertices": int(len(mesh.vertices)),
        "cells": int(len(mesh.cells)),
        "boundary_components": mesh.boundary_components(),
        "homology": mesh_h.to_dict(),
        "compare": verdict.to_dict(),
    }


def _mesh_path(cfg: AnalysisConfig, sign: str) -> str | None:
    if not cfg.export_mesh:
        return None
    if cfg.sign != "both" or sign == "+":
        return cfg.export_mesh
    p = Path(cfg.export_mesh)
    return str(p.with_name(p.stem + ".neg" + p.suffix))


def analyze(cfg: AnalysisConfig) -> ReportEnvelope:
    """Run the whole pipeline; raises :class:`AnalysisError` on hard failures."""
    clock = _Clock()
    with clock("parse"):
        f = parse(cfg.polynomial, cfg.variables)
    if f.is_constant():
        raise AnalysisError("polynomial is constant")
    if f(tuple(0.0 for _ in cfg.variables)) != 0:
        raise AnalysisError("f(0) != 0: the origin is not on the zero set")
    notes = []
    grad0 = [f.diff(i)(tuple(0.0 for _ in cfg.variables)) for i in range(f.nvars)]
    if any(g != 0 for g in grad0):
        notes.append("origin is a regular point of f")

    checks, radius, caveats = _hypothesis_checks(f, cfg, clock)
    params, f_t, attempts = _perturbation(f, cfg, clock)
    checks["perturbation"] = {"params": params.to_dict(), "attempts": attempts, "f_t": str(f_t)}

    fibres = {}
    for sign in cfg.signs():
        g_t = fibre_polynomial(f_t, sign)
        section, fc = _fibre_section(g_t, sign, params, radius, cfg, clock, _mesh_path(cfg, sign))
        fibres[SIGN_NAMES[sign]] = section
        caveats.extend(fc)
    if f.nvars - 1 > 2:
        notes.append("great-circle hypothesis is not automatic in this dimension; verdict is sampled")
    return ReportEnvelope(
        config=cfg.to_dict(),
        checks=checks,
        fibres=fibres,
        caveats=sorted(set(caveats)),
        notes=notes,
        timings={k: round(v, 6) for k, v in sorted(clock.timings.items())},
    )


# ---------------------------------------------------------------------------
# serialization


def _canon(obj, out: list) -> None:
    if obj is None or obj is True or obj is False:
        out.append({None: "null", True: "true", False: "false"}[obj])
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append(format(x, ".17g") if math.isfinite(x) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            _canon(str(key), out)
            out.append(":")
            _canon(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _canon(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_json(envelope, include_timings: bool = True) -> str:
    """Canonical JSON: sorted keys, no whitespace, floats with 17 significant digits."""
    d = envelope.to_dict(include_timings) if isinstance(envelope, ReportEnvelope) else envelope
    out: list[str] = []
    _canon(d, out)
    return "".join(out)


def report_text(envelope: ReportEnvelope) -> str:
    cfg = envelope.config
    lines = [f"f = {cfg['polynomial']}   variables: {', '.join(cfg['variables'])}   delta = {cfg['delta']:g}"]
    pert = envelope.checks.get("perturbation", {})
    if pert:
        t = ", ".join(f"{v:.6g}" for v in pert["params"]["t"])
        lines.append(f"t = ({t})   f_t = {pert['f_t']}")
    lines.append(f"Milnor radius check: {envelope.checks['milnor_radius']['verdict']}")
    for name, sec in envelope.fibres.items():
        eps = sec["milnor_data"]["epsilon"]
        lines.append("")
        lines.append(f"[{name} fibre]  epsilon = {eps:.6g}" if eps == eps else f"[{name} fibre]  epsilon = n/a")
        for p in sec["handles"]["points"]:
            loc = ", ".join(f"{c:.6f}" for c in p["location"])
            lines.append(f"  critical point ({loc})  value {p['value']:.6g}")
        lines.append(f"  {sec['handles']['cells']}   (m = {sec['handles']['m']})")
        ranks = {int(k): v for k, v in sec["homology"]["ranks"].items()}
        top = max([len(cfg["variables"]) - 1] + list(ranks))
        lines.append("  k   rank H_k(Φ, ∂Φ; Z)")
        for k in range(top + 1):
            lines.append(f"  {k:<3d} {ranks.get(k, 0)}")
        if sec["great_circle"] is not None:
            lines.append(f"  great circle: {sec['great_circle']['status']}")
        if sec["oracle"] is not None:
            o = sec["oracle"]
            if o["status"] == "ok":
                mr = ", ".join(f"H_{k}={v}" for k, v in sorted(o["homology"]["ranks"].items())) or "0"
                lines.append(f"  oracle: {mr}   {o['compare']['verdict']}")
            else:
                lines.append(f"  oracle: {o['status']}")
    lines.append("")
    lines.append("caveats: " + (", ".join(envelope.caveats) if envelope.caveats else "none"))
    for note in envelope.notes:
        lines.append(f"note: {note}")
    lines.append(f"exit code: {envelope.exit_code}")
    return "\n".join(lines) + "\n"
