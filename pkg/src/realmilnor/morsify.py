"""Generic linear perturbations ``f_t = f - t.x`` that make ``f_t|S`` Morse."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .poly import Polynomial, perturb, to_fraction
from .sphcrit import SolverConfig, ambient_critical_points, find_critical_points

__all__ = [
    "PerturbationParams",
    "MorseValidationReport",
    "Morsification",
    "MorsificationError",
    "sample_parameters",
    "validate_morse",
    "attempt_magnitude",
    "default_magnitude",
    "morsify",
]

NONDEGENERACY_TOL = 1e-8
VALUE_GAP_TOL = 1e-9
EPSILON_FLOOR = 1e-12


@dataclass(frozen=True)
class PerturbationParams:
    t: tuple[float, ...]
    magnitude: float
    seed: int | None = None

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnitude must be non-negative")
        if math.hypot(*self.t) > self.magnitude * (1 + 1e-12) + 1e-300:
            raise ValueError(f"|t| = {math.hypot(*self.t):g} exceeds magnitude {self.magnitude:g}")

    @classmethod
    def explicit(cls, t) -> "PerturbationParams":
        t = tuple(float(v) for v in t)
        return cls(t, math.hypot(*t), None)

    def to_dict(self) -> dict:
        return {"t": list(self.t), "magnitude": self.magnitude, "seed": self.seed}


@dataclass(frozen=True)
class MorseValidationReport:
    nondegenerate: bool
    min_abs_restricted_hessian_det: float | None
    distinct_values: bool
    min_value_gap: float | None
    values_in_band: bool
    epsilon: float | None = None
    num_points: int = 0

    @property
    def passed(self) -> bool:
        return self.nondegenerate and self.distinct_values and self.values_in_band

    def to_dict(self) -> dict:
        return {
            "nondegenerate": self.nondegenerate,
            "min_abs_restricted_hessian_det": self.min_abs_restricted_hessian_det,
            "distinct_values": self.distinct_values,
            "min_value_gap": self.min_value_gap,
            "values_in_band": self.values_in_band,
            "epsilon": self.epsilon,
            "num_points": self.num_points,
            "passed": self.passed,
        }


@dataclass
class Morsification:
    params: PerturbationParams
    report: MorseValidationReport
    f_t: Polynomial
    critical_points: list = field(default_factory=list)
    ambient_points: list = field(default_factory=list)
    attempts: int = 1


class MorsificationError(RuntimeError):
    def __init__(self, message, last_report: MorseValidationReport | None = None):
        super().__init__(message)
        self.last_report = last_report


def sample_parameters(seed: int, magnitude: float, dim: int) -> PerturbationParams:
    """Uniform draw from the closed ball of radius ``magnitude`` in R^dim."""
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    if magnitude == 0:
        return PerturbationParams((0.0,) * dim, 0.0, seed)
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    radius = magnitude * rng.random() ** (1.0 / dim)
    t = radius * direction
    return PerturbationParams(tuple(float(v) for v in t), float(magnitude), seed)


def validate_morse(f_t, points, epsilon: float | None, ambient_values=(),
                   nondegeneracy_tol: float = NONDEGENERACY_TOL,
                   gap_tol: float = VALUE_GAP_TOL) -> MorseValidationReport:
    """Check nondegeneracy, distinct critical values and the epsilon band.

    Failures are reported in the returned flags, never raised.
    """
    points = list(points)
    dets = [abs(float(np.prod(p.tangent_spectrum))) for p in points]
    min_det = min(dets) if dets else None
    nondegenerate = all(not p.degenerate for p in points) and (min_det is None or min_det > nondegeneracy_tol)

    values = sorted(p.value for p in points)
    gaps = np.diff(values)
    min_gap = float(np.min(gaps)) if len(gaps) else None
    scale = 1.0 + max((abs(v) for v in values), default=0.0)
    distinct = min_gap is None or min_gap > gap_tol * scale

    ambient_values = list(ambient_values)
    if epsilon is None:
        in_band = True
    else:
        in_band = all(abs(v) < epsilon for v in ambient_values)
    return MorseValidationReport(
        nondegenerate=bool(nondegenerate),
        min_abs_restricted_hessian_det=min_det,
        distinct_values=bool(distinct),
        min_value_gap=min_gap,
        values_in_band=bool(in_band),
        epsilon=epsilon,
        num_points=len(points),
    )


def attempt_magnitude(base: float, attempt: int) -> float:
    """Magnitude on 1-based ``attempt``: halves whenever the attempt number doubles."""
    if attempt < 1:
        raise ValueError("attempts are numbered from 1")
    return base / 2 ** (attempt.bit_length() - 1)


def default_magnitude(f: Polynomial, delta: float) -> float:
    return 0.05 * delta * max(f.coefficient_scale(), 1e-12)


def band_epsilon(points, ambient_values) -> float | None:
    """A level inside (max |ambient value|, min |sphere value|), or None if that band is empty."""
    a = max([abs(v) for v in ambient_values] + [EPSILON_FLOOR])
    sphere = [abs(p.value) for p in points]
    if not sphere:
        return None
    b = min(sphere)
    if a >= b:
        return None
    return math.sqrt(a * b)


def morsify(f: Polynomial, delta: float, seed: int = 0, max_attempts: int = 16,
            magnitude: float | None = None, cfg: SolverConfig | None = None) -> Morsification:
    """Sample ``t`` until ``f_t|S_delta`` passes :func:`validate_morse`.

    Each attempt uses its own sub-seed; the magnitude shrinks on the schedule
    of :func:`attempt_magnitude`.  Raises :class:`MorsificationError` carrying
    the last report when every attempt fails.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    base = default_magnitude(f, delta) if magnitude is None else float(magnitude)
    cfg = cfg or SolverConfig(seed=seed)
    last = None
    for attempt in range(1, max_attempts + 1):
        sub_seed = int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        params = sample_parameters(sub_seed, attempt_magnitude(base, attempt), f.nvars)
        f_t = perturb(f, [to_fraction(v) for v in params.t])
        points = find_critical_points(f_t, delta, cfg)
        ambient = ambient_critical_points(f_t, delta, cfg)
        eps = band_epsilon(points, [a.value for a in ambient])
        report = validate_morse(f_t, points, eps, [a.value for a in ambient])
        if eps is None:
            report = replace(report, values_in_band=False)
        last = report
        if report.passed and points:
            return Morsification(params, report, f_t, points, ambient, attempt)
    raise MorsificationError(f"no admissible perturbation in {max_attempts} attempts", last)

