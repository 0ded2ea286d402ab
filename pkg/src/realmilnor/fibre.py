"""Milnor data (delta, epsilon), fibre filtering and hypothesis checks.

The checks here are falsifiers: they search for counterexamples and report
"not found" when the search comes back empty.  Nothing is certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .morsify import EPSILON_FLOOR, PerturbationParams
from .poly import NumericPolynomial, Polynomial
from .sampling import ball_points, random_sphere, sphere_points
from .sphcrit import SolverConfig, _batched_solve, _dedup, ambient_critical_points

__all__ = [
    "MilnorData",
    "MilnorRadiusVerdict",
    "ZeroLocusVerdict",
    "GreatCircleConfig",
    "GreatCircleVerdict",
    "EmptyFibreError",
    "BandEmptyError",
    "check_milnor_radius",
    "check_zero_locus",
    "check_isolated_singularity",
    "epsilon_bracket",
    "select_epsilon",
    "filter_fibre",
    "great_circle_check",
]


class EmptyFibreError(ValueError):
    """No positive critical value on the sphere: the positive fibre is empty."""


class BandEmptyError(ValueError):
    """max |ambient critical value| >= min positive sphere value; shrink t."""

    def __init__(self, lower, upper):
        super().__init__(f"no regular band: lower {lower:g} >= upper {upper:g}")
        self.lower = lower
        self.upper = upper


# ---------------------------------------------------------------------------
# delta


@dataclass(frozen=True)
class MilnorRadiusVerdict:
    passed: bool
    witness: tuple[float, ...] | None = None
    witness_radius: float | None = None
    starts: int = 0

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.passed else "fail",
            "witness": None if self.witness is None else list(self.witness),
            "witness_radius": self.witness_radius,
            "starts": self.starts,
            "heuristic": True,
        }


def _newton_tangency(F: NumericPolynomial, X: np.ndarray, iters: int, cap: float):
    """Newton on (grad f(x) - lam x, f(x)) = 0 in the unknowns (x, lam)."""
    d = X.shape[1]
    g = F.grad(X)
    lam = np.einsum("ni,ni->n", X, g) / np.maximum(np.sum(X * X, axis=1), 1e-300)
    eye = np.eye(d)
    for _ in range(iters):
        g = F.grad(X)
        H = F.hess(X)
        R = np.concatenate([g - lam[:, None] * X, F.value(X)[:, None]], axis=1)
        J = np.zeros((X.shape[0], d + 1, d + 1))
        J[:, :d, :d] = H - lam[:, None, None] * eye
        J[:, :d, d] = -X
        J[:, d, :d] = g
        step = np.nan_to_num(_batched_solve(J, -R), nan=0.0, posinf=0.0, neginf=0.0)
        norm = np.linalg.norm(step[:, :d], axis=1)
        factor = np.minimum(1.0, cap / np.maximum(norm, 1e-300))
        X = X + factor[:, None] * step[:, :d]
        lam = lam + factor * step[:, d]
    return X, lam


def check_milnor_radius(f: Polynomial, delta: float, cfg: SolverConfig = SolverConfig(),
                        min_radius: float = 1e-2) -> MilnorRadiusVerdict:
    """Search for a point ``0 < |x| <= delta`` with ``f(x) = 0`` and ``grad f(x)`` parallel to ``x``.

    Such a point is a tangency of the zero set with a sphere (or a singular
    point of the zero set), which rules ``delta`` out as a Milnor radius.
    Radii below ``min_radius * delta`` are not searched.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    F = NumericPolynomial(f)
    d = F.dim
    u = ball_points(d, 4 * cfg.ambient_starts, cfg.seed)
    r = np.linalg.norm(u, axis=1, keepdims=True)
    starts = delta * (min_radius + (1 - min_radius) * r) * u / np.maximum(r, 1e-300)
    X, lam = _newton_tangency(F, starts, cfg.newton_max_iter, 0.25 * delta)
    ok = np.all(np.isfinite(X), axis=1) & np.isfinite(lam)
    X, lam = X[ok], lam[ok]
    tol = 1e3 * cfg.newton_tol * (1.0 + f.coefficient_scale())
    res = np.maximum(np.abs(F.value(X)), np.max(np.abs(F.grad(X) - lam[:, None] * X), axis=1))
    radius = np.linalg.norm(X, axis=1)
    hit = (res < tol) & (radius >= min_radius * delta) & (radius <= delta * (1 + 1e-9))
    if not np.any(hit):
        return MilnorRadiusVerdict(True, starts=len(starts))
    Xh, rh = X[hit], res[hit]
    best = _dedup(Xh, rh, 1e-6 * delta)[0]
    w = Xh[best]
    return MilnorRadiusVerdict(False, tuple(float(c) for c in w), float(np.linalg.norm(w)), len(starts))


@dataclass(frozen=True)
class ZeroLocusVerdict:
    positive_dimensional: bool
    has_positive: bool
    has_negative: bool
    isolated_singularity: bool = True
    singular_witness: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "positive_dimensional": self.positive_dimensional,
            "has_positive": self.has_positive,
            "has_negative": self.has_negative,
            "isolated_singularity": self.isolated_singularity,
            "singular_witness": None if self.singular_witness is None else list(self.singular_witness),
            "heuristic": True,
        }


def check_zero_locus(f: Polynomial, delta: float, samples: int = 4096, seed: int = 0) -> ZeroLocusVerdict:
    """Sampled test that ``{f = 0}`` meets small spheres around the origin.

    For an isolated critical point the zero set has positive dimension near 0
    exactly when ``f`` changes sign on small spheres.
    """
    F = NumericPolynomial(f)
    base = sphere_points(F.dim, samples, seed)
    pos = neg = True
    for scale in (1.0, 0.5, 0.25, 0.125):
        v = F.value(delta * scale * base)
        pos &= bool(np.any(v > 0))
        neg &= bool(np.any(v < 0))
    return ZeroLocusVerdict(pos and neg, pos, neg)


def check_isolated_singularity(f: Polynomial, delta: float, cfg: SolverConfig = SolverConfig(),
                               min_radius: float = 1e-2):
    """Critical points of ``f`` in the ball but away from the origin, if any (witness or None)."""
    for p in ambient_critical_points(f, delta, cfg):
        if np.linalg.norm(p.location) >= min_radius * delta:
            return p.location
    return None


# ---------------------------------------------------------------------------
# epsilon


@dataclass
class MilnorData:
    delta: float
    epsilon: float
    t: PerturbationParams
    delta_check: MilnorRadiusVerdict | None = None
    epsilon_rationale: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "t": self.t.to_dict(),
            "delta_check": None if self.delta_check is None else self.delta_check.to_dict(),
            "epsilon_rationale": self.epsilon_rationale,
        }


def epsilon_bracket(sphere_points, ambient_values) -> tuple[float, float]:
    """``(a, b)``: a = max |ambient critical value| (0 if none), b = min positive sphere value."""
    positive = [p.value for p in sphere_points if p.value > 0]
    if not positive:
        raise EmptyFibreError("no positive critical value on the sphere")
    a = max((abs(v) for v in ambient_values), default=0.0)
    return a, min(positive)


def select_epsilon(sphere_points, ambient_values, sphere_max: float | None = None) -> float:
    """Geometric midpoint ``sqrt(a * b)`` of the regular band (a floored at 1e-12)."""
    try:
        a, b = epsilon_bracket(sphere_points, ambient_values)
    except EmptyFibreError:
        if sphere_max is not None and sphere_max > 0:
            return 0.5 * sphere_max
        raise
    a = max(a, EPSILON_FLOOR)
    if a >= b:
        raise BandEmptyError(a, b)
    return math.sqrt(a * b)


def filter_fibre(points, epsilon: float, sign: str = "+"):
    if sign == "+":
        return [p for p in points if p.value > epsilon]
    if sign == "-":
        return [p for p in points if p.value < -epsilon]
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


# ---------------------------------------------------------------------------
# great circles


@dataclass(frozen=True)
class GreatCircleConfig:
    circles: int = 512
    grid: int = 720
    refine_grid: int = 10_000
    seed: int = 0
    max_batches: int = 64


@dataclass(frozen=True)
class GreatCircleVerdict:
    status: str  # "no_violation_found" | "violation"
    samples_used: int
    automatic: bool
    point: tuple[float, ...] | None = None
    direction: tuple[float, ...] | None = None
    min_value_on_circle: float | None = None

    @property
    def violation(self) -> bool:
        return self.status == "violation"

    def circle(self, count: int, delta: float) -> np.ndarray:
        """Points of the reported circle (violations only)."""
        theta = 2 * np.pi * np.arange(count) / count
        p = np.asarray(self.point) / np.linalg.norm(self.point)
        v = np.asarray(self.direction)
        return delta * (np.cos(theta)[:, None] * p + np.sin(theta)[:, None] * v)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "samples_used": self.samples_used,
            "automatic": self.automatic,
            "point": None if self.point is None else list(self.point),
            "direction": None if self.direction is None else list(self.direction),
            "min_value_on_circle": self.min_value_on_circle,
        }


def _circle_minima(F, P, V, delta, count):
    theta = 2 * np.pi * np.arange(count) / count
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(len(P))
    step = max(1, (1 << 18) // count)
    for i in range(0, len(P), step):
        pts = delta * (c[None, :, None] * P[i:i + step, None, :] + s[None, :, None] * V[i:i + step, None, :])
        out[i:i + step] = F.value(pts.reshape(-1, P.shape[1])).reshape(-1, count).min(axis=1)
    return out


def great_circle_check(f_t, delta: float, epsilon: float,
                       cfg: GreatCircleConfig = GreatCircleConfig()) -> GreatCircleVerdict:
    """Look for a great circle through ``{f_t >= epsilon}`` that never leaves it."""
    F = f_t if isinstance(f_t, NumericPolynomial) else NumericPolynomial(f_t)
    d = F.dim
    automatic = d - 1 <= 2
    rng = np.random.default_rng(cfg.seed)
    chosen = []
    have = 0
    for _ in range(cfg.max_batches):
        cand = random_sphere(rng, d, 4 * cfg.circles)
        keep = cand[F.value(delta * cand) >= epsilon]
        chosen.append(keep)
        have += len(keep)
        if have >= cfg.circles:
            break
    P = np.concatenate(chosen, axis=0)[: cfg.circles] if chosen else np.zeros((0, d))
    if len(P) == 0:
        return GreatCircleVerdict("no_violation_found", 0, automatic)
    V = rng.standard_normal(P.shape)
    V -= np.sum(V * P, axis=1, keepdims=True) * P
    V /= np.linalg.norm(V, axis=1, keepdims=True)

    coarse = _circle_minima(F, P, V, delta, cfg.grid)
    spread = float(np.max(np.abs(F.value(delta * P)))) + abs(epsilon)
    near = np.nonzero(coarse > epsilon - 1e-2 * spread)[0]
    if len(near) == 0:
        return GreatCircleVerdict("no_violation_found", len(P), automatic)
    fine = _circle_minima(F, P[near], V[near], delta, cfg.refine_grid)
    if not np.any(fine > epsilon):
        return GreatCircleVerdict("no_violation_found", len(P), automatic)
    best = near[int(np.argmax(fine))]
    return GreatCircleVerdict(
        "violation", len(P), automatic,
        point=tuple(float(c) for c in delta * P[best]),
        direction=tuple(float(c) for c in V[best]),
        min_value_on_circle=float(np.max(fine)),
    )
