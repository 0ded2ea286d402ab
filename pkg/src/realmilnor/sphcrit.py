"""Critical points of a polynomial restricted to the sphere of radius delta.

Critical points of ``f|S`` are the solutions of ``grad f(x) = lam * x`` on
``|x| = delta``.  They are found by Newton's method on the Lagrange system

    G(x, lam) = (grad f(x) - lam x, (|x|^2 - delta^2) / 2) = 0

from low-discrepancy starts; on circles (n = 1) an angle sweep with
bisection additionally guarantees completeness.  Each point is classified by
the spectrum of the projected Lagrangian Hessian ``Q^T (H - lam I) Q``.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .poly import NumericPolynomial, Polynomial
from .sampling import ball_points, sphere_points, worker_count

__all__ = [
    "SolverConfig",
    "CriticalPoint",
    "AmbientCriticalPoint",
    "DegenerateCriticalPointError",
    "CompletenessWarning",
    "find_critical_points",
    "ambient_critical_points",
    "lagrange_multiplier",
    "restricted_hessian",
    "tangent_basis",
    "morse_index",
]


class DegenerateCriticalPointError(ValueError):
    pass


class CompletenessWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    num_starts: int | None = None  # None -> 200 * 2**n
    newton_max_iter: int = 60
    newton_tol: float = 1e-10
    dedup_radius: float | None = None  # None -> 1e-6 * delta
    seed: int = 0
    sweep_points: int = 4096
    nondegeneracy_tol: float = 1e-8
    ambient_starts: int = 256

    def __post_init__(self):
        if self.num_starts is not None and self.num_starts <= 0:
            raise ValueError("num_starts must be positive")
        if self.newton_max_iter <= 0 or self.newton_tol <= 0:
            raise ValueError("newton_max_iter and newton_tol must be positive")
        if self.dedup_radius is not None and self.dedup_radius <= self.newton_tol:
            raise ValueError("dedup_radius must exceed newton_tol")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    def starts_for(self, n: int) -> int:
        return self.num_starts if self.num_starts is not None else 200 * 2 ** n

    def dedup_for(self, delta: float) -> float:
        return self.dedup_radius if self.dedup_radius is not None else 1e-6 * delta


@dataclass(frozen=True)
class CriticalPoint:
    location: tuple[float, ...]
    value: float
    multiplier: float
    tangent_spectrum: tuple[float, ...]
    morse_index: int | None
    residual: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "location": list(self.location),
            "value": self.value,
            "multiplier": self.multiplier,
            "tangent_spectrum": list(self.tangent_spectrum),
            "morse_index": self.morse_index,
            "residual": self.residual,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class AmbientCriticalPoint:
    location: tuple[float, ...]
    value: float
    residual: float

    def to_dict(self) -> dict:
        return {"location": list(self.location), "value": self.value, "residual": self.residual}


def _numeric(f) -> NumericPolynomial:
    return f if isinstance(f, NumericPolynomial) else NumericPolynomial(f)


def lagrange_multiplier(p, g, delta: float | None = None) -> float:
    """Multiplier ``lam`` with ``g ~ lam * p``, i.e. ``(p . g) / delta^2``."""
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    if delta is None:
        delta = float(np.linalg.norm(p))
    return float(p @ g) / delta ** 2


def tangent_basis(p) -> np.ndarray:
    """Orthonormal basis of ``p^perp`` as the columns of a ``(d, d-1)`` array.

    Householder reflection sending ``p/|p|`` to a multiple of ``e_1``; its
    remaining columns span the tangent space.  Deterministic in ``p``.
    """
    u = np.asarray(p, dtype=float)
    u = u / np.linalg.norm(u)
    s = 1.0 if u[0] >= 0 else -1.0
    v = u.copy()
    v[0] += s
    refl = np.eye(len(u)) - 2.0 * np.outer(v, v) / (v @ v)
    return refl[:, 1:]


def restricted_hessian(f, p, lam: float, basis=None) -> np.ndarray:
    """``Q^T (H_f(p) - lam I) Q`` for an orthonormal tangent basis ``Q`` at ``p``."""
    F = _numeric(f)
    p = np.asarray(p, dtype=float)
    Q = tangent_basis(p) if basis is None else np.asarray(basis, dtype=float)
    H = F.hess(p[None, :])[0] - lam * np.eye(len(p))
    B = Q.T @ H @ Q
    return 0.5 * (B + B.T)


def morse_index(spectrum, tol: float = 1e-8) -> int:
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.size and np.min(np.abs(spectrum)) <= tol:
        raise DegenerateCriticalPointError(
            f"tangent eigenvalue {spectrum[np.argmin(np.abs(spectrum))]:.3g} within {tol:g} of zero"
        )
    return int(np.sum(spectrum < 0))


# ---------------------------------------------------------------------------
# Newton solvers


def _batched_solve(J: np.ndarray, R: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(J, R[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.einsum("nij,nj->ni", np.linalg.pinv(J), R)


def _newton_sphere(F: NumericPolynomial, X: np.ndarray, delta: float, iters: int):
    d = X.shape[1]
    X = delta * X / np.linalg.norm(X, axis=1, keepdims=True)
    lam = np.einsum("ni,ni->n", X, F.grad(X)) / delta ** 2
    eye = np.eye(d)
    for _ in range(iters):
        g = F.grad(X)
        H = F.hess(X)
        R = np.concatenate([g - lam[:, None] * X, 0.5 * (np.sum(X * X, axis=1) - delta ** 2)[:, None]], axis=1)
        J = np.zeros((X.shape[0], d + 1, d + 1))
        J[:, :d, :d] = H - lam[:, None, None] * eye
        J[:, :d, d] = -X
        J[:, d, :d] = X
        step = _batched_solve(J, -R)
        step = np.nan_to_num(step, nan=0.0, posinf=0.0, neginf=0.0)
        dx = step[:, :d]
        norm = np.linalg.norm(dx, axis=1)
        factor = np.minimum(1.0, 0.5 * delta / np.maximum(norm, 1e-300))
        X = X + factor[:, None] * dx
        lam = lam + factor * step[:, d]
        X = delta * X / np.linalg.norm(X, axis=1, keepdims=True)
    return X


def _newton_ambient(F: NumericPolynomial, X: np.ndarray, delta: float, iters: int):
    for _ in range(iters):
        g = F.grad(X)
        H = F.hess(X)
        dx = _batched_solve(H, -g)
        dx = np.nan_to_num(dx, nan=0.0, posinf=0.0, neginf=0.0)
        norm = np.linalg.norm(dx, axis=1)
        factor = np.minimum(1.0, 0.5 * delta / np.maximum(norm, 1e-300))
        X = X + factor[:, None] * dx
    return X


def _chunked(fn, F, X: np.ndarray, *args):
    # order-preserving map, so results do not depend on the worker count
    workers = worker_count()
    if workers == 1 or len(X) < 64:
        return fn(F, X, *args)
    chunks = np.array_split(X, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: fn(F, c, *args), chunks))
    return np.concatenate(parts, axis=0)


def _sweep_circle(F: NumericPolynomial, delta: float, count: int) -> np.ndarray:
    """Zeros of d/dtheta f(delta cos, delta sin) by sign changes on a uniform grid."""

    def dtheta(theta):
        theta = np.atleast_1d(theta)
        P = delta * np.column_stack([np.cos(theta), np.sin(theta)])
        T = delta * np.column_stack([-np.sin(theta), np.cos(theta)])
        return np.sum(F.grad(P) * T, axis=1)

    theta = 2.0 * np.pi * np.arange(count + 1) / count
    h = dtheta(theta)
    roots = []
    for k in range(count):
        a, b = theta[k], theta[k + 1]
        ha, hb = h[k], h[k + 1]
        if ha == 0.0:
            roots.append(a)
        elif ha * hb < 0:
            roots.append(brentq(lambda s: float(dtheta(s)[0]), a, b, xtol=1e-15, rtol=1e-15))
    roots = np.array(roots)
    return delta * np.column_stack([np.cos(roots), np.sin(roots)]) if len(roots) else np.zeros((0, 2))


def _dedup(X: np.ndarray, residuals: np.ndarray, radius: float) -> np.ndarray:
    order = np.argsort(residuals, kind="stable")
    kept: list[int] = []
    for i in order:
        if all(np.linalg.norm(X[i] - X[j]) >= radius for j in kept):
            kept.append(i)
    return np.array(kept, dtype=int)


def _sphere_residuals(F: NumericPolynomial, X: np.ndarray, delta: float):
    g = F.grad(X)
    lam = np.einsum("ni,ni->n", X, g) / delta ** 2
    res = np.max(np.abs(g - lam[:, None] * X), axis=1) + np.abs(np.linalg.norm(X, axis=1) - delta)
    return lam, res


def sphere_candidates(f, delta: float, cfg: SolverConfig = SolverConfig(), method: str = "both") -> np.ndarray:
    """Converged, deduplicated critical locations (no classification)."""
    F = _numeric(f)
    d = F.dim
    n = d - 1
    tol = cfg.newton_tol * (1.0 + F.poly.coefficient_scale())
    pieces = []
    if method in ("both", "newton"):
        starts = delta * sphere_points(d, cfg.starts_for(n), cfg.seed)
        pieces.append(_chunked(_newton_sphere, F, starts, delta, cfg.newton_max_iter))
    if n == 1 and method in ("both", "sweep"):
        swept = _sweep_circle(F, delta, cfg.sweep_points)
        if len(swept):
            pieces.append(_newton_sphere(F, swept, delta, 4))
    if not pieces:
        return np.zeros((0, d))
    X = np.concatenate(pieces, axis=0)
    X = X[np.all(np.isfinite(X), axis=1)]
    # exact projection before measuring the residual
    X = delta * X / np.linalg.norm(X, axis=1, keepdims=True)
    _, res = _sphere_residuals(F, X, delta)
    good = res < tol
    X, res = X[good], res[good]
    keep = _dedup(X, res, cfg.dedup_for(delta))
    return X[keep]


def find_critical_points(f, delta: float, cfg: SolverConfig = SolverConfig(), method: str = "both") -> list[CriticalPoint]:
    """All critical points of ``f|S_delta`` that the solver finds, sorted by value.

    Points whose tangent spectrum has an eigenvalue within the nondegeneracy
    tolerance of zero are kept with ``degenerate=True`` and ``morse_index=None``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    F = _numeric(f)
    if F.poly.is_constant():
        raise ValueError("f is constant")
    n = F.dim - 1
    X = sphere_candidates(F, delta, cfg, method)
    if n == 1 and len(X) == 0:
        warnings.warn("no critical points found on the circle for a non-constant polynomial", CompletenessWarning)
    if len(X) == 0:
        return []
    lam, res = _sphere_residuals(F, X, delta)
    values = F.value(X)
    eig_tol = cfg.nondegeneracy_tol * (1.0 + F.poly.coefficient_scale())
    points = []
    for x, v, l, r in zip(X, values, lam, res):
        spectrum = np.linalg.eigvalsh(restricted_hessian(F, x, l))
        try:
            index, degenerate = morse_index(spectrum, eig_tol), False
        except DegenerateCriticalPointError:
            index, degenerate = None, True
        points.append(CriticalPoint(
            location=tuple(float(c) for c in x),
            value=float(v),
            multiplier=float(l),
            tangent_spectrum=tuple(float(e) for e in spectrum),
            morse_index=index,
            residual=float(r),
            degenerate=degenerate,
        ))
    points.sort(key=lambda p: (p.value, p.location))
    return points


def ambient_critical_points(f, delta: float, cfg: SolverConfig = SolverConfig()) -> list[AmbientCriticalPoint]:
    """Critical points of ``f`` in the closed ball of radius ``delta`` (multi-start Newton).

    Starts are spread over several radial scales since critical points created
    by a small perturbation cluster near the origin.
    """
    F = _numeric(f)
    d = F.dim
    base = ball_points(d, cfg.ambient_starts, cfg.seed)
    starts = np.concatenate([delta * s * base for s in (1.0, 0.25, 1 / 16, 1 / 64, 1 / 256)], axis=0)
    X = _chunked(_newton_ambient, F, starts, delta, cfg.newton_max_iter)
    X = X[np.all(np.isfinite(X), axis=1)]
    tol = cfg.newton_tol * (1.0 + F.poly.coefficient_scale())
    res = np.max(np.abs(F.grad(X)), axis=1) if len(X) else np.zeros(0)
    good = (res < tol) & (np.linalg.norm(X, axis=1) <= delta * (1 + 1e-9))
    X, res = X[good], res[good]
    if len(X) == 0:
        return []
    keep = _dedup(X, res, cfg.dedup_for(delta))
    X, res = X[keep], res[keep]
    values = F.value(X)
    out = [AmbientCriticalPoint(tuple(float(c) for c in x), float(v), float(r)) for x, v, r in zip(X, values, res)]
    out.sort(key=lambda p: (p.value, p.location))
    return out
