"""Deterministic point sets on spheres and balls used as solver starts."""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.stats import norm, qmc

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def worker_count() -> int:
    """Worker cap from ``MILNOR_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("MILNOR_THREADS", "1")))
    except ValueError:
        return 1


def circle_points(count: int) -> np.ndarray:
    theta = 2.0 * math.pi * (np.arange(count) + 0.5) / count
    return np.column_stack([np.cos(theta), np.sin(theta)])


def fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sobol_sphere(dim: int, count: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points pushed through the Gaussian inverse CDF and normalised."""
    engine = qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = max(1, math.ceil(math.log2(max(count, 2))))
    u = engine.random_base2(m)[:count]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    z = norm.ppf(u)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sphere_points(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` well-spread unit vectors in R^dim (spiral for dim 2 and 3)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        return circle_points(count)
    if dim == 3:
        return fibonacci_sphere(count)
    return sobol_sphere(dim, count, seed)


def ball_points(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points filling the unit ball (Sobol on the cube, radial map)."""
    engine = qmc.Sobol(d=dim + 1, scramble=True, seed=seed)
    m = max(1, math.ceil(math.log2(max(count, 2))))
    u = np.clip(engine.random_base2(m)[:count], 1e-12, 1 - 1e-12)
    z = norm.ppf(u[:, :dim])
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * u[:, dim:] ** (1.0 / dim)


def random_sphere(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    z = rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
