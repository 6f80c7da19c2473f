"""
Small numerical helpers shared by the services
"""

from typing import Callable, Sequence

import numpy as np


def richardson_limit(step_ratio: float, values: Sequence[float], order: int = 2) -> float:
    """
    Richardson table for values computed at steps h, h/r, h/r^2, ...

    Args:
        step_ratio: ratio r between consecutive steps
        values: estimates ordered from coarsest to finest
        order: leading error order p (subsequent orders p+2, p+4, ...)

    Returns:
        Extrapolated value
    """
    level = [float(v) for v in values]
    p = order
    while len(level) > 1:
        mult = step_ratio ** p
        level = [(mult * high - low) / (mult - 1.0) for low, high in zip(level[:-1], level[1:])]
        p += 2
    return level[0]


def smoothstep(x: np.ndarray) -> np.ndarray:
    """C2 quintic ramp: 0 for x <= 0, 1 for x >= 1"""
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)


def cutoff(x: np.ndarray) -> np.ndarray:
    """C2 cutoff equal to 1 on [0, 1] and 0 on [2, inf)"""
    return 1.0 - smoothstep(np.asarray(x, dtype=float) - 1.0)


def cutoff_moment_bound() -> float:
    """sup_x x * cutoff(x), used to bound tau * c(mu tau) by this / mu"""
    x = np.linspace(0.0, 2.0, 20001)
    return float(np.max(x * cutoff(x)))


def gauss_legendre_cells(func: Callable[[np.ndarray], np.ndarray], edges: np.ndarray,
                         order: int = 10) -> np.ndarray:
    """
    Integral of func over each cell [edges[k], edges[k+1]]

    Args:
        func: vectorized integrand
        edges: increasing cell boundaries
        order: Gauss-Legendre nodes per cell

    Returns:
        Array of len(edges) - 1 cell integrals
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    points = half * nodes[None, :] + 0.5 * (a + b)
    return np.sum(func(points) * weights[None, :] * half, axis=1)


def partial_gauss_legendre(func: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                           order: int = 10) -> np.ndarray:
    """Elementwise integral of func from a to b (arrays of equal shape)"""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    points = half * nodes + 0.5 * (a + b)
    return np.sum(func(points) * weights * half, axis=-1)


def local_minima(values: np.ndarray) -> np.ndarray:
    """Indices of strict interior local minima"""
    v = np.asarray(values)
    if v.size < 3:
        return np.array([], dtype=int)
    inner = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    return np.nonzero(inner)[0] + 1
