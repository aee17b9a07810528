"""2D geometry primitives shared by every other module.

Points are numpy float64 arrays of shape (2,); herds are arrays of shape
(N, 2). The scalar kernels here are the single source of truth for the
arithmetic: the episode engine calls them directly, so composing the public
functions step by step reproduces a fused episode run bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import njit

TWO_PI = 2.0 * math.pi

Vec2 = np.ndarray  # shape (2,), float64


def vec(x: float, y: float) -> Vec2:
    return np.array([x, y], dtype=np.float64)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def mean2(positions: np.ndarray) -> tuple[float, float]:
    """Arithmetic mean of an (N, 2) array, plain left-to-right summation."""
    n = positions.shape[0]
    sx = 0.0
    sy = 0.0
    for i in range(n):
        sx += positions[i, 0]
        sy += positions[i, 1]
    return sx / n, sy / n


@njit(cache=True)
def furthest_index(positions: np.ndarray, px: float, py: float) -> tuple[int, float]:
    """Index and distance of the point furthest from (px, py); ties keep the lowest index.

    Compares rounded distances (not squared distances) so representational
    ties resolve the same way as a plain argmax over computed norms.
    """
    best_i = 0
    best_d = -1.0
    for i in range(positions.shape[0]):
        dx = positions[i, 0] - px
        dy = positions[i, 1] - py
        d = math.sqrt(dx * dx + dy * dy)
        if d > best_d:
            best_d = d
            best_i = i
    return best_i, best_d


@njit(cache=True)
def ang_diff(a: float, b: float) -> float:
    """Minimal absolute angular separation, in [0, pi]. Inputs wrap freely."""
    d = (a - b) % TWO_PI
    if d > math.pi:
        d = TWO_PI - d
    return d


@njit(cache=True)
def clamp(v: float, lo: float, hi: float) -> float:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def gcm(positions: np.ndarray) -> Vec2:
    """Global centre of mass of a non-empty set of positions."""
    pts = np.asarray(positions, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty herd")
    pts = pts.reshape(-1, 2)
    return np.array(mean2(pts), dtype=np.float64)


def furthest_from(positions: np.ndarray, point) -> tuple[int, float]:
    """(index, distance) of the position furthest from ``point``.

    Ties break toward the lowest index so replays are deterministic.
    """
    pts = np.asarray(positions, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty herd")
    pts = pts.reshape(-1, 2)
    return furthest_index(pts, float(point[0]), float(point[1]))


def herd_threshold(n: int, r_a: float) -> float:
    """Dispersal radius that separates a gathered herd from a scattered one.

    N^(2/3) is computed as cbrt(N)^2 so perfect cubes give exact thresholds
    (N=8, r_a=2 is exactly 8) and the inside/outside boundary is clean.
    """
    if n < 1:
        raise ValueError("need at least one sheep")
    if r_a <= 0:
        raise ValueError("r_a must be positive")
    return r_a * float(np.cbrt(float(n))) ** 2


def angular_diff(a: float, b: float) -> float:
    """Minimal absolute angular separation of two angles, in [0, pi]."""
    return ang_diff(float(a), float(b))


def unit(v) -> Vec2:
    """v / ||v||; raises on a zero vector so callers choose their own fallback."""
    x = float(v[0])
    y = float(v[1])
    norm = math.hypot(x, y)
    if norm == 0.0:
        raise ValueError("degenerate direction")
    return np.array([x / norm, y / norm], dtype=np.float64)
