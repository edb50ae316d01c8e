"""Small 3D linear-algebra helpers used across mesh, mask, and camera code."""

from __future__ import annotations

import numpy as np


def normalized(v: np.ndarray) -> np.ndarray:
    """Unit vector in the direction of v. Raises on near-zero input."""
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n < 1e-300:
        raise ValueError("cannot normalize zero vector")
    return v / n


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix (3x3) about a unit axis."""
    u = normalized(axis)
    c, s = np.cos(angle), np.sin(angle)
    ux, uy, uz = u
    k = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    return c * np.eye(3) + s * k + (1.0 - c) * np.outer(u, u)


def rotation_from_euler_xyz(angles) -> np.ndarray:
    """Rotation matrix from intrinsic XYZ Euler angles in radians."""
    rx, ry, rz = (float(a) for a in angles)
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]], dtype=np.float64)
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=np.float64)
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]], dtype=np.float64)
    return mx @ my @ mz


def orthonormal_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane perpendicular to a unit axis.

    The pair is a deterministic function of the axis direction so that
    geometry built on it is reproducible.
    """
    u = normalized(axis)
    # pick the world axis least aligned with u as the seed direction
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(u)))] = 1.0
    e1 = normalized(np.cross(u, seed))
    e2 = np.cross(u, e1)
    return e1, e2
