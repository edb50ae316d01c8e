"""Procedural triangle meshes: primitive tessellation and demo/fixture shapes."""

from __future__ import annotations

import numpy as np

from .geom import rotation_from_euler_xyz
from .mesh import TriangleMesh

# 8 corners / 12 triangles of the unit cube, CCW seen from outside
_BOX_CORNERS = np.array(
    [
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ],
    dtype=np.float64,
)
_BOX_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # z-
        [4, 5, 6], [4, 6, 7],  # z+
        [0, 1, 5], [0, 5, 4],  # y-
        [3, 7, 6], [3, 6, 2],  # y+
        [0, 4, 7], [0, 7, 3],  # x-
        [1, 2, 6], [1, 6, 5],  # x+
    ],
    dtype=np.int32,
)


def _place(points: np.ndarray, center, rotation: np.ndarray | None) -> np.ndarray:
    if rotation is not None:
        points = points @ rotation.T
    return points + np.asarray(center, dtype=np.float64)


def make_box(center=(0, 0, 0), half_extents=(0.5, 0.5, 0.5), rotation=None,
             color=None) -> TriangleMesh:
    v = _BOX_CORNERS * np.asarray(half_extents, dtype=np.float64)
    v = _place(v, center, rotation)
    colors = np.tile(np.asarray(color, dtype=np.float64), (len(v), 1)) if color is not None else None
    return TriangleMesh(v, _BOX_FACES.copy(), colors)


def make_ellipsoid(center=(0, 0, 0), radii=(0.5, 0.5, 0.5), rotation=None,
                   segments: int = 48, rings: int = 24, color=None) -> TriangleMesh:
    """Lat/long tessellated ellipsoid; poles are single vertices."""
    radii = np.asarray(radii, dtype=np.float64)
    verts = [np.array([0.0, 1.0, 0.0])]
    for i in range(1, rings):
        theta = np.pi * i / rings
        y = np.cos(theta)
        r = np.sin(theta)
        phis = 2.0 * np.pi * np.arange(segments) / segments
        ring = np.stack([r * np.sin(phis), np.full(segments, y), r * np.cos(phis)], axis=1)
        verts.append(ring)
    verts.append(np.array([0.0, -1.0, 0.0]))
    v = np.vstack([np.atleast_2d(x) for x in verts]) * radii

    faces = []
    def ring_start(i):  # first vertex index of ring i (1-based rings)
        return 1 + (i - 1) * segments

    for j in range(segments):
        faces.append([0, ring_start(1) + j, ring_start(1) + (j + 1) % segments])
    for i in range(1, rings - 1):
        a, b = ring_start(i), ring_start(i + 1)
        for j in range(segments):
            j2 = (j + 1) % segments
            faces.append([a + j, b + j, b + j2])
            faces.append([a + j, b + j2, a + j2])
    south = len(v) - 1
    last = ring_start(rings - 1)
    for j in range(segments):
        faces.append([south, last + (j + 1) % segments, last + j])

    v = _place(v, center, rotation)
    colors = np.tile(np.asarray(color, dtype=np.float64), (len(v), 1)) if color is not None else None
    return TriangleMesh(v, np.array(faces, dtype=np.int32), colors)


def make_cylinder(center=(0, 0, 0), radii=(0.5, 0.5), half_height=0.5, rotation=None,
                  segments: int = 48, color=None) -> TriangleMesh:
    """Elliptical-base cylinder along local +y, with cap fans."""
    ra, rb = (float(r) for r in radii)
    phis = 2.0 * np.pi * np.arange(segments) / segments
    top = np.stack([ra * np.sin(phis), np.full(segments, half_height), rb * np.cos(phis)], axis=1)
    bot = top.copy()
    bot[:, 1] = -half_height
    v = np.vstack([top, bot, [[0, half_height, 0]], [[0, -half_height, 0]]])
    tc, bc = 2 * segments, 2 * segments + 1

    faces = []
    for j in range(segments):
        j2 = (j + 1) % segments
        faces.append([j, segments + j, segments + j2])   # side
        faces.append([j, segments + j2, j2])
        faces.append([tc, j2, j])                         # top cap
        faces.append([bc, segments + j, segments + j2])   # bottom cap
    v = _place(v, center, rotation)
    colors = np.tile(np.asarray(color, dtype=np.float64), (len(v), 1)) if color is not None else None
    return TriangleMesh(v, np.array(faces, dtype=np.int32), colors)


def make_torus(center=(0, 0, 0), ring_radius=0.35, tube_radius=0.12, rotation=None,
               segments: int = 48, sides: int = 24, color=None) -> TriangleMesh:
    us = 2.0 * np.pi * np.arange(segments) / segments
    vs = 2.0 * np.pi * np.arange(sides) / sides
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    r = ring_radius + tube_radius * np.cos(vv)
    pts = np.stack([r * np.cos(uu), tube_radius * np.sin(vv), r * np.sin(uu)], axis=-1)
    v = pts.reshape(-1, 3)
    faces = []
    for i in range(segments):
        for j in range(sides):
            a = i * sides + j
            b = ((i + 1) % segments) * sides + j
            a2 = i * sides + (j + 1) % sides
            b2 = ((i + 1) % segments) * sides + (j + 1) % sides
            faces.append([a, b, b2])
            faces.append([a, b2, a2])
    v = _place(v, center, rotation)
    colors = np.tile(np.asarray(color, dtype=np.float64), (len(v), 1)) if color is not None else None
    return TriangleMesh(v, np.array(faces, dtype=np.int32), colors)


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one soup, offsetting face indices."""
    if not meshes:
        raise ValueError("nothing to merge")
    verts, faces, colors = [], [], []
    any_color = any(m.colors is not None for m in meshes)
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        if any_color:
            c = m.colors if m.colors is not None else np.full((m.num_vertices, 3), 0.7)
            colors.append(c)
        offset += m.num_vertices
    return TriangleMesh(
        np.vstack(verts),
        np.vstack(faces).astype(np.int32),
        np.vstack(colors) if any_color else None,
    )


def make_demo_shape(rng: np.random.Generator) -> TriangleMesh:
    """One random multi-part colored shape, roughly unit sized.

    Used for the demo corpus and test fixtures: a main body (ellipsoid, box,
    torus, or cylinder) plus 1-3 attached parts, each with its own color.
    """
    def rand_color():
        return rng.uniform(0.15, 0.95, size=3)

    def rand_rot():
        return rotation_from_euler_xyz(rng.uniform(0, 2 * np.pi, size=3))

    def rand_part(center, scale):
        kind = rng.integers(0, 4)
        if kind == 0:
            return make_ellipsoid(center, radii=rng.uniform(0.3, 1.0, 3) * scale,
                                  rotation=rand_rot(), segments=24, rings=12, color=rand_color())
        if kind == 1:
            return make_box(center, half_extents=rng.uniform(0.3, 1.0, 3) * scale,
                            rotation=rand_rot(), color=rand_color())
        if kind == 2:
            return make_torus(center, ring_radius=0.8 * scale, tube_radius=0.3 * scale,
                              rotation=rand_rot(), segments=24, sides=12, color=rand_color())
        return make_cylinder(center, radii=rng.uniform(0.3, 0.8, 2) * scale,
                             half_height=rng.uniform(0.5, 1.0) * scale,
                             rotation=rand_rot(), segments=24, color=rand_color())

    parts = [rand_part((0.0, 0.0, 0.0), 0.35)]
    for _ in range(int(rng.integers(1, 4))):
        center = rng.uniform(-0.3, 0.3, size=3)
        parts.append(rand_part(center, rng.uniform(0.1, 0.2)))
    return merge_meshes(parts)
