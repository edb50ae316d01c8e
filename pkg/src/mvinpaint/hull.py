"""3D convex hull (quickhull) producing watertight triangle meshes."""

from __future__ import annotations

import numpy as np

from .errors import GeometryError
from .mesh import TriangleMesh


class _Face:
    __slots__ = ("a", "b", "c", "normal", "offset", "outside", "far_i", "far_d", "alive")

    def __init__(self, a: int, b: int, c: int, normal: np.ndarray, offset: float):
        self.a, self.b, self.c = a, b, c
        self.normal = normal
        self.offset = offset
        self.outside = np.empty(0, dtype=np.intp)
        self.far_i = -1
        self.far_d = 0.0
        self.alive = True

    def edges(self):
        return (self.a, self.b), (self.b, self.c), (self.c, self.a)


def _make_face(pts: np.ndarray, a: int, b: int, c: int, interior: np.ndarray) -> _Face:
    n = np.cross(pts[b] - pts[a], pts[c] - pts[a])
    nn = float(np.linalg.norm(n))
    if nn < 1e-14:
        raise GeometryError("degenerate hull face (collinear horizon edge)")
    n = n / nn
    off = float(n @ pts[a])
    if float(n @ interior) > off:
        # flip so the normal points away from the hull interior
        b, c = c, b
        n = -n
        off = -off
    return _Face(a, b, c, n, off)


def _assign(face: _Face, pts: np.ndarray, idx: np.ndarray, eps: float) -> np.ndarray:
    """Attach to `face` the subset of idx strictly outside it; return the rest."""
    if idx.size == 0:
        return idx
    d = pts[idx] @ face.normal - face.offset
    mine = d > eps
    if mine.any():
        face.outside = idx[mine]
        k = int(np.argmax(d[mine]))
        face.far_i = int(face.outside[k])
        face.far_d = float(d[mine][k])
    return idx[~mine]


def convex_hull3(points: np.ndarray, eps: float | None = None) -> TriangleMesh:
    """Convex hull of a 3D point set as a watertight, outward-wound triangle mesh.

    Every input point ends up on or inside all face half-spaces (within eps).
    Dense near-coplanar clusters (e.g. surface midpoints) can leave sliver
    faces whose planes cut hull vertices by more than eps; a re-hull pass over
    the hull vertices repairs that, and a final verification raises rather
    than return a non-convex result.
    Raises GeometryError for fewer than 4 points or (near-)coplanar input.
    """
    hull = _quickhull(points, eps)
    check_eps = eps if eps is not None else 1e-9
    for _ in range(2):
        if max_halfspace_violation(hull, hull.vertices) <= check_eps:
            break
        hull = _quickhull(hull.vertices, eps)
    if max_halfspace_violation(hull, hull.vertices) > 5e-8:
        raise GeometryError("hull refinement failed to reach convexity tolerance")
    return hull


def _quickhull(points: np.ndarray, eps: float | None = None) -> TriangleMesh:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise GeometryError(f"points must be (n, 3), got {pts.shape}")
    n_pts = len(pts)
    if n_pts < 4:
        raise GeometryError("convex hull needs at least 4 points")
    span = float((pts.max(axis=0) - pts.min(axis=0)).max())
    flat_tol = 1e-9 * max(1.0, span)
    if eps is None:
        eps = 1e-9 * max(1.0, span)

    # initial simplex: farthest axis-extreme pair, then line, then plane
    extremes = [int(np.argmin(pts[:, ax])) for ax in range(3)]
    extremes += [int(np.argmax(pts[:, ax])) for ax in range(3)]
    i0, i1, best = -1, -1, -1.0
    for p in extremes:
        for q in extremes:
            d = float(np.linalg.norm(pts[p] - pts[q]))
            if d > best:
                i0, i1, best = p, q, d
    if best < flat_tol:
        raise GeometryError("all points coincide")
    axis = (pts[i1] - pts[i0]) / best
    rel = pts - pts[i0]
    line_d = np.linalg.norm(rel - np.outer(rel @ axis, axis), axis=1)
    i2 = int(np.argmax(line_d))
    if line_d[i2] < flat_tol:
        raise GeometryError("points are collinear")
    pn = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    pn /= np.linalg.norm(pn)
    plane_d = np.abs(rel @ pn)
    i3 = int(np.argmax(plane_d))
    if plane_d[i3] < flat_tol:
        raise GeometryError("points are coplanar")

    interior = pts[[i0, i1, i2, i3]].mean(axis=0)
    faces = [
        _make_face(pts, a, b, c, interior)
        for a, b, c in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3))
    ]
    idx = np.arange(n_pts, dtype=np.intp)
    for f in faces:
        idx = _assign(f, pts, idx, eps)

    while True:
        best_f = None
        for f in faces:
            if f.alive and f.outside.size and (best_f is None or f.far_d > best_f.far_d):
                best_f = f
        if best_f is None:
            break
        apex = best_f.far_i
        ap = pts[apex]

        visible = [f for f in faces if f.alive and float(ap @ f.normal) - f.offset > eps]
        edge_set = {e for f in visible for e in f.edges()}
        horizon = [(u, v) for (u, v) in edge_set if (v, u) not in edge_set]
        if not horizon:
            raise GeometryError("inconsistent horizon (degenerate point configuration)")

        cand = np.unique(np.concatenate([f.outside for f in visible]))
        cand = cand[cand != apex]
        for f in visible:
            f.alive = False
            f.outside = np.empty(0, dtype=np.intp)

        new_faces = [_make_face(pts, u, v, apex, interior) for (u, v) in horizon]
        for f in new_faces:
            cand = _assign(f, pts, cand, eps)
        faces.extend(new_faces)

    live = [f for f in faces if f.alive]
    used = sorted({v for f in live for v in (f.a, f.b, f.c)})
    remap = {v: i for i, v in enumerate(used)}
    tri = np.array([[remap[f.a], remap[f.b], remap[f.c]] for f in live], dtype=np.int32)
    return TriangleMesh(pts[used], tri)


def face_planes(hull: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals and offsets (n.x = d on the plane) per hull face."""
    v = hull.vertices
    f = hull.faces
    n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    norms = np.linalg.norm(n, axis=1)
    norms[norms == 0] = 1.0
    n = n / norms[:, None]
    d = np.einsum("ij,ij->i", n, v[f[:, 0]])
    return n, d


def max_halfspace_violation(hull: TriangleMesh, points: np.ndarray) -> float:
    """Largest signed distance of any point outside any hull face plane.

    <= 0 means every point is on or inside the hull.
    """
    n, d = face_planes(hull)
    dist = np.asarray(points, dtype=np.float64) @ n.T - d
    return float(dist.max()) if dist.size else 0.0


def is_convex(hull: TriangleMesh, tol: float = 1e-7) -> bool:
    """True when every hull vertex is on the non-positive side of every face plane."""
    return max_halfspace_violation(hull, hull.vertices) <= tol
