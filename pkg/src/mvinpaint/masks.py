"""3D-consistent inpainting mask synthesis.

Three training mask families over a normalized shape S:
  type1 — coarse blob: convex hull of the face midpoints above a random plane
          cut, inflated 20% about its centroid so it envelopes the cut part
          (and never z-fights with S).
  type2 — sculpt selection: all faces whose midpoint lies above a random plane.
  type3 — surface patch: faces whose midpoint falls inside a union of random
          elliptic cylinders centered on a random vertex.
Plus the per-view random-2D baseline masks and user-authored primitive sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .errors import GeometryError, MaskSamplingError
from .geom import orthonormal_basis, rotation_from_euler_xyz
from .hull import convex_hull3, max_halfspace_violation
from .mesh import Plane, TriangleMesh, face_midpoints
from . import tessellate


class MaskType(str, Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"
    TYPE3 = "type3"
    RANDOM2D = "random2d"
    USER = "user"


@dataclass(frozen=True)
class MaskConfig:
    """Knobs for the mask generators; defaults follow the training recipe."""

    min_face_fraction: float = 0.02   # plane-cut selections: reject tiny masks
    max_face_fraction: float = 0.90   # ... and near-total masks
    max_attempts: int = 100
    hull_scale: float = 1.2
    cylinder_count: tuple[int, int] = (3, 6)       # inclusive
    cylinder_size: tuple[float, float] = (0.1, 0.3)  # half-height and radii
    random2d_coverage: tuple[float, float] = (0.05, 0.5)
    primitive_segments: int = 48
    # zero-area faces still render, but can be dropped from midpoint selections
    exclude_degenerate_faces: bool = False
    degenerate_area_tol: float = 1e-12


@dataclass(frozen=True)
class HullMask:
    """Type-1 mask: a closed convex mesh rendered as separate scene geometry.

    source_midpoints are the face midpoints the hull was grown from;
    diagnostic only (containment audits), not used for rendering.
    """

    mesh: TriangleMesh
    mask_type: MaskType = MaskType.TYPE1
    source_midpoints: np.ndarray | None = None

    def __post_init__(self):
        violation = max_halfspace_violation(self.mesh, self.mesh.vertices)
        if violation > 1e-7:
            raise GeometryError(f"hull mask is not convex (violation {violation:.3g})")


@dataclass(frozen=True)
class FaceSelectionMask:
    """Type-2/3 mask: a subset of S's faces, rendered via an object-id pass."""

    indices: np.ndarray
    num_faces: int
    mask_type: MaskType

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int32))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.num_faces):
            raise GeometryError("face selection index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def flags(self) -> np.ndarray:
        f = np.zeros(self.num_faces, dtype=bool)
        f[self.indices] = True
        return f


@dataclass(frozen=True)
class Primitive:
    """User mask primitive. size semantics by kind:
    ellipsoid -> radii (a, b, c); box -> half-extents; cylinder -> (ra, rb, half_height).
    rotation is intrinsic XYZ Euler angles in radians.
    """

    kind: str
    center: tuple[float, float, float]
    size: tuple[float, float, float]
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("ellipsoid", "box", "cylinder"):
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        if len(self.center) != 3 or len(self.size) != 3 or len(self.rotation) != 3:
            raise ValueError("center, size, and rotation must have 3 components")
        if any(s <= 0 for s in self.size):
            raise ValueError("primitive size parameters must be positive")
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        object.__setattr__(self, "size", tuple(float(x) for x in self.size))
        object.__setattr__(self, "rotation", tuple(float(x) for x in self.rotation))

    def to_json(self) -> dict:
        return {"kind": self.kind, "center": list(self.center),
                "size": list(self.size), "rotation": list(self.rotation)}

    @classmethod
    def from_json(cls, obj: dict) -> "Primitive":
        return cls(kind=obj["kind"], center=tuple(obj["center"]),
                   size=tuple(obj["size"]), rotation=tuple(obj.get("rotation", (0, 0, 0))))


@dataclass(frozen=True)
class PrimitiveMask:
    """User mask: a set of primitives tessellated to geometry at render time."""

    primitives: tuple[Primitive, ...]
    mask_type: MaskType = MaskType.USER

    def to_mesh(self, segments: int = 48) -> TriangleMesh:
        return tessellate.merge_meshes([tessellate_primitive(p, segments) for p in self.primitives])


@dataclass(frozen=True)
class ViewMasks:
    """Random-2D baseline: four per-view binary images, no 3D consistency."""

    images: np.ndarray  # (4, H, W) bool
    mask_type: MaskType = MaskType.RANDOM2D

    def __post_init__(self):
        img = np.asarray(self.images)
        if img.ndim != 3 or img.shape[0] != 4:
            raise GeometryError(f"view masks must be (4, H, W), got {img.shape}")
        if img.dtype != bool:
            raise GeometryError("view masks must be strictly binary (bool)")
        img.setflags(write=False)
        object.__setattr__(self, "images", img)


MaskGeometry = Union[HullMask, FaceSelectionMask, PrimitiveMask, ViewMasks]


@dataclass(frozen=True)
class CylinderSpec:
    """Elliptic cylinder: center p, unit axis, half-height, radii (a, b), and a
    rotation of the ellipse frame about the axis."""

    center: np.ndarray
    axis: np.ndarray
    half_height: float
    radius_a: float
    radius_b: float
    frame_angle: float = 0.0

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=np.float64)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise GeometryError("cylinder axis must be unit length")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        e1, e2 = orthonormal_basis(self.axis)
        c, s = np.cos(self.frame_angle), np.sin(self.frame_angle)
        return c * e1 + s * e2, -s * e1 + c * e2


def sample_unit_vector(rng: np.random.Generator) -> np.ndarray:
    """Uniform direction on the unit sphere (normalized Gaussian)."""
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def sample_plane(rng: np.random.Generator, bbox: tuple[np.ndarray, np.ndarray]) -> Plane:
    """Random cut plane: point uniform in bbox, normal uniform on the sphere."""
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bbox)
    if not np.all(hi >= lo) or float((hi - lo).max()) <= 0:
        raise GeometryError("degenerate bbox")
    p = rng.uniform(lo, hi)
    return Plane(p, sample_unit_vector(rng))


def faces_above_plane(mesh: TriangleMesh, plane: Plane,
                      mask_type: MaskType = MaskType.TYPE2) -> FaceSelectionMask:
    """Faces whose midpoint satisfies midpoint.n >= p.n."""
    above = plane.signed_distance(face_midpoints(mesh)) >= 0.0
    return FaceSelectionMask(np.nonzero(above)[0].astype(np.int32), mesh.num_faces, mask_type)


def scale_about_centroid(mesh: TriangleMesh, factor: float) -> TriangleMesh:
    """Scale every vertex radially about the vertex centroid."""
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    c = mesh.vertices.mean(axis=0)
    return mesh.with_vertices(c + (mesh.vertices - c) * factor)


def _selection_fraction_ok(count: int, total: int, cfg: MaskConfig) -> bool:
    frac = count / total
    return cfg.min_face_fraction <= frac <= cfg.max_face_fraction


def _selectable_faces(mesh: TriangleMesh, cfg: MaskConfig) -> np.ndarray:
    """Bool per face: eligible for midpoint-based selection."""
    if not cfg.exclude_degenerate_faces:
        return np.ones(mesh.num_faces, dtype=bool)
    tri = mesh.vertices[mesh.faces]
    areas = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    return areas > cfg.degenerate_area_tol


def gen_mask_type1(mesh: TriangleMesh, rng: np.random.Generator,
                   cfg: MaskConfig = MaskConfig()) -> HullMask:
    """Coarse blob: hull of midpoints above a sampled plane, inflated about its centroid."""
    bbox = mesh.bbox()
    mids = face_midpoints(mesh)
    selectable = _selectable_faces(mesh, cfg)
    for _ in range(cfg.max_attempts):
        plane = sample_plane(rng, bbox)
        above = (plane.signed_distance(mids) >= 0.0) & selectable
        count = int(above.sum())
        if not _selection_fraction_ok(count, mesh.num_faces, cfg):
            continue
        try:
            hull = convex_hull3(mids[above])
            return HullMask(scale_about_centroid(hull, cfg.hull_scale),
                            source_midpoints=mids[above])
        except GeometryError:
            continue  # degenerate cut or hull outside tolerance: resample the plane
    raise MaskSamplingError(f"type1: no viable plane cut in {cfg.max_attempts} attempts")


def gen_mask_type2(mesh: TriangleMesh, rng: np.random.Generator,
                   cfg: MaskConfig = MaskConfig()) -> FaceSelectionMask:
    """Sculpt selection: faces above a sampled plane, within the size bounds."""
    bbox = mesh.bbox()
    mids = face_midpoints(mesh)
    selectable = _selectable_faces(mesh, cfg)
    for _ in range(cfg.max_attempts):
        plane = sample_plane(rng, bbox)
        above = (plane.signed_distance(mids) >= 0.0) & selectable
        if _selection_fraction_ok(int(above.sum()), mesh.num_faces, cfg):
            return FaceSelectionMask(np.nonzero(above)[0].astype(np.int32),
                                     mesh.num_faces, MaskType.TYPE2)
    raise MaskSamplingError(f"type2: no viable plane cut in {cfg.max_attempts} attempts")


def sample_cylinders(rng: np.random.Generator, center: np.ndarray,
                     cfg: MaskConfig = MaskConfig()) -> list[CylinderSpec]:
    """Draw the type-3 cylinder bundle: count uniform on the configured range,
    axis uniform on the sphere, half-height and both radii uniform on the size range."""
    k_lo, k_hi = cfg.cylinder_count
    s_lo, s_hi = cfg.cylinder_size
    k = int(rng.integers(k_lo, k_hi + 1))
    out = []
    for _ in range(k):
        axis = sample_unit_vector(rng)
        half_height = float(rng.uniform(s_lo, s_hi))
        ra = float(rng.uniform(s_lo, s_hi))
        rb = float(rng.uniform(s_lo, s_hi))
        angle = float(rng.uniform(0.0, 2.0 * np.pi))
        out.append(CylinderSpec(center, axis, half_height, ra, rb, angle))
    return out


def points_in_cylinder_union(points: np.ndarray, cylinders: Sequence[CylinderSpec]) -> np.ndarray:
    """Boolean per point: inside at least one cylinder."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    inside = np.zeros(len(pts), dtype=bool)
    for cyl in cylinders:
        rel = pts - cyl.center
        axial = rel @ cyl.axis
        e1, e2 = cyl.basis()
        u = rel @ e1
        v = rel @ e2
        hit = (np.abs(axial) <= cyl.half_height) & (
            (u / cyl.radius_a) ** 2 + (v / cyl.radius_b) ** 2 <= 1.0
        )
        inside |= hit
    return inside


def point_in_cylinder_union(point: np.ndarray, cylinders: Sequence[CylinderSpec]) -> bool:
    return bool(points_in_cylinder_union(np.asarray(point)[None, :], cylinders)[0])


def gen_mask_type3(mesh: TriangleMesh, rng: np.random.Generator,
                   cfg: MaskConfig = MaskConfig()) -> FaceSelectionMask:
    """Surface patch: faces whose midpoint falls inside a cylinder union around
    a randomly picked vertex. Resamples until the selection is non-empty."""
    if mesh.num_vertices < 1:
        raise GeometryError("mesh has no vertices")
    mids = face_midpoints(mesh)
    selectable = _selectable_faces(mesh, cfg)
    for _ in range(cfg.max_attempts):
        p = mesh.vertices[int(rng.integers(0, mesh.num_vertices))]
        cylinders = sample_cylinders(rng, p, cfg)
        inside = points_in_cylinder_union(mids, cylinders) & selectable
        if inside.any():
            return FaceSelectionMask(np.nonzero(inside)[0].astype(np.int32),
                                     mesh.num_faces, MaskType.TYPE3)
    raise MaskSamplingError(f"type3: empty selection in {cfg.max_attempts} attempts")


def _disc_stamp(radius: int) -> np.ndarray:
    y, x = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    return x * x + y * y <= radius * radius


def _random_view_mask(rng: np.random.Generator, res: int, cfg: MaskConfig) -> np.ndarray:
    lo, hi = cfg.random2d_coverage
    for _ in range(cfg.max_attempts):
        m = np.zeros((res, res), dtype=bool)
        for _ in range(int(rng.integers(1, 5))):
            w = int(rng.uniform(0.1, 0.5) * res)
            h = int(rng.uniform(0.1, 0.5) * res)
            x0 = int(rng.integers(0, max(1, res - w)))
            y0 = int(rng.integers(0, max(1, res - h)))
            m[y0:y0 + h, x0:x0 + w] = True
        if rng.random() < 0.5:
            # thick random-walk stroke
            brush = max(2, int(rng.integers(res // 32, max(res // 32 + 1, res // 10))))
            stamp = _disc_stamp(brush)
            pos = rng.uniform(brush, res - brush, size=2)
            for _ in range(int(rng.integers(20, 80))):
                pos = np.clip(pos + rng.normal(scale=res / 24, size=2), brush, res - 1 - brush)
                cy, cx = int(pos[0]), int(pos[1])
                m[cy - brush:cy + brush + 1, cx - brush:cx + brush + 1] |= stamp
        if lo <= m.mean() <= hi:
            return m
    # statistically unreachable fallback: centered block at ~20% coverage
    side = max(1, int(res * 0.45))
    m = np.zeros((res, res), dtype=bool)
    o = (res - side) // 2
    m[o:o + side, o:o + side] = True
    return m


def gen_random2d_masks(rng: np.random.Generator, resolution: int,
                       cfg: MaskConfig = MaskConfig()) -> ViewMasks:
    """Four independent per-view masks (rectangles plus optional strokes)."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    return ViewMasks(np.stack([_random_view_mask(rng, resolution, cfg) for _ in range(4)]))


def tessellate_primitive(p: Primitive, segments: int = 48) -> TriangleMesh:
    rot = rotation_from_euler_xyz(p.rotation)
    if p.kind == "box":
        return tessellate.make_box(p.center, p.size, rotation=rot)
    if p.kind == "ellipsoid":
        return tessellate.make_ellipsoid(p.center, p.size, rotation=rot,
                                         segments=segments, rings=max(4, segments // 2))
    return tessellate.make_cylinder(p.center, p.size[:2], half_height=p.size[2],
                                    rotation=rot, segments=segments)


def primitives_to_mask(primitives: Sequence[Primitive]) -> PrimitiveMask:
    """Validate a user primitive list into a renderable mask."""
    prims = tuple(primitives)
    if not prims:
        raise ValueError("primitive list is empty")
    return PrimitiveMask(prims)


def generate_mask(mesh: TriangleMesh, mask_type: MaskType, rng: np.random.Generator,
                  cfg: MaskConfig = MaskConfig(), view_resolution: int = 512) -> MaskGeometry:
    """Dispatch to the generator for `mask_type` (dataset types + random2d)."""
    if mask_type == MaskType.TYPE1:
        return gen_mask_type1(mesh, rng, cfg)
    if mask_type == MaskType.TYPE2:
        return gen_mask_type2(mesh, rng, cfg)
    if mask_type == MaskType.TYPE3:
        return gen_mask_type3(mesh, rng, cfg)
    if mask_type == MaskType.RANDOM2D:
        return gen_random2d_masks(rng, view_resolution, cfg)
    raise ValueError(f"no generator for mask type {mask_type}")
