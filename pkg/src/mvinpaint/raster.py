"""Software z-buffer rasterizer with object-id and face-selection passes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraPose
from .errors import GeometryError
from .mesh import DEFAULT_GRAY, TriangleMesh

BACKGROUND_ID = -1
BACKGROUND_COLOR = (1.0, 1.0, 1.0)  # training renders are white-backed
DEFAULT_NEAR = 0.05

# camera-space studio light rig, shared by rasterizer renders
LIGHTS = (
    (np.array([0.35, 0.45, 0.82]), 0.55),   # key
    (np.array([-0.8, 0.15, 0.58]), 0.25),   # fill
    (np.array([0.2, -0.6, -0.77]), 0.15),   # rim
)
AMBIENT = 0.28


@dataclass(frozen=True)
class SceneObject:
    """A mesh in the scene. Faces with a set flag report `flag_id` in the
    object-id buffer instead of `object_id` (the face-selection mask pass)."""

    mesh: TriangleMesh
    object_id: int
    face_flags: np.ndarray | None = None
    flag_id: int | None = None

    def __post_init__(self):
        if self.face_flags is not None:
            flags = np.asarray(self.face_flags, dtype=bool)
            if flags.shape != (self.mesh.num_faces,):
                raise GeometryError("face_flags must have one entry per face")
            if self.flag_id is None:
                raise GeometryError("face_flags requires a flag_id")
            object.__setattr__(self, "face_flags", flags)


@dataclass
class RenderBuffers:
    """Color (H, W, 3) in [0,1], view-space depth (+inf background), object id."""

    color: np.ndarray
    depth: np.ndarray
    object_id: np.ndarray

    @property
    def resolution(self) -> tuple[int, int]:
        return self.depth.shape


def _resolution_hw(resolution) -> tuple[int, int]:
    if isinstance(resolution, int):
        hw = (resolution, resolution)
    else:
        hw = (int(resolution[0]), int(resolution[1]))
    if min(hw) < 16:
        raise GeometryError("resolution must be at least 16 pixels")
    return hw


def _face_shade(normals_cam: np.ndarray) -> np.ndarray:
    """Two-sided Lambertian factor per face for the fixed light rig."""
    s = np.full(len(normals_cam), AMBIENT)
    for direction, intensity in LIGHTS:
        d = direction / np.linalg.norm(direction)
        s += intensity * np.abs(normals_cam @ d)
    return np.clip(s, 0.0, 1.0)


def _clip_near(tri: np.ndarray, attrs: np.ndarray, near: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Clip one camera-space triangle against z = -near (keep z <= -near).

    attrs rows ride along with the vertices (used for vertex colors).
    Returns 0..2 triangles.
    """
    keep = tri[:, 2] <= -near
    if keep.all():
        return [(tri, attrs)]
    if not keep.any():
        return []
    poly_v, poly_a = [], []
    for i in range(3):
        j = (i + 1) % 3
        vi, vj = tri[i], tri[j]
        ai, aj = attrs[i], attrs[j]
        if keep[i]:
            poly_v.append(vi)
            poly_a.append(ai)
        if keep[i] != keep[j]:
            t = (-near - vi[2]) / (vj[2] - vi[2])
            poly_v.append(vi + t * (vj - vi))
            poly_a.append(ai + t * (aj - ai))
    out = []
    for k in range(1, len(poly_v) - 1):
        out.append((np.stack([poly_v[0], poly_v[k], poly_v[k + 1]]),
                    np.stack([poly_a[0], poly_a[k], poly_a[k + 1]])))
    return out


def rasterize_scene(scene: list[SceneObject], camera: CameraPose, resolution,
                    shading: str = "lambert", near: float = DEFAULT_NEAR,
                    supersample: bool = False) -> RenderBuffers:
    """Perspective-correct z-buffered rasterization of a scene.

    shading: "lambert" (fixed light rig over albedo), "unlit" (albedo only),
    or "none" (skip the color pass entirely; color buffer stays background).
    Supersampling renders color at 2x and box-filters down; id/depth always
    come from a crisp 1x pass.
    """
    if not scene:
        raise GeometryError("scene is empty")
    h, w = _resolution_hw(resolution)
    if supersample and shading != "none":
        hi = _rasterize(scene, camera, (2 * h, 2 * w), shading, near)
        base = _rasterize(scene, camera, (h, w), "none", near)
        c = hi.color
        base.color = 0.25 * (c[0::2, 0::2] + c[1::2, 0::2] + c[0::2, 1::2] + c[1::2, 1::2])
        return base
    return _rasterize(scene, camera, (h, w), shading, near)


def _rasterize(scene, camera, hw, shading, near) -> RenderBuffers:
    h, w = hw
    rot, trans = camera.view_matrix()
    tan_half = math.tan(camera.fov / 2.0)
    aspect = w / h
    sx = 0.5 * w / (tan_half * aspect)
    sy = 0.5 * h / tan_half

    color = np.empty((h, w, 3), dtype=np.float64)
    color[:] = BACKGROUND_COLOR
    depth = np.full((h, w), np.inf, dtype=np.float64)
    ids = np.full((h, w), BACKGROUND_ID, dtype=np.int32)
    want_color = shading != "none"

    for obj in scene:
        mesh = obj.mesh
        v_cam = mesh.vertices @ rot.T + trans
        faces = mesh.faces
        tri_cam = v_cam[faces]  # (m, 3, 3)

        if want_color:
            if mesh.colors is not None:
                albedo = mesh.colors
            else:
                albedo = np.full((mesh.num_vertices, 3), DEFAULT_GRAY)
            if shading == "lambert":
                e1 = tri_cam[:, 1] - tri_cam[:, 0]
                e2 = tri_cam[:, 2] - tri_cam[:, 0]
                n = np.cross(e1, e2)
                nn = np.linalg.norm(n, axis=1)
                nn[nn == 0] = 1.0
                shade = _face_shade(n / nn[:, None])
            else:
                shade = np.ones(mesh.num_faces)

        if obj.face_flags is not None:
            face_ids = np.where(obj.face_flags, obj.flag_id, obj.object_id).astype(np.int32)
        else:
            face_ids = np.full(mesh.num_faces, obj.object_id, dtype=np.int32)

        in_front = tri_cam[:, :, 2] <= -near  # (m, 3)
        all_front = in_front.all(axis=1)
        any_front = in_front.any(axis=1)

        for fi in range(len(faces)):
            if not any_front[fi]:
                continue
            attr = albedo[faces[fi]] if want_color else np.zeros((3, 3))
            if all_front[fi]:
                pieces = [(tri_cam[fi], attr)]
            else:
                pieces = _clip_near(tri_cam[fi], attr, near)
            for tv, ta in pieces:
                invw = -1.0 / tv[:, 2]
                px = tv[:, 0] * invw * sx + (0.5 * w - 0.5)
                py = (0.5 * h - 0.5) - tv[:, 1] * invw * sy
                _draw_triangle(
                    px, py, invw, ta if want_color else None,
                    shade[fi] if want_color else 0.0,
                    int(face_ids[fi]), color, depth, ids,
                )
    return RenderBuffers(color.astype(np.float32), depth.astype(np.float32), ids)


def _draw_triangle(px, py, invw, attrs, shade, out_id, color, depth, ids):
    h, w = depth.shape
    j0 = max(0, int(math.ceil(min(px))))
    j1 = min(w - 1, int(math.floor(max(px))))
    i0 = max(0, int(math.ceil(min(py))))
    i1 = min(h - 1, int(math.floor(max(py))))
    if j0 > j1 or i0 > i1:
        return
    x0, x1, x2 = px
    y0, y1, y2 = py
    area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if area == 0.0:
        return

    jj = np.arange(j0, j1 + 1, dtype=np.float64)[None, :]
    ii = np.arange(i0, i1 + 1, dtype=np.float64)[:, None]
    w0 = (x2 - x1) * (ii - y1) - (y2 - y1) * (jj - x1)
    w1 = (x0 - x2) * (ii - y2) - (y0 - y2) * (jj - x2)
    w2 = (x1 - x0) * (ii - y0) - (y1 - y0) * (jj - x0)
    if area > 0.0:
        inside = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
    else:
        inside = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
    if not inside.any():
        return

    b0 = w0 / area
    b1 = w1 / area
    b2 = w2 / area
    inv_depth = b0 * invw[0] + b1 * invw[1] + b2 * invw[2]
    zblock = depth[i0:i1 + 1, j0:j1 + 1]
    with np.errstate(divide="ignore"):
        z = 1.0 / inv_depth
    upd = inside & (z < zblock)
    if not upd.any():
        return
    zblock[upd] = z[upd]
    ids[i0:i1 + 1, j0:j1 + 1][upd] = out_id
    if attrs is not None:
        rgb = (
            b0[..., None] * (attrs[0] * invw[0])
            + b1[..., None] * (attrs[1] * invw[1])
            + b2[..., None] * (attrs[2] * invw[2])
        ) * z[..., None]
        np.clip(rgb * shade, 0.0, 1.0, out=rgb)
        color[i0:i1 + 1, j0:j1 + 1][upd] = rgb[upd]
