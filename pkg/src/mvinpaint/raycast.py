"""Brute-force ray-casting visibility, the independent oracle for the rasterizer."""

from __future__ import annotations

import math

import numpy as np

from .camera import CameraPose
from .errors import GeometryError
from .raster import BACKGROUND_ID, DEFAULT_NEAR, SceneObject, _resolution_hw

_CHUNK = 1024  # rays per batch to bound the (rays x triangles) workspace


def raycast_visibility(scene: list[SceneObject], camera: CameraPose, resolution,
                       near: float = DEFAULT_NEAR, return_depth: bool = False):
    """Per-pixel frontmost object id via ray-triangle intersection.

    Rays go through pixel centers; id semantics match rasterize_scene
    (face flags map to the flag id, background is BACKGROUND_ID).
    """
    if not scene:
        raise GeometryError("scene is empty")
    h, w = _resolution_hw(resolution)
    rot, _ = camera.view_matrix()
    origin = camera.position
    tan_half = math.tan(camera.fov / 2.0)
    aspect = w / h

    v0s, e1s, e2s, fids = [], [], [], []
    for obj in scene:
        v = obj.mesh.vertices
        f = obj.mesh.faces
        v0s.append(v[f[:, 0]])
        e1s.append(v[f[:, 1]] - v[f[:, 0]])
        e2s.append(v[f[:, 2]] - v[f[:, 0]])
        if obj.face_flags is not None:
            fids.append(np.where(obj.face_flags, obj.flag_id, obj.object_id))
        else:
            fids.append(np.full(len(f), obj.object_id))
    v0 = np.vstack(v0s)
    e1 = np.vstack(e1s)
    e2 = np.vstack(e2s)
    tri_id = np.concatenate(fids).astype(np.int32)

    # Moller-Trumbore terms that only involve the (shared) origin
    tvec = origin - v0                     # (T, 3)
    qvec = np.cross(tvec, e1)              # (T, 3)
    e2qv = np.einsum("ij,ij->i", e2, qvec)  # (T,)

    jj, ii = np.meshgrid(np.arange(w), np.arange(h))
    x_ndc = (jj.ravel() + 0.5) / w * 2.0 - 1.0
    y_ndc = 1.0 - (ii.ravel() + 0.5) / h * 2.0
    dirs_cam = np.stack(
        [x_ndc * tan_half * aspect, y_ndc * tan_half, -np.ones_like(x_ndc)], axis=1
    )
    dirs = dirs_cam @ rot  # camera->world is rot.T applied to each row

    n_rays = len(dirs)
    out_ids = np.full(n_rays, BACKGROUND_ID, dtype=np.int32)
    out_depth = np.full(n_rays, np.inf)

    for s in range(0, n_rays, _CHUNK):
        d = dirs[s:s + _CHUNK]                         # (P, 3)
        pvec = np.cross(d[:, None, :], e2[None, :, :])  # (P, T, 3)
        det = np.einsum("ptk,tk->pt", pvec, e1)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_det = 1.0 / det
            u = np.einsum("tk,ptk->pt", tvec, pvec) * inv_det
            v = np.einsum("pk,tk->pt", d, qvec) * inv_det
            t = e2qv[None, :] * inv_det
        hit = (
            (np.abs(det) > 1e-12)
            & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
            & (t > near)  # t equals view depth since dir_cam z = -1
        )
        t = np.where(hit, t, np.inf)
        best = np.argmin(t, axis=1)
        rows = np.arange(len(d))
        best_t = t[rows, best]
        found = np.isfinite(best_t)
        out_ids[s:s + _CHUNK][found] = tri_id[best[found]]
        out_depth[s:s + _CHUNK][found] = best_t[found]

    ids_img = out_ids.reshape(h, w)
    if return_depth:
        return ids_img, out_depth.reshape(h, w).astype(np.float32)
    return ids_img
