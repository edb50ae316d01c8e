"""2x2 multiview grids and the ground-truth / masked / mask render triple."""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import pi
from pathlib import Path

import numpy as np

from .camera import CameraPose, CameraRig
from .errors import GridError
from .images import binary_png_bytes, color_png_bytes
from .masks import FaceSelectionMask, HullMask, MaskGeometry, PrimitiveMask, ViewMasks
from .mesh import TriangleMesh
from .raster import SceneObject, rasterize_scene

S_ID = 0
MASK_ID = 1

FILL_COLORS = {
    "white": np.array([1.0, 1.0, 1.0]),
    "purple": np.array([0.62, 0.16, 0.9]),  # UI highlight for masked pixels
}

# quadrant layout: row-major, counter-clockwise azimuth
#   [ view0 (az 0+off)   view1 (az 90+off) ]
#   [ view2 (az 180+off) view3 (az 270+off) ]
_SLICES = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class RenderConfig:
    """Rendering knobs shared by the forge, the edit service, and the sweep."""

    view_resolution: int = 512
    distance: float = 2.8
    fov: float = pi * 50.0 / 180.0
    elevation: float = pi / 4.0
    fill: str = "white"
    supersample: bool = False
    primitive_segments: int = 48

    def rig(self, azimuth_offset: float = 0.0) -> CameraRig:
        return CameraRig.canonical(azimuth_offset, self.elevation, self.distance, self.fov)


@dataclass(frozen=True)
class MultiviewGrid:
    """Four equal views tiled into one image, with per-quadrant camera poses."""

    image: np.ndarray  # color: (2H, 2W, 3) float32; binary: (2H, 2W) bool
    modality: str      # "color" | "binary"
    poses: tuple[CameraPose, CameraPose, CameraPose, CameraPose]

    def __post_init__(self):
        img = self.image
        if self.modality == "color":
            if img.ndim != 3 or img.shape[2] != 3:
                raise GridError("color grid must be (H, W, 3)")
        elif self.modality == "binary":
            if img.ndim != 2 or img.dtype != bool:
                raise GridError("binary grid must be a 2D bool array")
        else:
            raise GridError(f"unknown modality {self.modality!r}")
        if img.shape[0] % 2 or img.shape[1] % 2:
            raise GridError("grid dimensions must be even")
        if len(self.poses) != 4:
            raise GridError("grid needs exactly 4 poses")

    @property
    def view_shape(self) -> tuple[int, int]:
        return self.image.shape[0] // 2, self.image.shape[1] // 2

    def png_bytes(self) -> bytes:
        if self.modality == "color":
            return color_png_bytes(self.image)
        return binary_png_bytes(self.image)

    def poses_json(self) -> dict:
        return {"layout": "row-major, counter-clockwise azimuth",
                "quadrants": [p.to_json() for p in self.poses]}


def assemble_grid(views: list[np.ndarray], poses) -> MultiviewGrid:
    """Tile four equal-size views row-major into a 2x2 grid."""
    if len(views) != 4:
        raise GridError(f"need exactly 4 views, got {len(views)}")
    shape = views[0].shape
    if any(v.shape != shape for v in views[1:]):
        raise GridError("views have mismatched dimensions")
    h, w = shape[:2]
    modality = "binary" if views[0].ndim == 2 else "color"
    if modality == "binary":
        out = np.zeros((2 * h, 2 * w), dtype=bool)
    else:
        out = np.zeros((2 * h, 2 * w, 3), dtype=np.float32)
    for k, (r, c) in enumerate(_SLICES):
        out[r * h:(r + 1) * h, c * w:(c + 1) * w] = views[k]
    return MultiviewGrid(out, modality, tuple(poses))


def split_grid(grid: MultiviewGrid) -> list[tuple[np.ndarray, CameraPose]]:
    """Exact quadrant extraction, inverse of assemble_grid."""
    h, w = grid.view_shape
    out = []
    for k, (r, c) in enumerate(_SLICES):
        out.append((grid.image[r * h:(r + 1) * h, c * w:(c + 1) * w], grid.poses[k]))
    return out


def render_tuple(mesh: TriangleMesh, mask: MaskGeometry | None, rig: CameraRig,
                 cfg: RenderConfig = RenderConfig()) -> tuple[MultiviewGrid, MultiviewGrid, MultiviewGrid]:
    """Render (ground-truth grid, masked grid, binary mask grid) for one shape+mask.

    The mask grid is 1 exactly where the mask geometry is frontmost; the
    masked grid equals the ground truth wherever the mask is 0 and the fill
    color where it is 1, so the mask removes content but never alters it.
    """
    res = cfg.view_resolution
    fill = FILL_COLORS[cfg.fill].astype(np.float32)
    gt_views, mask_views = [], []

    mask_mesh = None
    flags = None
    if isinstance(mask, HullMask):
        mask_mesh = mask.mesh
    elif isinstance(mask, PrimitiveMask):
        mask_mesh = mask.to_mesh(cfg.primitive_segments)
    elif isinstance(mask, FaceSelectionMask):
        flags = mask.flags()
    elif isinstance(mask, ViewMasks):
        if mask.images.shape[1:] != (res, res):
            raise GridError("view mask resolution does not match render resolution")

    for k in range(4):
        cam = rig.poses[k]
        if flags is not None:
            buf = rasterize_scene(
                [SceneObject(mesh, S_ID, face_flags=flags, flag_id=MASK_ID)],
                cam, res, supersample=cfg.supersample)
            gt_views.append(buf.color)
            mask_views.append(buf.object_id == MASK_ID)
            continue
        buf = rasterize_scene([SceneObject(mesh, S_ID)], cam, res, supersample=cfg.supersample)
        gt_views.append(buf.color)
        if mask_mesh is not None:
            combined = rasterize_scene(
                [SceneObject(mesh, S_ID), SceneObject(mask_mesh, MASK_ID)],
                cam, res, shading="none")
            mask_views.append(combined.object_id == MASK_ID)
        elif isinstance(mask, ViewMasks):
            mask_views.append(mask.images[k])
        else:  # empty mask
            mask_views.append(np.zeros((res, res), dtype=bool))

    gt = assemble_grid(gt_views, rig.poses)
    mask_grid = assemble_grid(mask_views, rig.poses)
    masked_img = np.where(mask_grid.image[..., None], fill, gt.image)
    masked = MultiviewGrid(masked_img, "color", rig.poses)
    return gt, masked, mask_grid


def save_grid_files(out_dir, gt: MultiviewGrid, masked: MultiviewGrid,
                    mask_grid: MultiviewGrid) -> dict[str, str]:
    """Write gt.png / masked.png / mask.png / poses.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "gt.png").write_bytes(gt.png_bytes())
    (out / "masked.png").write_bytes(masked.png_bytes())
    (out / "mask.png").write_bytes(mask_grid.png_bytes())
    (out / "poses.json").write_text(json.dumps(gt.poses_json(), indent=1))
    return {"gt": "gt.png", "masked": "masked.png", "mask": "mask.png", "poses": "poses.json"}
