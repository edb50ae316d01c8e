"""Multiview inpainting toolkit.

3D-consistent mask synthesis, occlusion-aware 2x2 multiview grid rendering,
batch training-dataset forging, and edit-session orchestration against a
pluggable inpainting backend.
"""

__version__ = "0.1.0"

from .camera import CameraPose, CameraRig, camera_pose  # noqa: F401
from .grid import MultiviewGrid, RenderConfig, assemble_grid, render_tuple, split_grid  # noqa: F401
from .hull import convex_hull3  # noqa: F401
from .masks import (  # noqa: F401
    CylinderSpec, FaceSelectionMask, HullMask, MaskConfig, MaskGeometry, MaskType,
    Primitive, PrimitiveMask, ViewMasks, gen_mask_type1, gen_mask_type2, gen_mask_type3,
    gen_random2d_masks, generate_mask, primitives_to_mask,
)
from .mesh import NormalizeTransform, Plane, TriangleMesh, face_midpoints, mesh_to_obj, normalize_mesh, parse_obj  # noqa: F401
from .metrics import azimuth_sweep, mask_coverage, ssim, unmasked_preservation  # noqa: F401
