"""Camera poses on the canonical sphere and the four-view rig."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

HALF_PI = math.pi / 2.0
TWO_PI = 2.0 * math.pi

DEFAULT_ELEVATION = math.pi / 4.0
DEFAULT_DISTANCE = 2.8
DEFAULT_FOV = math.radians(50.0)


@dataclass(frozen=True)
class CameraPose:
    """Look-at-origin camera at spherical (azimuth, elevation), y-up.

    Position is distance * (cos(el)*sin(az), sin(el), cos(el)*cos(az));
    the view transform maps the camera position to the origin with the look
    direction along -z. fov is the vertical field of view in radians.
    """

    azimuth: float
    elevation: float
    distance: float
    fov: float

    def __post_init__(self):
        if self.distance <= 0:
            raise GeometryError("camera distance must be positive")
        if not 0.0 < self.fov < math.pi:
            raise GeometryError("fov must be in (0, pi)")

    @property
    def position(self) -> np.ndarray:
        ce = math.cos(self.elevation)
        return self.distance * np.array(
            [ce * math.sin(self.azimuth), math.sin(self.elevation), ce * math.cos(self.azimuth)]
        )

    def view_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(R, t) with x_cam = R @ x_world + t."""
        pos = self.position
        forward = -pos / np.linalg.norm(pos)
        up = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up)
        nr = np.linalg.norm(right)
        if nr < 1e-12:
            raise GeometryError("camera looks along the up axis")
        right /= nr
        true_up = np.cross(right, forward)
        rot = np.stack([right, true_up, -forward])
        return rot, -rot @ pos

    def to_json(self) -> dict:
        return {"azimuth": self.azimuth, "elevation": self.elevation,
                "distance": self.distance, "fov": self.fov}

    @classmethod
    def from_json(cls, obj: dict) -> "CameraPose":
        return cls(obj["azimuth"], obj["elevation"], obj["distance"], obj["fov"])


def camera_pose(azimuth: float, elevation: float,
                distance: float = DEFAULT_DISTANCE, fov: float = DEFAULT_FOV) -> CameraPose:
    return CameraPose(azimuth, elevation, distance, fov)


@dataclass(frozen=True)
class CameraRig:
    """Four cameras at azimuths {0, pi/2, pi, 3pi/2} + offset, shared elevation."""

    poses: tuple[CameraPose, CameraPose, CameraPose, CameraPose]
    azimuth_offset: float

    @classmethod
    def canonical(cls, azimuth_offset: float = 0.0, elevation: float = DEFAULT_ELEVATION,
                  distance: float = DEFAULT_DISTANCE, fov: float = DEFAULT_FOV) -> "CameraRig":
        # Split the offset into whole quarter turns plus a remainder so that a
        # 90-degree offset reproduces the base azimuth floats bit-for-bit:
        # the offset-rig renders are then pixel-exact cyclic permutations.
        quarters = math.floor(azimuth_offset / HALF_PI + 1e-12)
        rem = azimuth_offset - quarters * HALF_PI
        poses = tuple(
            CameraPose(((k + quarters) % 4) * HALF_PI + rem, elevation, distance, fov)
            for k in range(4)
        )
        return cls(poses, azimuth_offset)

    def to_json(self) -> dict:
        return {"azimuth_offset": self.azimuth_offset,
                "quadrants": [p.to_json() for p in self.poses]}
