"""Pinhole camera model and SE(3) pose utilities.

Conventions used throughout the package:

  * extrinsics map world to camera, x_cam = R @ x_world + t
  * the camera looks down +z; points with z <= 0 are behind it
  * pixel (u, v) addresses the center of that pixel, so the continuous
    image point of column u is exactly u (no half-pixel offset)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .errors import BehindCamera, NonPositiveDepth, ShapeMismatch

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ShapeMismatch(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if not (0.0 <= self.cx <= self.width and 0.0 <= self.cy <= self.height):
            raise ShapeMismatch(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height}"
            )

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def scaled(self, factor: float) -> "Intrinsics":
        """Intrinsics with focal lengths multiplied by `factor` (principal point fixed)."""
        return Intrinsics(self.fx * factor, self.fy * factor, self.cx, self.cy,
                          self.width, self.height)


class CameraPose:
    """World-to-camera rigid transform (R, t); R is checked to be a rotation."""

    __slots__ = ("R", "t")

    def __init__(self, R, t):
        R = np.asarray(R, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64).reshape(3)
        if R.shape != (3, 3):
            raise ShapeMismatch(f"rotation must be 3x3, got {R.shape}")
        if not np.allclose(R.T @ R, np.eye(3), atol=_ORTHO_TOL, rtol=0.0):
            raise ShapeMismatch("rotation is not orthonormal")
        if np.linalg.det(R) < 0.0:
            raise ShapeMismatch("rotation has negative determinant")
        self.R = R
        self.t = t

    @staticmethod
    def identity() -> "CameraPose":
        return CameraPose(np.eye(3), np.zeros(3))

    def compose(self, other: "CameraPose") -> "CameraPose":
        """self ∘ other: apply `other` first, then `self`."""
        return CameraPose(self.R @ other.R, self.R @ other.t + self.t)

    def inverse(self) -> "CameraPose":
        return CameraPose(self.R.T, -self.R.T @ self.t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (..., 3) world points into the camera frame."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.R.T + self.t

    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.R.T @ self.t


def project(points_world: np.ndarray, pose: CameraPose, k: Intrinsics, *, strict: bool = True):
    """Project (..., 3) world points to pixel coordinates.

    Returns (uv, z) where uv is (..., 2) and z the camera-frame depth.
    With strict=True any point at or behind the camera plane raises; with
    strict=False such points come back as NaN pixels so callers can cull.
    """
    cam = pose.apply(points_world)
    z = cam[..., 2]
    behind = z <= 0.0
    if strict and np.any(behind):
        raise BehindCamera(f"{int(np.count_nonzero(behind))} points have z <= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * cam[..., 0] / z + k.cx
        v = k.fy * cam[..., 1] / z + k.cy
    uv = np.stack([u, v], axis=-1)
    if not strict:
        uv = np.where(behind[..., None], np.nan, uv)
    return uv, z


def unproject(uv: np.ndarray, depth: np.ndarray, pose: CameraPose, k: Intrinsics) -> np.ndarray:
    """Lift (..., 2) pixels with positive camera-frame depths to world points."""
    uv = np.asarray(uv, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(depth <= 0.0):
        raise NonPositiveDepth(f"{int(np.count_nonzero(depth <= 0.0))} depths are <= 0")
    x = (uv[..., 0] - k.cx) / k.fx * depth
    y = (uv[..., 1] - k.cy) / k.fy * depth
    cam = np.stack([x, y, depth], axis=-1)
    return (cam - pose.t) @ pose.R


def interpolate_pose(a: CameraPose, b: CameraPose, s: float) -> CameraPose:
    """Geodesic blend of two poses: slerp on rotation, lerp on translation.

    s = 0 and s = 1 return `a` and `b` exactly (no round-trip through
    quaternions), so scheduled trajectories hit their keyframes bit-exactly.
    """
    if s == 0.0:
        return a
    if s == 1.0:
        return b
    rots = Rotation.from_matrix(np.stack([a.R, b.R]))
    R = Slerp([0.0, 1.0], rots)(s).as_matrix()
    t = (1.0 - s) * a.t + s * b.t
    return CameraPose(R, t)


def geodesic_angle(a: CameraPose, b: CameraPose) -> float:
    """Rotation angle (radians) between the orientations of two poses."""
    c = (np.trace(a.R.T @ b.R) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
