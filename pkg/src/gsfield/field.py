"""Pseudo-4D Gaussian fields.

One Gaussian per source pixel, with time-indexed positions in the
reference-frame camera coordinates (the pipeline's world frame), constant
color per primitive, and a single shared scale and opacity.  No
optimization: positions come straight from tracked 2D locations and depths
(or from per-frame depth lifting, which stores per-frame colors instead).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .camera import CameraPose, Intrinsics, unproject
from .errors import (
    EmptyMask,
    IndexOutOfRange,
    InvalidSpec,
    IoFailure,
    ShapeMismatch,
)
from .tensor_io import load_tensor, save_tensor
from .tracking import TrackSet, pixel_grid

DEFAULT_ALPHA = 0.95
# default scale gives a ~0.7 px screen footprint at the median source depth
DEFAULT_SCALE_PX = 0.7

COLOR_STATIC = "static"
COLOR_PER_FRAME = "per_frame"


@dataclass
class GaussianField4D:
    positions: np.ndarray  # (T, N, 3) meters, reference-camera coords
    colors: np.ndarray  # (N, 3) or (T, N, 3) in [0, 1]
    s: float  # shared scale, meters
    alpha: float  # shared opacity in (0, 1]
    height: int
    width: int
    intrinsics: Intrinsics
    color_mode: str = COLOR_STATIC

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.colors = np.asarray(self.colors, dtype=np.float64)
        t, n = self.positions.shape[:2]
        if self.positions.ndim != 3 or self.positions.shape[2] != 3:
            raise ShapeMismatch(f"positions must be (T, N, 3), got {self.positions.shape}")
        if n != self.height * self.width:
            raise ShapeMismatch(
                f"{n} primitives but source size {self.height}x{self.width}"
            )
        if self.color_mode == COLOR_STATIC:
            want = (n, 3)
        elif self.color_mode == COLOR_PER_FRAME:
            want = (t, n, 3)
        else:
            raise InvalidSpec(f"unknown color_mode {self.color_mode!r}")
        if self.colors.shape != want:
            raise ShapeMismatch(f"colors must be {want}, got {self.colors.shape}")
        if not np.isfinite(self.positions).all():
            raise ShapeMismatch("positions must be finite")
        if not (self.s > 0.0 and 0.0 < self.alpha <= 1.0):
            raise InvalidSpec(f"need s > 0 and 0 < alpha <= 1, got s={self.s} alpha={self.alpha}")

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_primitives(self) -> int:
        return self.positions.shape[1]


class Timestep(NamedTuple):
    positions: np.ndarray  # (N, 3)
    colors: np.ndarray  # (N, 3)
    s: float
    alpha: float


def default_scale(d0, k: Intrinsics) -> float:
    """0.7 px footprint at the median reference depth: 0.7 * median(D0) / fx."""
    return DEFAULT_SCALE_PX * float(np.median(d0)) / k.fx


def build_field_from_tracks(
    frame0: np.ndarray,
    tracks: TrackSet,
    k: Intrinsics,
    s: float | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> GaussianField4D:
    """Lift tracked (x, d) to one Gaussian per frame-0 pixel.

    Position at time t is the unprojection of (x[t][n], d[t][n]) through the
    identity pose; colors are the frame-0 pixel values.
    """
    frame0 = np.asarray(frame0, dtype=np.float64)
    t_count, h, w = tracks.shape
    if frame0.shape != (h, w, 3):
        raise ShapeMismatch(f"frame0 {frame0.shape} does not match tracks {(h, w)}")
    if (k.width, k.height) != (w, h):
        raise ShapeMismatch(f"intrinsics size {k.width}x{k.height} does not match {w}x{h}")
    if s is None:
        s = default_scale(tracks.d[0], k)
    identity = CameraPose.identity()
    n = h * w
    positions = unproject(
        tracks.x.reshape(t_count, n, 2), tracks.d.reshape(t_count, n), identity, k
    )
    return GaussianField4D(
        positions, frame0.reshape(n, 3).copy(), float(s), float(alpha), h, w, k, COLOR_STATIC
    )


def build_field_from_depth(
    frames: np.ndarray,
    depths: np.ndarray,
    k: Intrinsics,
    s: float | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> GaussianField4D:
    """Independent per-timestep lift of each frame's RGB-D (per-frame colors)."""
    frames = np.asarray(frames, dtype=np.float64)
    depths = np.asarray(depths, dtype=np.float64)
    if frames.ndim != 4 or frames.shape[:3] != depths.shape or frames.shape[3] != 3:
        raise ShapeMismatch(f"frames {frames.shape} do not match depths {depths.shape}")
    t_count, h, w = depths.shape
    if (k.width, k.height) != (w, h):
        raise ShapeMismatch(f"intrinsics size {k.width}x{k.height} does not match {w}x{h}")
    if s is None:
        s = default_scale(depths[0], k)
    identity = CameraPose.identity()
    n = h * w
    grid = pixel_grid(h, w).reshape(n, 2)
    positions = unproject(
        np.broadcast_to(grid, (t_count, n, 2)), depths.reshape(t_count, n), identity, k
    )
    return GaussianField4D(
        positions, frames.reshape(t_count, n, 3).copy(), float(s), float(alpha),
        h, w, k, COLOR_PER_FRAME,
    )


def extract_timestep(field: GaussianField4D, t: int) -> Timestep:
    """The 3D Gaussian set at timestep t."""
    if not 0 <= t < field.num_frames:
        raise IndexOutOfRange(f"timestep {t} outside 0..{field.num_frames - 1}")
    colors = field.colors if field.color_mode == COLOR_STATIC else field.colors[t]
    return Timestep(field.positions[t].copy(), colors.copy(), field.s, field.alpha)


def edit_rigid(field: GaussianField4D, mask: np.ndarray, transform_at, pivot) -> GaussianField4D:
    """Rigidly move the selected primitives about a pivot, per frame.

    transform_at(t) supplies the rigid transform for frame t as a CameraPose
    (or any object with 3x3 .R and 3-vector .t); selected primitives map to
    R_t (p - pivot) + pivot + t_t, everything else is untouched.
    """
    mask = np.asarray(mask).astype(bool).reshape(-1)
    if mask.shape[0] != field.num_primitives:
        raise ShapeMismatch(f"mask has {mask.shape[0]} entries for {field.num_primitives}")
    if not mask.any():
        raise EmptyMask("edit mask selects no primitives")
    pivot = np.asarray(pivot, dtype=np.float64).reshape(3)
    positions = field.positions.copy()
    for t in range(field.num_frames):
        xf = transform_at(t)
        r = np.asarray(xf.R, dtype=np.float64)
        tv = np.asarray(xf.t, dtype=np.float64).reshape(3)
        sel = positions[t][mask]
        positions[t][mask] = (sel - pivot) @ r.T + pivot + tv
    return GaussianField4D(
        positions, field.colors.copy(), field.s, field.alpha,
        field.height, field.width, field.intrinsics, field.color_mode,
    )


def mask_from_image(image: np.ndarray) -> np.ndarray:
    """Flat boolean mask from a mask image: a pixel is selected when its
    mean channel value exceeds 0.5."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        image = image.mean(axis=2)
    return (image > 0.5).reshape(-1)


def save_field(field: GaussianField4D, directory) -> None:
    """p.gst + c.gst (f32) and a JSON sidecar with the scalar parameters."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_tensor(field.positions.astype(np.float32), directory / "p.gst")
    save_tensor(field.colors.astype(np.float32), directory / "c.gst")
    k = field.intrinsics
    sidecar = {
        "s": field.s,
        "alpha": field.alpha,
        "H": field.height,
        "W": field.width,
        "intrinsics": {
            "fx": k.fx, "fy": k.fy, "cx": k.cx, "cy": k.cy,
            "width": k.width, "height": k.height,
        },
        "color_mode": field.color_mode,
    }
    (directory / "field.json").write_text(json.dumps(sidecar, indent=1) + "\n")


def load_field(directory) -> GaussianField4D:
    directory = Path(directory)
    try:
        sidecar = json.loads((directory / "field.json").read_text())
    except OSError as e:
        raise IoFailure(f"cannot read field sidecar under {directory}: {e}") from e
    ks = sidecar["intrinsics"]
    k = Intrinsics(ks["fx"], ks["fy"], ks["cx"], ks["cy"], int(ks["width"]), int(ks["height"]))
    return GaussianField4D(
        load_tensor(directory / "p.gst").astype(np.float64),
        load_tensor(directory / "c.gst").astype(np.float64),
        float(sidecar["s"]),
        float(sidecar["alpha"]),
        int(sidecar["H"]),
        int(sidecar["W"]),
        k,
        sidecar["color_mode"],
    )
