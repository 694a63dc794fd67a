"""Isotropic Gaussian splatting with front-to-back alpha compositing.

Every primitive is a 3D point with a world-space scale; on screen it
becomes an isotropic 2D Gaussian whose std dev is the scale under pinhole
foreshortening, sigma = 0.5 * (fx + fy) * s / z.  Pixels composite splats
front to back (ascending depth):

    C = sum_i c_i a_i prod_{j<i} (1 - a_j) + T_final * background

where a_i = alpha * exp(-r^2 / (2 sigma_i^2)).  Contributions with a
Gaussian factor below 1/255 are dropped, and a pixel stops accumulating
once its transmittance falls below 1/255; both renderers apply the same
rule, so the tiled path reproduces the reference exactly.

Depth ties (and any other ordering ambiguity) are broken by a canonical
sort over all splat attributes, which makes the output invariant to the
order primitives arrive in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .camera import CameraPose, Intrinsics, project
from .errors import LengthMismatch, NoVisiblePoints, ShapeMismatch
from .field import GaussianField4D, extract_timestep

Z_NEAR = 0.01
CULL_SIGMAS = 3.0
DEFAULT_TILE = 16


@dataclass
class Splats:
    """Screen-space splats, already culled and canonically ordered."""

    u: np.ndarray  # (M,) pixel x
    v: np.ndarray  # (M,) pixel y
    z: np.ndarray  # (M,) camera depth
    sigma: np.ndarray  # (M,) screen-space std dev, px
    color: np.ndarray  # (M, 3)
    alpha: np.ndarray  # (M,)

    def __len__(self) -> int:
        return self.u.shape[0]


@dataclass
class FrameBuffer:
    color: np.ndarray  # (H, W, 3)
    transmittance: np.ndarray  # (H, W)


def _canonical_order(u, v, z, sigma, alpha, color):
    """Depth-ascending order with a full-attribute tie break.

    lexsort's last key is the primary one, so z dominates and equal-depth
    splats fall back to (u, v, sigma, alpha, color) comparisons.  Two
    identical splats are interchangeable, so this makes composited output
    independent of input permutation.
    """
    return np.lexsort((color[:, 2], color[:, 1], color[:, 0], alpha, sigma, v, u, z))


def project_splats(
    positions: np.ndarray,
    colors: np.ndarray,
    s: float,
    alpha: float,
    pose: CameraPose,
    k: Intrinsics,
) -> Splats:
    """Project one timestep's Gaussians into screen space.

    Culls primitives with camera depth z <= 0.01 and primitives whose
    center lies more than 3 sigma outside the image rectangle, then applies
    the canonical ordering.
    """
    positions = np.asarray(positions, dtype=np.float64)
    colors = np.asarray(colors, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ShapeMismatch(f"positions must be (N, 3), got {positions.shape}")
    if colors.shape != positions.shape:
        raise ShapeMismatch(f"colors {colors.shape} do not match positions {positions.shape}")

    uv, z = project(positions, pose, k, strict=False)
    keep = z > Z_NEAR
    u, v, z = uv[keep, 0], uv[keep, 1], z[keep]
    colors = colors[keep]
    sigma = 0.5 * (k.fx + k.fy) * s / z
    m = CULL_SIGMAS * sigma
    inside = (
        (u >= -m) & (u <= k.width - 1 + m) & (v >= -m) & (v <= k.height - 1 + m)
    )
    u, v, z, sigma, colors = u[inside], v[inside], z[inside], sigma[inside], colors[inside]
    a = np.full(u.shape[0], float(alpha))
    order = _canonical_order(u, v, z, sigma, a, colors)
    return Splats(u[order], v[order], z[order], sigma[order], colors[order], a[order])


def render_splats(
    splats: Splats,
    h: int,
    w: int,
    background,
    *,
    tile: int = DEFAULT_TILE,
    reference: bool = False,
) -> FrameBuffer:
    """Composite ordered splats over a constant background color."""
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    if len(splats) == 0:
        color = np.broadcast_to(bg, (h, w, 3)).copy()
        return FrameBuffer(color, np.ones((h, w)))
    args = (splats.u, splats.v, splats.sigma, splats.color, splats.alpha, bg, h, w)
    if reference:
        color, trans = kernels.composite_reference(*args)
    else:
        color, trans = kernels.composite_tiled(*args, tile=tile)
    return FrameBuffer(color, trans)


def render_frame(
    field: GaussianField4D,
    t: int,
    pose: CameraPose,
    k: Intrinsics,
    background=(0.0, 0.0, 0.0),
    *,
    tile: int = DEFAULT_TILE,
    reference: bool = False,
) -> FrameBuffer:
    """Render the field's timestep t under an arbitrary camera."""
    step = extract_timestep(field, t)
    splats = project_splats(step.positions, step.colors, step.s, step.alpha, pose, k)
    return render_splats(splats, k.height, k.width, background, tile=tile, reference=reference)


def render_video(
    field: GaussianField4D,
    schedule,
    background=(0.0, 0.0, 0.0),
    *,
    tile: int = DEFAULT_TILE,
    reference: bool = False,
    require_content: bool = False,
) -> np.ndarray:
    """Render every timestep under a scheduled camera.

    `schedule` is a sequence of (intrinsics, pose) pairs, one per field
    timestep (anything with .frame(t) -> (intrinsics, pose) and len() also
    works).  Returns (T, H, W, 3); all frames share the first frame's size.
    """
    t_count = field.num_frames
    if len(schedule) != t_count:
        raise LengthMismatch(f"schedule has {len(schedule)} frames for {t_count} timesteps")

    def frame_of(t):
        if hasattr(schedule, "frame"):
            return schedule.frame(t)
        return schedule[t]

    k0, _ = frame_of(0)
    out = np.empty((t_count, k0.height, k0.width, 3))
    for t in range(t_count):
        k, pose = frame_of(t)
        if (k.width, k.height) != (k0.width, k0.height):
            raise ShapeMismatch(
                f"frame {t} is {k.width}x{k.height}, expected {k0.width}x{k0.height}"
            )
        buf = render_frame(field, t, pose, k, background, tile=tile, reference=reference)
        if require_content and np.all(buf.transmittance >= 1.0):
            raise NoVisiblePoints(f"no primitive reaches the image at frame {t}")
        out[t] = buf.color
    return out
