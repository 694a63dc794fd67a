"""Deterministic synthetic RGB-D scenes with analytic ground truth.

Three scene families, each with closed-form motion so every frame-0
pixel's 2D path, depth, and visibility follow exactly:

  * translating_plane: a fronto-parallel textured quad, filling the frame
    at t = 0, sliding at a constant pixel velocity over a static
    near-black backdrop
  * rotating_disc: an in-plane spinning disc over a static background,
    partially hidden by a nearer static strip (visibility transitions)
  * orbiting_points: a textured plane tilting about a vertical axis
    through (0, 0, 2), so depth varies per pixel and per frame

Textures are lattice value noise evaluated from an integer hash, so
identical specs reproduce bitwise identical scenes on any platform and
the texture can be sampled at arbitrary continuous coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraPose, Intrinsics, project, unproject
from .errors import InvalidSpec
from .tracking import SparseTracks, TrackSet, pixel_grid

KINDS = ("translating_plane", "rotating_disc", "orbiting_points")

# Lattice spacings and amplitudes per octave.  The 16/8 px octaves carry
# the structure (correlation length >= 8 px, wide matching basins); finer
# octaves would sharpen localization but shrink the basins and alias under
# bilinear warps, which costs more in capture range than it buys.
NOISE_OCTAVE_CELLS = (16.0, 8.0)
NOISE_OCTAVE_AMPS = (1.0, 0.5)

# Mean brightness of the translating plane's texture.  The quad slides over
# a near-black backdrop, and a splat re-render of the scene bleeds Gaussian
# tails one to two pixels past the quad's trailing edge; the bleed error
# scales with the texture's mean level, so a darker base keeps the edge
# mismatch small relative to full scale.
PLANE_BASE = 0.35

# The backdrop revealed behind the quad carries a faint static pattern
# instead of a perfectly uniform fill.  A window of exactly equal pixels is
# a degenerate correlation window (zero update by contract), which would
# strand any tracked point whose search window falls entirely inside the
# revealed strip; a faint pattern keeps those windows non-degenerate while
# staying visually black (amplitude one part in a hundred of full scale).
BACKDROP_BASE = 0.005
BACKDROP_CONTRAST = 0.01

_MIX1 = np.uint64(0x9E3779B97F4A7C15)
_MIX2 = np.uint64(0xBF58476D1CE4E5B9)
_MIX3 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    t_count: int = 24
    height: int = 128
    width: int = 128
    velocity: tuple = (5.0, 0.0)  # px/frame, translating_plane only
    rate_deg: float = 10.0  # deg/frame, rotating_disc / orbiting_points
    seed: int = 0
    # Texture swing around its base level.  0.5 leaves plenty of gradient
    # for tracking while keeping splat re-render blur error low enough that
    # identity reconstruction clears 40 dB with the field defaults.
    contrast: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.t_count < 1 or self.height < 8 or self.width < 8:
            raise InvalidSpec(
                f"need t_count >= 1 and size >= 8x8, got {self.t_count}, "
                f"{self.height}x{self.width}"
            )
        if not 0.0 < self.contrast <= 1.0:
            raise InvalidSpec(f"contrast must lie in (0, 1], got {self.contrast}")

    def intrinsics(self) -> Intrinsics:
        """Focal = image width, principal point at the image center."""
        return Intrinsics(
            float(self.width), float(self.width),
            (self.width - 1) / 2.0, (self.height - 1) / 2.0,
            self.width, self.height,
        )


@dataclass
class SynthScene:
    frames: np.ndarray  # (T, H, W, 3)
    depths: np.ndarray  # (T, H, W)
    tracks: TrackSet  # ground truth
    visibility: np.ndarray  # (T, H, W) bool
    intrinsics: Intrinsics


def _hash01(ix: np.ndarray, iy: np.ndarray, salt: int) -> np.ndarray:
    """Uniform [0, 1) value per integer lattice point, from a 64-bit mix."""
    with np.errstate(over="ignore"):
        h = ix.astype(np.int64).astype(np.uint64) * _MIX1
        h ^= iy.astype(np.int64).astype(np.uint64) * _MIX2
        h ^= np.uint64(int(salt) & 0xFFFFFFFFFFFFFFFF) * _MIX3
        h ^= h >> np.uint64(30)
        h *= _MIX2
        h ^= h >> np.uint64(27)
        h *= _MIX3
        h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _smoothstep(f: np.ndarray) -> np.ndarray:
    return f * f * (3.0 - 2.0 * f)


def value_noise(xs: np.ndarray, ys: np.ndarray, salt: int) -> np.ndarray:
    """Multi-octave [0, 1] value noise at continuous (x, y) coordinates."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    total = np.zeros(np.broadcast(xs, ys).shape)
    n_oct = len(NOISE_OCTAVE_CELLS)
    for octave, (cell, amp) in enumerate(zip(NOISE_OCTAVE_CELLS, NOISE_OCTAVE_AMPS)):
        gx = xs / cell
        gy = ys / cell
        ix = np.floor(gx)
        iy = np.floor(gy)
        fx = _smoothstep(gx - ix)
        fy = _smoothstep(gy - iy)
        o_salt = salt * n_oct + octave
        v00 = _hash01(ix, iy, o_salt)
        v10 = _hash01(ix + 1, iy, o_salt)
        v01 = _hash01(ix, iy + 1, o_salt)
        v11 = _hash01(ix + 1, iy + 1, o_salt)
        top = v00 + fx * (v10 - v00)
        bot = v01 + fx * (v11 - v01)
        total += amp * (top + fy * (bot - top))
    return total / sum(NOISE_OCTAVE_AMPS)


def texture_rgb(xs, ys, seed: int, contrast: float, base: float = 0.5) -> np.ndarray:
    """(..., 3) texture values centered on `base`, clipped to [0, 1]."""
    channels = [
        base + contrast * (value_noise(xs, ys, seed * 8 + c) - 0.5) for c in range(3)
    ]
    return np.clip(np.stack(channels, axis=-1), 0.0, 1.0)


def _in_bounds(x: np.ndarray, w: int, h: int) -> np.ndarray:
    u = x[..., 0]
    v = x[..., 1]
    return (u >= 0.0) & (u <= w - 1.0) & (v >= 0.0) & (v <= h - 1.0)


def _translating_plane(spec: SceneSpec):
    t_count, h, w = spec.t_count, spec.height, spec.width
    vel = np.asarray(spec.velocity, dtype=np.float64)
    if vel.shape != (2,):
        raise InvalidSpec(f"velocity must be a 2-vector, got {spec.velocity}")
    plane_z = 2.0
    bg_z = 10.0
    grid = pixel_grid(h, w)
    backdrop = texture_rgb(
        grid[..., 0], grid[..., 1], spec.seed + 101, BACKDROP_CONTRAST, BACKDROP_BASE
    )
    frames = np.empty((t_count, h, w, 3))
    depths = np.empty((t_count, h, w))
    x = np.empty((t_count, h, w, 2))
    gtd = np.full((t_count, h, w), plane_z)
    vis = np.empty((t_count, h, w), dtype=bool)
    for t in range(t_count):
        shift = vel * t
        # The plane is the finite quad seen exactly at frame 0; the texture
        # rides it, so frame t samples the texture at x - v t.  Regions the
        # quad has vacated show the static near-black backdrop.  This keeps
        # every frame t expressible by frame-0 content moved along the
        # tracks, so the scene is a usable oracle for field re-rendering,
        # not only for tracking.
        tex = np.stack([grid[..., 0] - shift[0], grid[..., 1] - shift[1]], axis=-1)
        on_plane = _in_bounds(tex, w, h)
        img = texture_rgb(tex[..., 0], tex[..., 1], spec.seed, spec.contrast, PLANE_BASE)
        frames[t] = np.where(on_plane[..., None], img, backdrop)
        depths[t] = np.where(on_plane, plane_z, bg_z)
        x[t] = grid + shift
        vis[t] = _in_bounds(x[t], w, h)
    x[0] = grid
    return frames, depths, x, gtd, vis


def _rotating_disc(spec: SceneSpec):
    t_count, h, w = spec.t_count, spec.height, spec.width
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    radius = 0.3 * min(h, w)
    # static occluder strip: full-height column band overlapping the disc
    strip_lo = 0.70 * (w - 1)
    strip_hi = 0.78 * (w - 1)
    z_strip, z_disc, z_bg = 1.0, 2.0, 3.0

    grid = pixel_grid(h, w)
    rel = grid - center
    r2 = rel[..., 0] ** 2 + rel[..., 1] ** 2
    in_disc = r2 <= radius**2
    in_strip = (grid[..., 0] >= strip_lo) & (grid[..., 0] <= strip_hi)

    bg_img = texture_rgb(grid[..., 0], grid[..., 1], spec.seed * 7 + 3, spec.contrast, 0.35)
    strip_img = texture_rgb(grid[..., 0], grid[..., 1], spec.seed * 7 + 5, spec.contrast, 0.75)

    rate = np.deg2rad(spec.rate_deg)
    frames = np.empty((t_count, h, w, 3))
    depths = np.empty((t_count, h, w))
    x = np.empty((t_count, h, w, 2))
    d = np.empty((t_count, h, w))
    vis = np.empty((t_count, h, w), dtype=bool)

    # frame-0 pixels track the nearest surface under them at t = 0
    surf_strip = in_strip
    surf_disc = in_disc & ~in_strip

    d[:] = z_bg
    d[:, surf_disc] = z_disc
    d[:, surf_strip] = z_strip

    for t in range(t_count):
        theta = rate * t
        c, s = np.cos(theta), np.sin(theta)
        # render: sample the disc texture at coordinates rotated backward
        back = np.stack(
            [c * rel[..., 0] + s * rel[..., 1], -s * rel[..., 0] + c * rel[..., 1]],
            axis=-1,
        ) + center
        disc_img = texture_rgb(back[..., 0], back[..., 1], spec.seed * 7 + 4, spec.contrast, 0.5)
        img = np.where(in_disc[..., None], disc_img, bg_img)
        img = np.where(in_strip[..., None], strip_img, img)
        frames[t] = img
        depth = np.full((h, w), z_bg)
        depth[in_disc] = z_disc
        depth[in_strip] = z_strip
        depths[t] = depth
        # tracks: disc points rotate forward, strip and background stay put
        fwd = np.stack(
            [c * rel[..., 0] - s * rel[..., 1], s * rel[..., 0] + c * rel[..., 1]],
            axis=-1,
        ) + center
        xt = grid.copy()
        xt[surf_disc] = fwd[surf_disc]
        x[t] = xt
        occluded = (xt[..., 0] >= strip_lo) & (xt[..., 0] <= strip_hi) & ~surf_strip
        vis[t] = _in_bounds(xt, w, h) & ~occluded
    x[0] = grid
    return frames, depths, x, d, vis


def _orbiting_points(spec: SceneSpec):
    t_count, h, w = spec.t_count, spec.height, spec.width
    k = spec.intrinsics()
    pivot = np.array([0.0, 0.0, 2.0])
    rate = np.deg2rad(spec.rate_deg)
    max_angle = abs(rate) * (t_count - 1)
    if max_angle >= np.deg2rad(60.0):
        raise InvalidSpec(
            f"total tilt {np.rad2deg(max_angle):.1f} deg leaves the camera frustum"
        )

    grid = pixel_grid(h, w)
    identity = CameraPose.identity()
    # plane points seen by each frame-0 pixel
    q0 = unproject(grid, np.full((h, w), pivot[2]), identity, k)

    frames = np.empty((t_count, h, w, 3))
    depths = np.empty((t_count, h, w))
    x = np.empty((t_count, h, w, 2))
    d = np.empty((t_count, h, w))
    vis = np.empty((t_count, h, w), dtype=bool)

    ray = np.stack(
        [
            (grid[..., 0] - k.cx) / k.fx,
            (grid[..., 1] - k.cy) / k.fy,
            np.ones((h, w)),
        ],
        axis=-1,
    )
    for t in range(t_count):
        theta = rate * t
        c, s = np.cos(theta), np.sin(theta)
        r = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        # plane through the pivot with rotated normal; intersect pixel rays
        normal = r[:, 2]
        denom = ray @ normal
        if np.any(denom <= 0.0):
            raise InvalidSpec(f"plane grazes a view ray at frame {t}")
        span = float(normal @ pivot) / denom
        point = span[..., None] * ray
        local = (point - pivot) @ r
        # texture parameterized by the frame-0 pixel that owns each point
        tex_u = k.cx + k.fx * local[..., 0] / pivot[2]
        tex_v = k.cy + k.fy * local[..., 1] / pivot[2]
        frames[t] = texture_rgb(tex_u, tex_v, spec.seed, spec.contrast)
        depths[t] = span

        qt = pivot + (q0 - pivot) @ r.T
        uv, z = project(qt, identity, k, strict=True)
        x[t] = uv
        d[t] = z
        vis[t] = _in_bounds(uv, w, h)
    x[0] = grid
    d[0] = pivot[2]
    depths[0] = pivot[2]
    return frames, depths, x, d, vis


def generate(spec: SceneSpec) -> SynthScene:
    """Build the scene: frames, depth maps, and exact ground-truth tracks."""
    if spec.kind == "translating_plane":
        frames, depths, x, d, vis = _translating_plane(spec)
    elif spec.kind == "rotating_disc":
        frames, depths, x, d, vis = _rotating_disc(spec)
    else:
        frames, depths, x, d, vis = _orbiting_points(spec)
    tracks = TrackSet(x, d, vis.astype(np.float64))
    return SynthScene(frames, depths, tracks, vis, spec.intrinsics())


def sparse_subsample(scene: SynthScene, stride: int = 16) -> SparseTracks:
    """Ground-truth guide tracks on a stride-spaced pixel lattice."""
    if stride < 1:
        raise InvalidSpec(f"stride must be >= 1, got {stride}")
    x = scene.tracks.x[:, ::stride, ::stride, :]
    v = scene.tracks.v[:, ::stride, ::stride]
    t_count = x.shape[0]
    nq = x.shape[1] * x.shape[2]
    positions = x.reshape(t_count, nq, 2).transpose(1, 0, 2)
    visibility = v.reshape(t_count, nq).transpose(1, 0)
    return SparseTracks(positions, visibility)
