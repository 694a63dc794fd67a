"""Dense per-pixel tracking through a video.

Every pixel of frame 0 is a tracked point.  Tracking runs in two stages:
initialize 2D positions (from sparse guide tracks when available, else the
static grid), set every frame's depth to the frame-0 depth at the query
pixel and visibility to 1, then refine each frame against frame 0 with the
iterative update loop.  Correlation is always measured against frame 0 so
errors do not accumulate in the match signal; with the grid fallback the
*starting* positions for frame t are the refined positions from frame t-1,
which keeps the residual motion per frame inside the probe reach.
Sparse-guided runs start each frame at their own interpolated guess.
Within a frame every point updates independently, so per-point work is
embarrassingly parallel and the result is invariant to point order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ..errors import (
    EmptySparseSet,
    InvalidSpec,
    NonPositiveDepth,
    ShapeMismatch,
)
from ..tensor_io import load_tensor, save_tensor
from .operators import DEFAULT_ITERS

MIN_DEPTH = 1e-4
IDW_NEIGHBORS = 8


def pixel_grid(h: int, w: int) -> np.ndarray:
    """(H, W, 2) integer pixel centers in (x, y) order."""
    ys, xs = np.mgrid[0:h, 0:w]
    return np.stack([xs, ys], axis=-1).astype(np.float64)


@dataclass
class TrackSet:
    """Dense trajectories: x (T,H,W,2) px, d (T,H,W) m, v (T,H,W) in [0,1]."""

    x: np.ndarray
    d: np.ndarray
    v: np.ndarray
    t0: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.d = np.asarray(self.d, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.validate()

    def validate(self):
        t, h, w = self.d.shape
        if self.x.shape != (t, h, w, 2) or self.v.shape != (t, h, w):
            raise ShapeMismatch(
                f"inconsistent track tensors x{self.x.shape} d{self.d.shape} v{self.v.shape}"
            )
        if not np.array_equal(self.x[self.t0], pixel_grid(h, w)):
            raise ShapeMismatch("reference-frame positions must be the exact pixel grid")
        if np.any(self.d <= 0.0):
            raise NonPositiveDepth("track depths must be positive")
        if np.any(self.v < 0.0) or np.any(self.v > 1.0):
            raise ShapeMismatch("visibilities must lie in [0, 1]")

    @property
    def shape(self):
        return self.d.shape


@dataclass
class SparseTracks:
    """Guide tracks: positions (Nq, T, 2) px and visibility (Nq, T) in [0,1]."""

    positions: np.ndarray
    visibility: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.visibility = np.asarray(self.visibility, dtype=np.float64)
        if (
            self.positions.ndim != 3
            or self.positions.shape[2] != 2
            or self.visibility.shape != self.positions.shape[:2]
        ):
            raise ShapeMismatch(
                f"sparse tracks disagree: {self.positions.shape} vs {self.visibility.shape}"
            )

    @property
    def queries(self) -> np.ndarray:
        return self.positions[:, 0, :]


def save_sparse_tracks(sparse: SparseTracks, path) -> None:
    """Serialize as one f32 tensor of shape [Nq, T, 3] holding (u, v, vis)."""
    packed = np.concatenate([sparse.positions, sparse.visibility[:, :, None]], axis=-1)
    save_tensor(packed.astype(np.float32), path)


def load_sparse_tracks(path) -> SparseTracks:
    packed = load_tensor(path)
    if packed.ndim != 3 or packed.shape[2] != 3:
        raise ShapeMismatch(f"{path}: expected [Nq, T, 3] sparse tracks, got {packed.shape}")
    packed = packed.astype(np.float64)
    return SparseTracks(packed[:, :, :2], packed[:, :, 2])


def interpolate_sparse_to_dense(sparse: SparseTracks, h: int, w: int, t_count: int) -> np.ndarray:
    """(T, H, W, 2) initial positions by inverse-distance-weighted displacement.

    Each pixel's displacement is the IDW average (power 2, up to 8 nearest
    queries by frame-0 distance) of the sparse displacements; a pixel that
    coincides with a query follows that track exactly.
    """
    nq = sparse.positions.shape[0]
    if nq == 0:
        raise EmptySparseSet("need at least one sparse track")
    if sparse.positions.shape[1] != t_count:
        raise ShapeMismatch(
            f"sparse tracks span {sparse.positions.shape[1]} frames, expected {t_count}"
        )
    queries = sparse.queries
    if (
        np.any(queries[:, 0] < 0)
        or np.any(queries[:, 0] > w - 1)
        or np.any(queries[:, 1] < 0)
        or np.any(queries[:, 1] > h - 1)
    ):
        raise InvalidSpec("sparse query points must lie inside frame 0")
    disp = sparse.positions - queries[:, None, :]

    grid = pixel_grid(h, w).reshape(-1, 2)
    k = min(IDW_NEIGHBORS, nq)
    dist, idx = cKDTree(queries).query(grid, k=k)
    dist = np.atleast_2d(dist.T).T.reshape(len(grid), k)
    idx = np.atleast_2d(idx.T).T.reshape(len(grid), k)

    with np.errstate(divide="ignore"):
        wts = 1.0 / np.square(dist)
    exact = np.isinf(wts)
    hit = exact.any(axis=1)
    wts[hit] = exact[hit]
    wts /= wts.sum(axis=1, keepdims=True)

    out = np.empty((t_count, h, w, 2))
    for t in range(t_count):
        sel = disp[:, t, :][idx]
        out[t] = (grid + np.einsum("nk,nkc->nc", wts, sel)).reshape(h, w, 2)
    out[0] = grid.reshape(h, w, 2)
    return out


def init_tracks(dense_x: np.ndarray, d0_map: np.ndarray) -> TrackSet:
    """TrackSet with d[t] = frame-0 depth at the query pixel and v = 1."""
    dense_x = np.asarray(dense_x, dtype=np.float64)
    d0_map = np.asarray(d0_map, dtype=np.float64)
    if dense_x.ndim != 4 or dense_x.shape[3] != 2 or dense_x.shape[1:3] != d0_map.shape:
        raise ShapeMismatch(f"positions {dense_x.shape} do not match depth {d0_map.shape}")
    if np.any(d0_map <= 0.0):
        raise NonPositiveDepth("frame-0 depth map must be positive")
    t_count = dense_x.shape[0]
    d = np.broadcast_to(d0_map, (t_count,) + d0_map.shape).copy()
    v = np.ones((t_count,) + d0_map.shape)
    return TrackSet(dense_x.copy(), d, v)


def refine_frame(tracks: TrackSet, t: int, frame0, frame_t, depth_t, op, iters: int = DEFAULT_ITERS):
    """Iteratively refine frame t against frame 0; returns new (x, d, v).

    Each iteration crops correlation and depth windows at the current
    positions, asks the operator for residuals, and applies them additively;
    v is clamped to [0, 1] and d to >= 1e-4 after every step.  Positions are
    clamped to the image rectangle only once, after the last iteration:
    clamping mid-loop would silently shift a point relative to the
    operator's frame-relative bookkeeping and make its probe episodes land
    off target.  Out-of-rectangle excursions are safe in the meantime since
    window lookups clamp their sample coordinates to the border anyway.
    """
    if iters < 1:
        raise InvalidSpec(f"iters must be >= 1, got {iters}")
    depth_t = np.asarray(depth_t, dtype=np.float64)
    if np.any(depth_t <= 0.0):
        raise NonPositiveDepth(f"frame {t} depth map must be positive")
    h, w = tracks.d.shape[1:]
    n = h * w
    ctx = op.prepare(frame0, frame_t, depth_t, depth0=tracks.d[0])
    state = op.init_state(n)
    x = tracks.x[t].reshape(n, 2).copy()
    d = tracks.d[t].reshape(n).copy()
    v = tracks.v[t].reshape(n).copy()
    for _ in range(iters):
        corr_win = ctx.corr.lookup(x, op.radius)
        depth_win = ctx.depth.lookup(x, op.radius)
        dx, dv, dd, state = op.update(corr_win, depth_win, state, d)
        x = x + dx
        v = np.clip(v + dv, 0.0, 1.0)
        d = np.maximum(d + dd, MIN_DEPTH)
    x[:, 0] = np.clip(x[:, 0], 0.0, float(w - 1))
    x[:, 1] = np.clip(x[:, 1], 0.0, float(h - 1))
    return x.reshape(h, w, 2), d.reshape(h, w), v.reshape(h, w)


def track_video(frames, depths, sparse, op, iters: int = DEFAULT_ITERS, on_frame=None) -> TrackSet:
    """Track every frame-0 pixel through the video.

    frames: (T, H, W, 3) in [0, 1]; depths: (T, H, W) meters; sparse guide
    tracks are optional.  With sparse guides each frame starts from its own
    interpolated position field; without them frame t starts from the
    refined frame t-1 positions, so the per-frame displacement only needs
    to fit the probe reach even when total drift is large.
    `on_frame(t, seconds)` is invoked after each refined frame.
    """
    frames = np.asarray(frames, dtype=np.float64)
    depths = np.asarray(depths, dtype=np.float64)
    if frames.ndim != 4 or depths.shape != frames.shape[:3]:
        raise ShapeMismatch(f"frames {frames.shape} do not match depths {depths.shape}")
    t_count, h, w = depths.shape
    if t_count < 2:
        raise InvalidSpec(f"need at least 2 frames, got {t_count}")
    if sparse is not None:
        dense_x = interpolate_sparse_to_dense(sparse, h, w, t_count)
    else:
        dense_x = np.broadcast_to(pixel_grid(h, w), (t_count, h, w, 2)).copy()
    tracks = init_tracks(dense_x, depths[0])
    for t in range(1, t_count):
        start = time.perf_counter()
        if sparse is None and t > 1:
            # Seeding from the refined previous frame (not a velocity
            # extrapolation: that doubles the error of any point that
            # failed last frame and diverges geometrically).
            tracks.x[t] = tracks.x[t - 1]
        x, d, v = refine_frame(tracks, t, frames[0], frames[t], depths[t], op, iters)
        tracks.x[t], tracks.d[t], tracks.v[t] = x, d, v
        if on_frame is not None:
            on_frame(t, time.perf_counter() - start)
    tracks.validate()
    return tracks


def save_trackset(tracks: TrackSet, directory) -> None:
    """Write x/d/v as three f32 tensors (tracks_x/d/v.gst)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_tensor(tracks.x.astype(np.float32), directory / "tracks_x.gst")
    save_tensor(tracks.d.astype(np.float32), directory / "tracks_d.gst")
    save_tensor(tracks.v.astype(np.float32), directory / "tracks_v.gst")


def load_trackset(directory) -> TrackSet:
    directory = Path(directory)
    return TrackSet(
        load_tensor(directory / "tracks_x.gst").astype(np.float64),
        load_tensor(directory / "tracks_d.gst").astype(np.float64),
        load_tensor(directory / "tracks_v.gst").astype(np.float64),
    )
