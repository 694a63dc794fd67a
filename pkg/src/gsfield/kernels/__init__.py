"""Kernel backend dispatch.

The compiled extension (gsfield.kernels._core) is used when importable;
otherwise the pure-numpy fallbacks take over.  GSFIELD_FORCE_FALLBACK=1
forces the fallback even when the extension exists, and GSFIELD_THREADS
caps kernel parallelism (0 or unset = one thread per CPU).  Both are read
at call time.  Either backend is deterministic: outputs are bitwise
reproducible across reruns and thread counts.

Tile binning is shared plain numpy: splats land in every 16px tile their
screen-space support touches, where the support radius is the exact
Gaussian-tail cutoff sqrt(2 ln 255) sigma (~3.33 sigma, slightly padded),
so a binned pass composites exactly the contributions the brute-force
pass keeps.
"""

from __future__ import annotations

import math
import os

import numpy as np

from ..errors import ConfigError

try:
    from . import _core
except ImportError:
    _core = None

from . import pykernels

CUT = pykernels.CUT
MAX_RADIUS = 15
TAIL_SIGMAS = math.sqrt(2.0 * math.log(255.0))
_BIN_SIGMAS = TAIL_SIGMAS + 1e-6


def have_compiled() -> bool:
    return _core is not None


def _use_fallback() -> bool:
    if _core is None:
        return True
    return os.environ.get("GSFIELD_FORCE_FALLBACK", "0") not in ("", "0")


def backend_name() -> str:
    return "fallback" if _use_fallback() else "compiled"


def num_threads() -> int:
    """Thread cap from GSFIELD_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("GSFIELD_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GSFIELD_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"GSFIELD_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _check_radius(radius: int) -> int:
    radius = int(radius)
    if not 1 <= radius <= MAX_RADIUS:
        raise ConfigError(f"lookup radius must be in 1..{MAX_RADIUS}, got {radius}")
    return radius


def bin_tiles(u, v, sigma, h: int, w: int, tile: int):
    """CSR tile bins over splats already in composite order.

    Returns (tile_offsets, tile_ids): tile_ids holds splat indices grouped
    by row-major tile, order-preserving within each tile.
    """
    u, v, sigma = _f64(u), _f64(v), _f64(sigma)
    n_tx = (w + tile - 1) // tile
    n_ty = (h + tile - 1) // tile
    nt = n_tx * n_ty
    r = sigma * _BIN_SIGMAS
    xl = np.ceil(u - r)
    xh = np.floor(u + r)
    yl = np.ceil(v - r)
    yh = np.floor(v + r)
    keep = (xl <= w - 1) & (xh >= 0) & (yl <= h - 1) & (yh >= 0)
    src = np.flatnonzero(keep).astype(np.int64)
    if src.size == 0:
        return np.zeros(nt + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    txl = np.clip(xl[keep], 0, w - 1).astype(np.int64) // tile
    txh = np.clip(xh[keep], 0, w - 1).astype(np.int64) // tile
    tyl = np.clip(yl[keep], 0, h - 1).astype(np.int64) // tile
    tyh = np.clip(yh[keep], 0, h - 1).astype(np.int64) // tile
    nx = txh - txl + 1
    cnt = nx * (tyh - tyl + 1)
    rep = np.repeat(np.arange(src.size), cnt)
    loc = np.arange(cnt.sum(), dtype=np.int64) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    nx_rep = np.repeat(nx, cnt)
    tix = np.repeat(txl, cnt) + loc % nx_rep
    tiy = np.repeat(tyl, cnt) + loc // nx_rep
    tid = tiy * n_tx + tix
    order = np.lexsort((rep, tid))
    tile_ids = src[rep[order]]
    tile_offsets = np.zeros(nt + 1, dtype=np.int64)
    tile_offsets[1:] = np.cumsum(np.bincount(tid, minlength=nt))
    return tile_offsets, tile_ids


def composite_reference(u, v, sigma, color, alpha, background, h: int, w: int):
    """Brute-force front-to-back compositing; splats must be pre-ordered."""
    u, v, sigma, alpha = _f64(u), _f64(v), _f64(sigma), _f64(alpha)
    color, background = _f64(color), _f64(background)
    if _use_fallback():
        return pykernels.composite_reference(u, v, sigma, color, alpha, background, h, w)
    return _core.composite_reference(u, v, sigma, color, alpha, background, h, w, num_threads())


def composite_tiled(u, v, sigma, color, alpha, background, h: int, w: int, tile: int = 16):
    """Tile-binned compositing, equivalent to composite_reference."""
    u, v, sigma, alpha = _f64(u), _f64(v), _f64(sigma), _f64(alpha)
    color, background = _f64(color), _f64(background)
    if tile < 1:
        raise ConfigError(f"tile size must be >= 1, got {tile}")
    tile_offsets, tile_ids = bin_tiles(u, v, sigma, h, w, tile)
    if _use_fallback():
        return pykernels.composite_tiled(
            u, v, sigma, color, alpha, tile_offsets, tile_ids, background, h, w, tile
        )
    return _core.composite_tiled(
        u, v, sigma, color, alpha, tile_offsets, tile_ids, background, h, w, tile, num_threads()
    )


def sample_window_level(level, centers, radius: int = 4):
    """Bilinear (2r+1)^2 windows of a 2D map at continuous centers."""
    level, centers = _f64(level), _f64(centers)
    radius = _check_radius(radius)
    if _use_fallback():
        return pykernels.sample_window_level(level, centers, radius)
    return _core.sample_window_level(level, centers, radius, num_threads())


def corr_window_level(f0n, feat, centers, radius: int = 4):
    """Correlation windows: f0n rows dotted with bilinear target samples."""
    f0n, feat, centers = _f64(f0n), _f64(feat), _f64(centers)
    radius = _check_radius(radius)
    if f0n.shape[0] != centers.shape[0]:
        raise ConfigError(
            f"need one center per source feature row: {f0n.shape[0]} vs {centers.shape[0]}"
        )
    if _use_fallback():
        return pykernels.corr_window_level(f0n, feat, centers, radius)
    return _core.corr_window_level(f0n, feat, centers, radius, num_threads())
