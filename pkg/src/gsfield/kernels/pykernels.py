"""Pure-numpy implementations of the hot kernels.

Drop-in fallbacks for the compiled core: same signatures, same cutoff
semantics.  The compositor iterates splats one at a time so every pixel
sees the exact multiply/add sequence of the compiled core's inner loop;
tiled and reference outputs are therefore bitwise identical within this
backend too (skipped splats only ever multiply by exactly 1.0 or add 0.0).

Compositing per pixel walks splats in the caller-provided order:
  a_i = alpha_i * exp(-r^2 / (2 sigma_i^2)), zeroed when the exp term
  drops below 1/255; color += T * a_i * c_i; T *= 1 - a_i; a pixel stops
  accepting splats once T < 1/255, and the frozen T multiplies the
  background.
"""

from __future__ import annotations

import numpy as np

CUT = 1.0 / 255.0


def _composite_pixels(px, py, u, v, sigma, color, alpha, background):
    """Composite ordered splats over flat pixel lists; returns (P,3) and (P,)."""
    p = px.shape[0]
    img = np.zeros((p, 3))
    t_run = np.ones(p)
    live = np.ones(p, dtype=bool)
    for j in range(u.shape[0]):
        dx = px - u[j]
        dy = py - v[j]
        g = np.exp((dx * dx + dy * dy) * (-0.5 / (sigma[j] * sigma[j])))
        a = np.where(g < CUT, 0.0, alpha[j] * g)
        weight = np.where(live, t_run * a, 0.0)
        img += weight[:, None] * color[j]
        t_run = np.where(live, t_run * (1.0 - a), t_run)
        live = live & (t_run >= CUT)
        if not live.any():
            break
    return img + t_run[:, None] * background, t_run


def composite_reference(u, v, sigma, color, alpha, background, h, w):
    """Brute-force compositor: every splat against every pixel."""
    ys, xs = np.mgrid[0:h, 0:w]
    img, trans = _composite_pixels(
        xs.ravel().astype(np.float64), ys.ravel().astype(np.float64),
        u, v, sigma, color, alpha, background,
    )
    return img.reshape(h, w, 3), trans.reshape(h, w)


def composite_tiled(u, v, sigma, color, alpha, tile_offsets, tile_ids, background, h, w, tile):
    """Tile-binned compositor; bins come from kernels.bin_tiles."""
    img = np.empty((h, w, 3))
    trans = np.empty((h, w))
    n_tx = (w + tile - 1) // tile
    n_ty = (h + tile - 1) // tile
    for ty in range(n_ty):
        y0, y1 = ty * tile, min((ty + 1) * tile, h)
        for tx in range(n_tx):
            x0, x1 = tx * tile, min((tx + 1) * tile, w)
            ti = ty * n_tx + tx
            ids = tile_ids[tile_offsets[ti] : tile_offsets[ti + 1]]
            ys, xs = np.mgrid[y0:y1, x0:x1]
            blk, bt = _composite_pixels(
                xs.ravel().astype(np.float64), ys.ravel().astype(np.float64),
                u[ids], v[ids], sigma[ids], color[ids], alpha[ids], background,
            )
            img[y0:y1, x0:x1] = blk.reshape(y1 - y0, x1 - x0, 3)
            trans[y0:y1, x0:x1] = bt.reshape(y1 - y0, x1 - x0)
    return img, trans


def _corner_grid(centers, radius, h, w):
    """Clamped integer corner rows/cols and interpolation fractions."""
    x0 = np.floor(centers[:, 0])
    y0 = np.floor(centers[:, 1])
    fx = centers[:, 0] - x0
    fy = centers[:, 1] - y0
    steps = np.arange(-radius, radius + 2)
    cols = np.clip(x0[:, None].astype(np.int64) + steps, 0, w - 1)
    rows = np.clip(y0[:, None].astype(np.int64) + steps, 0, h - 1)
    return rows, cols, fx, fy


def _bilinear_combine(corner, fx, fy, k):
    fx = fx[:, None, None]
    fy = fy[:, None, None]
    top = (1.0 - fx) * corner[:, :k, :k] + fx * corner[:, :k, 1:]
    bot = (1.0 - fx) * corner[:, 1:, :k] + fx * corner[:, 1:, 1:]
    return (1.0 - fy) * top + fy * bot


def sample_window_level(level, centers, radius):
    """(N, K, K) bilinear window samples of one pyramid level, border-clamped."""
    h, w = level.shape
    k = 2 * radius + 1
    rows, cols, fx, fy = _corner_grid(centers, radius, h, w)
    corner = level[rows[:, :, None], cols[:, None, :]]
    return _bilinear_combine(corner, fx, fy, k)


def corr_window_level(f0n, feat, centers, radius):
    """(N, K, K) correlation window: row n of f0n dotted against bilinear
    samples of the target feature level around centers[n]."""
    h, w = feat.shape[:2]
    k = 2 * radius + 1
    rows, cols, fx, fy = _corner_grid(centers, radius, h, w)
    gathered = feat[rows[:, :, None], cols[:, None, :]]
    corner = np.einsum("nijf,nf->nij", gathered, f0n)
    return _bilinear_combine(corner, fx, fy, k)
