# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled hot kernels: splat compositing and pyramid window lookups.

Parallel loops write disjoint output elements and perform no cross-pixel
reductions, so results are bitwise identical for every thread count.
Compositing semantics (1/255 Gaussian-tail cutoff, 1/255 transmittance
stop, frozen transmittance into the background) match kernels.pykernels.
"""

from cython.parallel cimport prange

import numpy as np

from libc.math cimport exp, floor

cdef double CUT = 1.0 / 255.0

# window buffers are stack-allocated at 32x32: radius is capped at 15
# (k + 1 = 32) by the dispatch layer


cdef inline Py_ssize_t _clamp(Py_ssize_t i, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if i < lo:
        return lo
    if i > hi:
        return hi
    return i


cdef void _composite_span(
    Py_ssize_t y0, Py_ssize_t y1, Py_ssize_t x0, Py_ssize_t x1,
    const double[::1] u, const double[::1] v, const double[::1] sigma,
    const double[:, ::1] color, const double[::1] alpha,
    const long long[::1] ids, Py_ssize_t k0, Py_ssize_t k1,
    const double[::1] background,
    double[:, :, ::1] img, double[:, ::1] trans,
) nogil:
    cdef Py_ssize_t py, px, kk, i
    cdef double t, a, g, dx, dy, inv, c0, c1, c2
    for py in range(y0, y1):
        for px in range(x0, x1):
            t = 1.0
            c0 = 0.0
            c1 = 0.0
            c2 = 0.0
            for kk in range(k0, k1):
                i = <Py_ssize_t> ids[kk]
                dx = px - u[i]
                dy = py - v[i]
                inv = -0.5 / (sigma[i] * sigma[i])
                g = exp((dx * dx + dy * dy) * inv)
                if g < CUT:
                    continue
                a = alpha[i] * g
                c0 = c0 + t * a * color[i, 0]
                c1 = c1 + t * a * color[i, 1]
                c2 = c2 + t * a * color[i, 2]
                t = t * (1.0 - a)
                if t < CUT:
                    break
            img[py, px, 0] = c0 + t * background[0]
            img[py, px, 1] = c1 + t * background[1]
            img[py, px, 2] = c2 + t * background[2]
            trans[py, px] = t


def composite_reference(
    const double[::1] u, const double[::1] v, const double[::1] sigma,
    const double[:, ::1] color, const double[::1] alpha,
    const double[::1] background, Py_ssize_t h, Py_ssize_t w, int n_threads,
):
    img = np.empty((h, w, 3))
    trans = np.empty((h, w))
    ids_arr = np.arange(u.shape[0], dtype=np.int64)
    cdef double[:, :, ::1] img_v = img
    cdef double[:, ::1] tr_v = trans
    cdef const long long[::1] ids = ids_arr
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t py
    for py in prange(h, nogil=True, num_threads=n_threads, schedule="static"):
        _composite_span(py, py + 1, 0, w, u, v, sigma, color, alpha,
                        ids, 0, m, background, img_v, tr_v)
    return img, trans


def composite_tiled(
    const double[::1] u, const double[::1] v, const double[::1] sigma,
    const double[:, ::1] color, const double[::1] alpha,
    const long long[::1] tile_offsets, const long long[::1] tile_ids,
    const double[::1] background, Py_ssize_t h, Py_ssize_t w,
    Py_ssize_t tile, int n_threads,
):
    img = np.empty((h, w, 3))
    trans = np.empty((h, w))
    cdef double[:, :, ::1] img_v = img
    cdef double[:, ::1] tr_v = trans
    cdef Py_ssize_t n_tx = (w + tile - 1) // tile
    cdef Py_ssize_t n_ty = (h + tile - 1) // tile
    cdef Py_ssize_t nt = n_tx * n_ty
    cdef Py_ssize_t ti, ty, tx, ty0, ty1, tx0, tx1
    for ti in prange(nt, nogil=True, num_threads=n_threads, schedule="static"):
        ty = ti // n_tx
        tx = ti - ty * n_tx
        ty0 = ty * tile
        ty1 = ty0 + tile
        if ty1 > h:
            ty1 = h
        tx0 = tx * tile
        tx1 = tx0 + tile
        if tx1 > w:
            tx1 = w
        _composite_span(ty0, ty1, tx0, tx1, u, v, sigma, color, alpha,
                        tile_ids, tile_offsets[ti], tile_offsets[ti + 1],
                        background, img_v, tr_v)
    return img, trans


cdef void _sample_point(
    const double[:, ::1] level, double cx, double cy,
    Py_ssize_t radius, double* out,
) nogil:
    cdef Py_ssize_t h = level.shape[0]
    cdef Py_ssize_t w = level.shape[1]
    cdef Py_ssize_t k = 2 * radius + 1
    cdef double corner[32][32]
    cdef double x0f = floor(cx)
    cdef double y0f = floor(cy)
    cdef double fx = cx - x0f
    cdef double fy = cy - y0f
    cdef Py_ssize_t x0 = <Py_ssize_t> x0f
    cdef Py_ssize_t y0 = <Py_ssize_t> y0f
    cdef Py_ssize_t jy, jx, ry, rx, wy, wx
    cdef double top, bot
    for jy in range(k + 1):
        ry = _clamp(y0 - radius + jy, 0, h - 1)
        for jx in range(k + 1):
            rx = _clamp(x0 - radius + jx, 0, w - 1)
            corner[jy][jx] = level[ry, rx]
    for wy in range(k):
        for wx in range(k):
            top = (1.0 - fx) * corner[wy][wx] + fx * corner[wy][wx + 1]
            bot = (1.0 - fx) * corner[wy + 1][wx] + fx * corner[wy + 1][wx + 1]
            out[wy * k + wx] = (1.0 - fy) * top + fy * bot


cdef void _corr_point(
    const double* f0, Py_ssize_t f_dim, const double[:, :, ::1] feat,
    double cx, double cy, Py_ssize_t radius, double* out,
) nogil:
    cdef Py_ssize_t h = feat.shape[0]
    cdef Py_ssize_t w = feat.shape[1]
    cdef Py_ssize_t k = 2 * radius + 1
    cdef double corner[32][32]
    cdef double x0f = floor(cx)
    cdef double y0f = floor(cy)
    cdef double fx = cx - x0f
    cdef double fy = cy - y0f
    cdef Py_ssize_t x0 = <Py_ssize_t> x0f
    cdef Py_ssize_t y0 = <Py_ssize_t> y0f
    cdef Py_ssize_t jy, jx, ry, rx, wy, wx, f
    cdef double s, top, bot
    for jy in range(k + 1):
        ry = _clamp(y0 - radius + jy, 0, h - 1)
        for jx in range(k + 1):
            rx = _clamp(x0 - radius + jx, 0, w - 1)
            s = 0.0
            for f in range(f_dim):
                s = s + f0[f] * feat[ry, rx, f]
            corner[jy][jx] = s
    for wy in range(k):
        for wx in range(k):
            top = (1.0 - fx) * corner[wy][wx] + fx * corner[wy][wx + 1]
            bot = (1.0 - fx) * corner[wy + 1][wx] + fx * corner[wy + 1][wx + 1]
            out[wy * k + wx] = (1.0 - fy) * top + fy * bot


def sample_window_level(
    const double[:, ::1] level, const double[:, ::1] centers,
    Py_ssize_t radius, int n_threads,
):
    cdef Py_ssize_t n = centers.shape[0]
    cdef Py_ssize_t k = 2 * radius + 1
    out = np.empty((n, k, k))
    cdef double[:, :, ::1] out_v = out
    cdef Py_ssize_t i
    for i in prange(n, nogil=True, num_threads=n_threads, schedule="static"):
        _sample_point(level, centers[i, 0], centers[i, 1], radius, &out_v[i, 0, 0])
    return out


def corr_window_level(
    const double[:, ::1] f0n, const double[:, :, ::1] feat,
    const double[:, ::1] centers, Py_ssize_t radius, int n_threads,
):
    cdef Py_ssize_t n = centers.shape[0]
    cdef Py_ssize_t k = 2 * radius + 1
    cdef Py_ssize_t f_dim = f0n.shape[1]
    out = np.empty((n, k, k))
    cdef double[:, :, ::1] out_v = out
    cdef Py_ssize_t i
    for i in prange(n, nogil=True, num_threads=n_threads, schedule="static"):
        _corr_point(&f0n[i, 0], f_dim, feat, centers[i, 0], centers[i, 1],
                    radius, &out_v[i, 0, 0])
    return out
