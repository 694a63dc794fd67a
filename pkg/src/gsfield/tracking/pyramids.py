"""4-level pyramids and windowed bilinear lookup.

Two pyramid flavors share the lookup geometry:

  * Pyramid — a scalar map (depth) pooled 4 times by 2x2 averaging.
  * CorrelationPyramid — feature-similarity volumes, kept lazy: level l of
    the full all-pairs volume corr_l(p, q) = <f0n[p], pool^l(fTn)[q]> never
    materializes; pooling the normalized target features first is exact
    because the dot product is linear in its second argument.

Lookup crops a (2r+1)^2 window per level, bilinearly sampled at
center / 2^l plus integer offsets, with out-of-bounds samples clamped to
the border.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ShapeMismatch

NUM_LEVELS = 4
DEFAULT_RADIUS = 4
_NORM_EPS = 1e-12


def avg_pool2(m: np.ndarray) -> np.ndarray:
    """2x2 average pooling with ceil(dim/2) output; odd edges replicate.

    Duplicating the last row/column before pooling makes the partial-block
    mean equal the mean of the available entries.
    """
    if m.shape[0] % 2:
        m = np.concatenate([m, m[-1:]], axis=0)
    if m.shape[1] % 2:
        m = np.concatenate([m, m[:, -1:]], axis=1)
    return 0.25 * (m[0::2, 0::2] + m[1::2, 0::2] + m[0::2, 1::2] + m[1::2, 1::2])


def _pool_levels(m: np.ndarray) -> tuple:
    levels = [np.ascontiguousarray(m, dtype=np.float64)]
    for _ in range(NUM_LEVELS - 1):
        levels.append(np.ascontiguousarray(avg_pool2(levels[-1])))
    return tuple(levels)


@dataclass(frozen=True)
class Pyramid:
    """4 levels of a 2D map; level l is the source downsampled by 2^l."""

    levels: tuple

    def lookup(self, centers: np.ndarray, radius: int = DEFAULT_RADIUS) -> np.ndarray:
        """(N, 2r+1, 2r+1, 4) windows around continuous (x, y) centers."""
        centers = np.ascontiguousarray(np.atleast_2d(centers), dtype=np.float64)
        out = [
            kernels.sample_window_level(lvl, centers / float(2**l), radius)
            for l, lvl in enumerate(self.levels)
        ]
        return np.stack(out, axis=-1)


def build_pyramid(m: np.ndarray) -> Pyramid:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatch(f"pyramid source must be 2D, got {m.shape}")
    return Pyramid(_pool_levels(m))


def lookup_window(pyr: Pyramid, center, radius: int = DEFAULT_RADIUS) -> np.ndarray:
    """Window crop for a single (x, y) center: (2r+1, 2r+1, 4)."""
    return pyr.lookup(np.asarray(center, dtype=np.float64).reshape(1, 2), radius)[0]


def normalize_features(feat: np.ndarray) -> np.ndarray:
    """L2-normalize each pixel's feature vector (eps-guarded)."""
    n = np.sqrt(np.sum(feat * feat, axis=-1, keepdims=True))
    return feat / np.maximum(n, _NORM_EPS)


class CorrelationPyramid:
    """Lazy 4-level correlation volume between a source and a target frame.

    Source features are paired row-for-row with lookup centers: center n is
    matched against source pixel n (row-major), so lookups must pass exactly
    H*W centers.
    """

    def __init__(self, feat0: np.ndarray, feat_t: np.ndarray):
        feat0 = np.asarray(feat0, dtype=np.float64)
        feat_t = np.asarray(feat_t, dtype=np.float64)
        if feat0.shape != feat_t.shape or feat0.ndim != 3:
            raise ShapeMismatch(f"feature maps disagree: {feat0.shape} vs {feat_t.shape}")
        h, w, f = feat0.shape
        self.shape = (h, w)
        self.f0n = np.ascontiguousarray(normalize_features(feat0).reshape(h * w, f))
        ftn = normalize_features(feat_t)
        levels = [np.ascontiguousarray(ftn)]
        for _ in range(NUM_LEVELS - 1):
            levels.append(np.ascontiguousarray(avg_pool2(levels[-1])))
        self.levels = tuple(levels)

    def lookup(self, centers: np.ndarray, radius: int = DEFAULT_RADIUS) -> np.ndarray:
        """(N, 2r+1, 2r+1, 4) correlation windows at continuous (x, y) centers."""
        centers = np.ascontiguousarray(centers, dtype=np.float64)
        n = self.shape[0] * self.shape[1]
        if centers.shape != (n, 2):
            raise ShapeMismatch(f"expected ({n}, 2) centers, got {centers.shape}")
        out = [
            kernels.corr_window_level(self.f0n, lvl, centers / float(2**l), radius)
            for l, lvl in enumerate(self.levels)
        ]
        return np.stack(out, axis=-1)


def build_correlation_pyramid(feat0: np.ndarray, feat_t: np.ndarray) -> CorrelationPyramid:
    return CorrelationPyramid(feat0, feat_t)
