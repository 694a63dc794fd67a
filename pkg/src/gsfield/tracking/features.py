"""Handcrafted matching features.

A deterministic stand-in for a learned feature encoder: grayscale, Sobel
gradients, and census-transform bits, each mapped into [-1, 1] by a fixed
content-independent affine.  Census bits compare each of 7 fixed 3x3
neighbors against the center pixel, which makes the descriptor invariant
to monotone brightness changes and gives the correlation surface a sharp
peak even on smooth textures.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

# 7 of the 8 neighbors of a 3x3 patch, (dy, dx) order. One neighbor is left
# out so the census block stays at 7 bits and F lands on 10 total channels.
CENSUS_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0),
)

# Census responses saturate at this neighbor-center difference.  A hard
# sign would give near-uniform regions (sensor-noise-scale differences)
# the same full-strength pattern as real texture, so faint noise could
# cosine-match textured descriptors almost perfectly; scaling by the
# difference until saturation keeps census nearly binary on texture while
# collapsing to negligible magnitude on almost-flat content.
CENSUS_SOFT_SCALE = 0.02

FEATURE_DIM = 1 + 2 + len(CENSUS_OFFSETS)


def rgb_to_gray(image: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an (H, W, 3) image; (H, W) inputs pass through."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected (H, W, 3) image, got {image.shape}")
    return 0.299 * image[:, :, 0] + 0.587 * image[:, :, 1] + 0.114 * image[:, :, 2]


def _sobel(gray: np.ndarray):
    """Sobel x/y responses with replicate borders (kernel [1,2,1] x [-1,0,1])."""
    p = np.pad(gray, 1, mode="edge")
    # smooth along one axis, difference along the other
    sm_y = p[:-2, :] + 2.0 * p[1:-1, :] + p[2:, :]
    gx = sm_y[:, 2:] - sm_y[:, :-2]
    sm_x = p[:, :-2] + 2.0 * p[:, 1:-1] + p[:, 2:]
    gy = sm_x[2:, :] - sm_x[:-2, :]
    return gx, gy


def build_feature_map(image: np.ndarray) -> np.ndarray:
    """(H, W, 10) feature map: gray, Sobel-x, Sobel-y, 7 census channels.

    Channels are mapped into [-1, 1] by fixed affines: gray is recentred
    at mid-grey, Sobel responses are divided by their maximum attainable
    magnitude, census comparisons scale with the neighbor-center
    difference and saturate at CENSUS_SOFT_SCALE.  The transform is
    deliberately content-independent: a translated copy of some content
    must score cosine 1 against its original no matter what else entered
    or left the frame, which is what lets the refinement operator certify
    a locked match.  Normalizing by per-image statistics instead couples
    every descriptor to global frame content and caps cross-frame scores
    below the certification threshold once the frames no longer share
    most of their pixels.
    """
    gray = rgb_to_gray(image)
    h, w = gray.shape
    gx, gy = _sobel(gray)
    chans = [2.0 * (gray - 0.5), gx / 4.0, gy / 4.0]
    p = np.pad(gray, 1, mode="edge")
    for dy, dx in CENSUS_OFFSETS:
        nb = p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        chans.append(np.clip((nb - gray) / CENSUS_SOFT_SCALE, -1.0, 1.0))
    return np.stack(chans, axis=-1)
