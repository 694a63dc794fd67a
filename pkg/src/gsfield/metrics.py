"""Tracking and image-quality metrics.

Tracking metrics follow the TAP-Vid conventions: position accuracy as the
fraction of visible points within pixel thresholds {1, 2, 4, 8, 16}
(strict <), occlusion accuracy over binarized visibility, and the average
Jaccard combining both.  The 3D variants replace pixel thresholds with
their metric equivalents at the point's ground-truth depth, delta * z / f.
Image metrics are PSNR and single-scale SSIM on [0, 1] images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

from .errors import (
    EmptyEval,
    InvalidSpec,
    NoVisiblePoints,
    ShapeMismatch,
    TooSmall,
)

THRESHOLDS_PX = (1.0, 2.0, 4.0, 8.0, 16.0)
VIS_BINARIZE = 0.5

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class TrackEval:
    """Prediction/ground-truth pairs for a set of point tracks.

    Positions are (N, T, C) with C = 2 (pixels) or 3 (camera-frame meters),
    visibilities (N, T); `mask` selects which (point, frame) samples count.
    `focal` is required by the 3D metrics to convert pixel thresholds.
    """

    pred_x: np.ndarray
    gt_x: np.ndarray
    pred_v: np.ndarray
    gt_v: np.ndarray
    mask: Optional[np.ndarray] = None
    focal: Optional[float] = None

    def __post_init__(self):
        self.pred_x = np.asarray(self.pred_x, dtype=np.float64)
        self.gt_x = np.asarray(self.gt_x, dtype=np.float64)
        self.pred_v = np.asarray(self.pred_v, dtype=np.float64)
        self.gt_v = np.asarray(self.gt_v).astype(bool)
        if self.pred_x.ndim != 3 or self.pred_x.shape[2] not in (2, 3):
            raise ShapeMismatch(f"positions must be (N, T, 2|3), got {self.pred_x.shape}")
        if self.gt_x.shape != self.pred_x.shape:
            raise ShapeMismatch(f"gt {self.gt_x.shape} vs pred {self.pred_x.shape}")
        nt = self.pred_x.shape[:2]
        if self.pred_v.shape != nt or self.gt_v.shape != nt:
            raise ShapeMismatch(f"visibility must be {nt}")
        if self.mask is None:
            self.mask = np.ones(nt, dtype=bool)
        else:
            self.mask = np.asarray(self.mask).astype(bool)
            if self.mask.shape != nt:
                raise ShapeMismatch(f"mask must be {nt}, got {self.mask.shape}")

    @property
    def dim(self) -> int:
        return self.pred_x.shape[2]

    def errors(self) -> np.ndarray:
        """(N, T) Euclidean position errors."""
        return np.linalg.norm(self.pred_x - self.gt_x, axis=2)

    def pred_visible(self) -> np.ndarray:
        return self.pred_v > VIS_BINARIZE


def _thresholds(ev: TrackEval, want_dim: int):
    """Per-sample threshold array for each base pixel threshold.

    In 2D the threshold is constant; in 3D it scales with the ground-truth
    depth, delta * z_gt / f, the metric size of delta pixels at that depth.
    """
    if ev.dim != want_dim:
        raise ShapeMismatch(f"metric needs {want_dim}-D positions, got {ev.dim}-D")
    if want_dim == 2:
        return [np.full(ev.gt_v.shape, d) for d in THRESHOLDS_PX]
    if ev.focal is None:
        raise InvalidSpec("3D metrics require TrackEval.focal")
    z = ev.gt_x[..., 2]
    return [d * z / ev.focal for d in THRESHOLDS_PX]


def _delta_avg(ev: TrackEval, want_dim: int) -> float:
    sel = ev.mask & ev.gt_v
    n = int(np.count_nonzero(sel))
    if n == 0:
        raise NoVisiblePoints("no ground-truth-visible points to evaluate")
    err = ev.errors()
    fracs = [np.count_nonzero(sel & (err < thr)) / n for thr in _thresholds(ev, want_dim)]
    return float(np.mean(fracs))


def delta_avg_2d(ev: TrackEval) -> float:
    """Mean over thresholds {1,2,4,8,16} px of the fraction of visible
    points tracked within that threshold."""
    return _delta_avg(ev, 2)


def delta_avg_3d(ev: TrackEval) -> float:
    """3D position accuracy with depth-scaled thresholds (APD)."""
    return _delta_avg(ev, 3)


def occlusion_accuracy(ev: TrackEval) -> float:
    """Fraction of evaluated samples whose binarized predicted visibility
    matches the ground truth."""
    n = int(np.count_nonzero(ev.mask))
    if n == 0:
        raise EmptyEval("mask selects no samples")
    agree = ev.mask & (ev.pred_visible() == ev.gt_v)
    return int(np.count_nonzero(agree)) / n


def _average_jaccard(ev: TrackEval, want_dim: int) -> float:
    if not ev.mask.any():
        raise EmptyEval("mask selects no samples")
    err = ev.errors()
    pv = ev.pred_visible()
    gv = ev.gt_v
    jaccards = []
    for thr in _thresholds(ev, want_dim):
        close = err < thr
        # a predicted-visible point that is GT-visible but too far counts
        # as both a false positive and a false negative
        tp = int(np.count_nonzero(ev.mask & gv & pv & close))
        fp = int(np.count_nonzero(ev.mask & pv & (~gv | ~close)))
        fn = int(np.count_nonzero(ev.mask & gv & (~pv | ~close)))
        denom = tp + fp + fn
        # no claimed and no required detections: vacuously perfect
        jaccards.append(tp / denom if denom > 0 else 1.0)
    return float(np.mean(jaccards))


def average_jaccard_2d(ev: TrackEval) -> float:
    """Mean Jaccard over thresholds: TP / (TP + FP + FN), where a true
    positive is GT-visible, predicted visible, and within threshold."""
    return _average_jaccard(ev, 2)


def average_jaccard_3d(ev: TrackEval) -> float:
    """Average Jaccard with depth-scaled 3D thresholds (3D-AJ)."""
    return _average_jaccard(ev, 3)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(1 / MSE) for [0,1] images; math.inf when identical."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _luma(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        w = np.asarray(LUMA_WEIGHTS)
        return img @ w
    raise ShapeMismatch(f"expected (H, W) or (H, W, 3), got {img.shape}")


def _gaussian_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    x = np.arange(SSIM_WINDOW, dtype=np.float64) - half
    g = np.exp(-(x**2) / (2.0 * SSIM_SIGMA**2))
    return g / g.sum()


def _windowed_mean(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gaussian-weighted local means, restricted to fully interior windows."""
    half = SSIM_WINDOW // 2
    out = correlate1d(img, g, axis=0, mode="nearest")
    out = correlate1d(out, g, axis=1, mode="nearest")
    return out[half:-half, half:-half]


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over an 11x11 Gaussian window (sigma 1.5).

    Color images are compared on Rec.601 luma; only windows that fit
    entirely inside the image contribute.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    x = _luma(a)
    y = _luma(b)
    if min(x.shape) < SSIM_WINDOW:
        raise TooSmall(f"image {x.shape} smaller than the {SSIM_WINDOW}px window")
    g = _gaussian_window()
    mu_x = _windowed_mean(x, g)
    mu_y = _windowed_mean(y, g)
    var_x = _windowed_mean(x * x, g) - mu_x**2
    var_y = _windowed_mean(y * y, g) - mu_y**2
    cov = _windowed_mean(x * y, g) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    """One named scalar result with its sample count."""

    metric: str
    value: Optional[float]
    n: int
    infinite: bool = False

    def __post_init__(self):
        if self.value is not None and math.isinf(self.value):
            self.value = None
            self.infinite = True

    def to_dict(self) -> dict:
        out = {"metric": self.metric, "value": self.value, "n": self.n}
        if self.infinite:
            out["infinite"] = True
        return out


def evaluate_tracks(ev2d: TrackEval, ev3d: Optional[TrackEval] = None) -> list:
    """The standard tracking report: delta averages, OA, and Jaccards."""
    n = int(np.count_nonzero(ev2d.mask))
    reports = [
        MetricReport("delta_avg_2d", delta_avg_2d(ev2d), n),
        MetricReport("occlusion_accuracy", occlusion_accuracy(ev2d), n),
        MetricReport("average_jaccard_2d", average_jaccard_2d(ev2d), n),
    ]
    if ev3d is not None:
        n3 = int(np.count_nonzero(ev3d.mask))
        reports.append(MetricReport("delta_avg_3d", delta_avg_3d(ev3d), n3))
        reports.append(MetricReport("average_jaccard_3d", average_jaccard_3d(ev3d), n3))
    return reports


def evaluate_images(a: np.ndarray, b: np.ndarray) -> list:
    """PSNR and SSIM between two image stacks or single images.

    Stacks report PSNR of the pooled MSE and the mean per-frame SSIM.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 4:
        n = a.shape[0]
        ss = float(np.mean([ssim(x, y) for x, y in zip(a, b)]))
    else:
        n = 1
        ss = ssim(a, b)
    return [MetricReport("psnr", psnr(a, b), n), MetricReport("ssim", ss, n)]
