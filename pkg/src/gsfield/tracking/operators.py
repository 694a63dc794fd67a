"""Per-iteration update operators for track refinement.

The refinement loop is agnostic to how residuals are produced: it crops
correlation and depth windows at the current positions and hands them to an
operator that returns (dx, dv, dd) plus its carried state.  The classical
operator here is a deterministic closed-form stand-in for a learned one; a
learned operator would plug in through the same interface.

Two variants realize the two depth-coupling strategies:

  * loose (default) — depth enters only through the depth window, so the
    2D matching term never sees depth; dx and dv are bitwise independent
    of any positive affine rescaling of the input depth map.
  * tight — a zero-meaned depth channel is concatenated into the matching
    features, deliberately breaking that independence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeMismatch
from .features import build_feature_map
from .pyramids import (
    DEFAULT_RADIUS,
    CorrelationPyramid,
    Pyramid,
    build_correlation_pyramid,
    build_pyramid,
)

DEFAULT_ITERS = 8
DEFAULT_TAU = 0.05
DEFAULT_LAMBDA = 0.5
DEFAULT_VIS_THRESH = 0.5
DEFAULT_VIS_RATE = 0.5

# Correlation scores are cosines; clip before arctanh so a perfect match
# stays finite (arctanh(1 - 1e-12) ~ 14.4).
SCORE_CLIP = 1.0 - 1e-12
# A peak this high certifies the point sits on an exact content match, so
# no probe episode is started (and a static scene is an exact fixed point).
# The margin below 1 only absorbs floating-point rounding: smooth textures
# produce near-duplicate descriptors one pixel apart with cosines above
# 0.9999, and any threshold lenient enough to admit those would freeze
# points onto off-by-a-few-px ridges with no probe rescue.
PEAK_LOCK = 1.0 - 1e-9
# A probe position is adopted outright only if it beats the best peak seen
# so far by this much (or clears PEAK_LOCK); smaller gains are remembered
# but re-verified against later probes.
PROBE_MARGIN = 0.05

# Hidden-state lanes used by the classical operator's probe episodes.
H_PHASE, H_DONE, H_RELX, H_RELY = 0, 1, 2, 3
H_BESTX, H_BESTY, H_BESTPEAK, H_PROBE = 4, 5, 6, 7
HIDDEN_SLOTS = 8
REL = slice(H_RELX, H_RELY + 1)
BEST = slice(H_BESTX, H_BESTY + 1)

DEFAULT_HIDDEN_DIM = HIDDEN_SLOTS


@dataclass
class UpdateState:
    """Carried per-point state: hidden vector bank plus the iteration index.

    The classical operator uses the first HIDDEN_SLOTS lanes for its probe
    bookkeeping (phase flag, episode-spent flag, frame-relative position,
    best position/peak seen, probe index); a learned operator may size and
    use the bank however it likes through the same refinement loop.
    """

    hidden: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class FrameContext:
    """Per-(frame 0, frame t) lookup structures built once per frame."""

    corr: CorrelationPyramid
    depth: Pyramid


def classical_update(
    corr_window: np.ndarray,
    depth_window: np.ndarray,
    state: UpdateState,
    d: np.ndarray,
    *,
    tau: float = DEFAULT_TAU,
    lam: float = DEFAULT_LAMBDA,
    vis_thresh: float = DEFAULT_VIS_THRESH,
    vis_rate: float = DEFAULT_VIS_RATE,
):
    """Closed-form residuals from correlation and depth windows.

    dx: softmax centroid (temperature `tau`) of the level-0 window's
        integer offsets, weighted by the standardized Fisher transform of
        the correlation scores.  arctanh maps cosine scores onto an
        additive scale where near-1 peaks stay separable, and per-window
        standardization makes the weights invariant to texture contrast.
        The peak's margin is many `tau` in practice, so the centroid sits
        essentially on the argmax and a point already at its optimum does
        not move.  A flat window (all scores equal) degenerates to dx = 0.

    Local descent alone strands points whose correlation field is a
    smooth saddle or a duplicated-texture ridge, so every point gets one
    probe episode per frame: from iteration 1 on, a point whose peak is
    below PEAK_LOCK jumps to +/-(radius+1) px along x (frame-relative,
    tracked in `hidden`), remembers the best peak seen, and finally
    returns to it unless some probe clears PEAK_LOCK or beats the best by
    PROBE_MARGIN outright.  Certified points never probe, which keeps a
    static scene an exact fixed point.  dv and dd are zeroed while a
    probe is in flight because windows sampled at probe positions say
    nothing about the point's settled location.

    dv: +/- vis_rate depending on whether the level-0 peak clears
        `vis_thresh`; the caller clamps v to [0, 1].
    dd: lam * (level-0 depth sampled at the current position - d), the
        read-from-the-target-depth-map rule: depth never enters dx/dv.

    Windows are (N, K, K, L) with rows indexing vertical offsets; returns
    (dx (N,2), dv (N,), dd (N,), state).
    """
    corr_window = np.asarray(corr_window, dtype=np.float64)
    depth_window = np.asarray(depth_window, dtype=np.float64)
    if corr_window.ndim != 4 or depth_window.ndim != 4:
        raise ShapeMismatch("windows must be (N, K, K, L)")
    n, k = corr_window.shape[0], corr_window.shape[1]
    r = (k - 1) // 2
    scores = corr_window[:, :, :, 0]
    peak = scores.max(axis=(1, 2))
    flat = (scores == scores[:, :1, :1]).all(axis=(1, 2))

    z = np.arctanh(np.clip(scores, -SCORE_CLIP, SCORE_CLIP))
    mu = z.mean(axis=(1, 2))[:, None, None]
    sd = z.std(axis=(1, 2))[:, None, None]
    sd = np.where(sd < 1e-12, 1.0, sd)
    zn = (z - mu) / sd
    w = np.exp((zn - zn.max(axis=(1, 2))[:, None, None]) / tau)
    w /= w.sum(axis=(1, 2))[:, None, None]
    offs = np.arange(k, dtype=np.float64) - r
    dx = np.stack(
        [np.einsum("nij,j->n", w, offs), np.einsum("nij,i->n", w, offs)], axis=-1
    )
    # Sub-nanopixel centroid residuals are softmax tail leak, not signal.
    # Zeroing them makes a certified lock an exactly stationary fixed
    # point; otherwise a near-duplicate cell bleeds ~1e-12 px per call and
    # the drift compounds across chained frames until the lock breaks.
    dx[np.einsum("nc,nc->n", dx, dx) < 1e-18] = 0.0

    hid = state.hidden
    if (
        not isinstance(hid, np.ndarray)
        or hid.ndim != 2
        or hid.shape[0] != n
        or hid.shape[1] < HIDDEN_SLOTS
    ):
        hid = np.zeros((n, HIDDEN_SLOTS))
    else:
        hid = hid.copy()
    step = float(r + 1)
    probes = np.array([[step, 0.0], [-step, 0.0]])
    gate = np.ones(n, dtype=bool)
    won = np.zeros(n, dtype=bool)

    # Resolve in-flight probes: adopt, advance to the next probe, or give
    # up and return to the best position seen.
    pend = hid[:, H_PHASE] == 1.0
    if pend.any():
        pi = np.nonzero(pend)[0]
        best = hid[pi, H_BESTPEAK]
        hit = ((peak[pi] >= PEAK_LOCK) & (peak[pi] > best)) | (peak[pi] >= best + PROBE_MARGIN)
        wi = pi[hit]
        hid[wi, H_PHASE] = 0.0
        won[wi] = True
        ui = pi[~hit]
        if ui.size:
            better = peak[ui] > hid[ui, H_BESTPEAK]
            bi = ui[better]
            hid[bi, BEST] = hid[bi, REL]
            hid[bi, H_BESTPEAK] = peak[bi]
            nxt = hid[ui, H_PROBE] + 1.0
            more = nxt < len(probes)
            mi = ui[more]
            hid[mi, H_PROBE] = nxt[more]
            tgt = probes[nxt[more].astype(int)]
            dx[mi] = tgt - hid[mi, REL]
            hid[mi, REL] = tgt
            si = ui[~more]
            dx[si] = hid[si, BEST] - hid[si, REL]
            hid[si, REL] = hid[si, BEST]
            hid[si, H_PHASE] = 0.0
            gate[ui] = False

    # Launch at most one episode per point per frame, never from the first
    # iteration (the initial window has not produced a centroid step yet)
    # and never for flat or already-certified windows.
    arm = (
        (hid[:, H_PHASE] == 0.0)
        & (hid[:, H_DONE] == 0.0)
        & (state.iteration >= 1)
        & (peak < PEAK_LOCK)
        & ~flat
        & ~pend
    )
    if arm.any():
        hid[arm, H_PHASE] = 1.0
        hid[arm, H_DONE] = 1.0
        hid[arm, BEST] = hid[arm, REL]
        hid[arm, H_BESTPEAK] = peak[arm]
        hid[arm, H_PROBE] = 0.0
        dx[arm] = probes[0] - hid[arm, REL]
        hid[arm, REL] = probes[0]
        gate[arm] = False

    dx[flat] = 0.0
    moved = (~pend & ~arm) | won
    hid[moved, REL] += dx[moved]

    dv = np.where(peak >= vis_thresh, vis_rate, -vis_rate)
    dd = lam * (depth_window[:, r, r, 0] - np.asarray(d, dtype=np.float64))
    dv = np.where(gate, dv, 0.0)
    dd = np.where(gate, dd, 0.0)
    return dx, dv, dd, UpdateState(hid, state.iteration + 1)


class ClassicalLooseOperator:
    """Default operator: classical residuals, loosely-coupled depth."""

    def __init__(
        self,
        radius: int = DEFAULT_RADIUS,
        tau: float = DEFAULT_TAU,
        lam: float = DEFAULT_LAMBDA,
        vis_thresh: float = DEFAULT_VIS_THRESH,
        vis_rate: float = DEFAULT_VIS_RATE,
        hidden_dim: int = DEFAULT_HIDDEN_DIM,
    ):
        if radius < 1:
            raise ConfigError(f"radius must be >= 1, got {radius}")
        if hidden_dim < HIDDEN_SLOTS:
            raise ConfigError(
                f"hidden_dim must be >= {HIDDEN_SLOTS} (probe bookkeeping), got {hidden_dim}"
            )
        self.radius = radius
        self.tau = tau
        self.lam = lam
        self.vis_thresh = vis_thresh
        self.vis_rate = vis_rate
        self.hidden_dim = hidden_dim

    def prepare(self, frame0, frame_t, depth_t, depth0=None) -> FrameContext:
        corr = build_correlation_pyramid(build_feature_map(frame0), build_feature_map(frame_t))
        return FrameContext(corr, build_pyramid(depth_t))

    def init_state(self, n: int) -> UpdateState:
        return UpdateState(np.zeros((n, self.hidden_dim)), 0)

    def update(self, corr_window, depth_window, state, d):
        return classical_update(
            corr_window,
            depth_window,
            state,
            d,
            tau=self.tau,
            lam=self.lam,
            vis_thresh=self.vis_thresh,
            vis_rate=self.vis_rate,
        )


class ClassicalTightOperator(ClassicalLooseOperator):
    """Ablation variant: depth concatenated into the matching features.

    The extra channel is the zero-meaned depth map in meters (not variance
    normalized, so affine depth changes genuinely move the features).
    """

    def prepare(self, frame0, frame_t, depth_t, depth0=None) -> FrameContext:
        if depth0 is None:
            raise ConfigError("tight coupling needs the reference-frame depth map")
        f0 = self._with_depth_channel(build_feature_map(frame0), depth0)
        ft = self._with_depth_channel(build_feature_map(frame_t), depth_t)
        return FrameContext(build_correlation_pyramid(f0, ft), build_pyramid(depth_t))

    @staticmethod
    def _with_depth_channel(feat, depth):
        depth = np.asarray(depth, dtype=np.float64)
        if depth.shape != feat.shape[:2]:
            raise ShapeMismatch(f"depth {depth.shape} does not match features {feat.shape}")
        return np.concatenate([feat, (depth - depth.mean())[:, :, None]], axis=-1)
