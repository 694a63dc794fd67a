"""Dense 3D point tracking: features, pyramids, update operators, refinement."""

from .dense import (
    MIN_DEPTH,
    SparseTracks,
    TrackSet,
    init_tracks,
    interpolate_sparse_to_dense,
    load_sparse_tracks,
    load_trackset,
    pixel_grid,
    refine_frame,
    save_sparse_tracks,
    save_trackset,
    track_video,
)
from .features import CENSUS_OFFSETS, FEATURE_DIM, build_feature_map, rgb_to_gray
from .operators import (
    DEFAULT_ITERS,
    ClassicalLooseOperator,
    ClassicalTightOperator,
    FrameContext,
    UpdateState,
    classical_update,
)
from .pyramids import (
    DEFAULT_RADIUS,
    NUM_LEVELS,
    CorrelationPyramid,
    Pyramid,
    avg_pool2,
    build_correlation_pyramid,
    build_pyramid,
    lookup_window,
)

__all__ = [
    "MIN_DEPTH",
    "SparseTracks",
    "TrackSet",
    "init_tracks",
    "interpolate_sparse_to_dense",
    "load_sparse_tracks",
    "load_trackset",
    "pixel_grid",
    "refine_frame",
    "save_sparse_tracks",
    "save_trackset",
    "track_video",
    "CENSUS_OFFSETS",
    "FEATURE_DIM",
    "build_feature_map",
    "rgb_to_gray",
    "DEFAULT_ITERS",
    "ClassicalLooseOperator",
    "ClassicalTightOperator",
    "FrameContext",
    "UpdateState",
    "classical_update",
    "DEFAULT_RADIUS",
    "NUM_LEVELS",
    "CorrelationPyramid",
    "Pyramid",
    "avg_pool2",
    "build_correlation_pyramid",
    "build_pyramid",
    "lookup_window",
]
