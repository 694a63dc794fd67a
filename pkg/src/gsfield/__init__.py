"""gsfield: monocular RGB-D video to a re-renderable pseudo-4D Gaussian field.

The pipeline tracks every frame-0 pixel through the video (2D position,
depth, visibility), lifts the tracks into one constant-color Gaussian per
pixel per timestep, and re-renders the result under scheduled camera
intrinsics/extrinsics or rigid object edits.  See the README for the CLI
walkthrough.
"""

from .camera import (
    CameraPose,
    Intrinsics,
    geodesic_angle,
    interpolate_pose,
    project,
    unproject,
)
from .errors import GsfieldError
from .field import (
    GaussianField4D,
    Timestep,
    build_field_from_depth,
    build_field_from_tracks,
    edit_rigid,
    extract_timestep,
    load_field,
    mask_from_image,
    save_field,
)
from .metrics import (
    MetricReport,
    TrackEval,
    average_jaccard_2d,
    average_jaccard_3d,
    delta_avg_2d,
    delta_avg_3d,
    evaluate_images,
    evaluate_tracks,
    occlusion_accuracy,
    psnr,
    ssim,
)
from .renderer import (
    FrameBuffer,
    Splats,
    project_splats,
    render_frame,
    render_splats,
    render_video,
)
from .synth import SceneSpec, SynthScene, generate, sparse_subsample
from .tracking import (
    ClassicalLooseOperator,
    ClassicalTightOperator,
    SparseTracks,
    TrackSet,
    track_video,
)
from .trajectory import (
    ArcballSpec,
    TrajectorySchedule,
    arcball_schedule,
    dolly_zoom_schedule,
    eight_directions,
    identity_schedule,
    keyframe_schedule,
    load_schedule,
    save_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "ArcballSpec",
    "CameraPose",
    "ClassicalLooseOperator",
    "ClassicalTightOperator",
    "FrameBuffer",
    "GaussianField4D",
    "GsfieldError",
    "Intrinsics",
    "MetricReport",
    "SceneSpec",
    "SparseTracks",
    "Splats",
    "SynthScene",
    "Timestep",
    "TrackEval",
    "TrackSet",
    "TrajectorySchedule",
    "arcball_schedule",
    "average_jaccard_2d",
    "average_jaccard_3d",
    "build_field_from_depth",
    "build_field_from_tracks",
    "delta_avg_2d",
    "delta_avg_3d",
    "dolly_zoom_schedule",
    "edit_rigid",
    "eight_directions",
    "evaluate_images",
    "evaluate_tracks",
    "extract_timestep",
    "generate",
    "geodesic_angle",
    "identity_schedule",
    "interpolate_pose",
    "keyframe_schedule",
    "load_field",
    "load_schedule",
    "mask_from_image",
    "occlusion_accuracy",
    "project",
    "project_splats",
    "psnr",
    "render_frame",
    "render_splats",
    "render_video",
    "save_field",
    "save_schedule",
    "sparse_subsample",
    "ssim",
    "track_video",
    "unproject",
    "__version__",
]
